//! Deficiency `delta(Phi, Psi) = min_alpha ||Phi - alpha o Psi||_diamond` of a
//! channel with respect to another one on the same input, its minimax witness,
//! and randomized checks of the guessing-probability characterizations.

use rand::Rng;
use serde::Serialize;

use crate::discrimination::{
    ensemble_from_cp_map, optimal_povm_value, psucc, push_ensemble, Ensemble, EnsembleItem, Povm,
};
use crate::error::{Error, Result};
use crate::linalg::{kron, real_span_rank, CMatrix};
use crate::maps::{adjoint, compose, pairing, project_to_channel, HermitianMap, CHAN_TOL};
use crate::norms::{clamp, cq_norms, dual_diamond_norm_cp, ident, negate, trace_first};
use crate::random::{self, trial_rng};
use crate::sdp::{solve_certified, Certificate, Certified, SdpBuilder, Sense, SolveStatus};

/// Largest allowed change when the optimal post-processing is projected back
/// onto the channels.
pub const SHIFT_TOL: f64 = 1e-7;

#[derive(Clone, Debug, Serialize)]
pub struct DeficiencyResult {
    pub value: f64,
    /// Channel `alpha: K' -> K` attaining the minimum.
    pub optimal_postprocessing: HermitianMap,
    /// CP map `gamma: K -> H` with `||gamma||^diamond <= 1` attaining
    /// `2 (<gamma, Phi> - ||Psi o gamma||^diamond)`.
    pub witness: HermitianMap,
    pub witness_value: f64,
    /// Largest discrepancy between `value`, `witness_value` and the witness
    /// objective re-evaluated from `gamma`.
    pub certified_gap: f64,
    pub certificate: Certificate,
}

fn check_pair(phi: &HermitianMap, psi: &HermitianMap) -> Result<()> {
    phi.require_channel(CHAN_TOL)?;
    psi.require_channel(CHAN_TOL)?;
    if phi.d_in() != psi.d_in() {
        return Err(Error::dims(format!("input dimensions differ: {} and {}", phi.d_in(), psi.d_in())));
    }
    Ok(())
}

fn map_of(d_in: usize, d_out: usize, choi: &CMatrix) -> HermitianMap {
    HermitianMap::from_choi(d_in, d_out, choi.clone()).expect("basis matrices are Hermitian")
}

/// Main program: blocks `A = C(alpha)` and `S_-+ = C(beta) +- (C(Phi) - C(alpha o Psi))`.
fn primal(phi: &HermitianMap, psi: &HermitianMap) -> Result<(f64, HermitianMap, Certificate)> {
    let (dh, dk, dk2) = (phi.d_in(), phi.d_out(), psi.d_out());
    let n = dk * dh;
    let mut b = SdpBuilder::new(Sense::Minimize);
    let a = b.block(dk * dk2);
    let sp = b.block(n);
    let sm = b.block(n);
    let obj = CMatrix::identity(n).scale(1.0 / (2.0 * dh as f64));
    b.objective(sp, &obj);
    b.objective(sm, &obj);
    b.matrix_constraint(dk2, &[(a, &trace_first(dk, dk2))], &CMatrix::identity(dk2));
    let link = |x: &CMatrix| compose(&map_of(dk2, dk, x), psi).expect("dimensions checked").into_choi().scale(2.0);
    b.matrix_constraint(n, &[(sm, &ident), (sp, &negate), (a, &link)], &phi.choi().scale(2.0));
    let tr_k = trace_first(dk, dh);
    b.traceless_constraint(dh, &[(sp, &tr_k), (sm, &tr_k)], &CMatrix::zeros(dh, dh));
    let (s, mut certificate) = solve_certified(&b.build())?;
    let (alpha, shift) = project_to_channel(dk2, dk, s.block(a))?;
    if shift > SHIFT_TOL && certificate.is_optimal() {
        log::warn!("post-processing moved by {shift:.2e} when projected onto channels");
        certificate.status = SolveStatus::MaxIter;
    }
    Ok((clamp(s.primal_value), alpha, certificate))
}

/// Witness program over `G = C(gamma)`, `rho` and `tau`:
/// `max 2(<gamma, Phi> - Tr tau)` s.t. `rho (x) I >= G`, `Tr rho <= 1`,
/// `tau (x) I >= C(Psi o gamma)`.
fn witness(phi: &HermitianMap, psi: &HermitianMap) -> Result<(f64, HermitianMap, Certificate)> {
    let (dh, dk, dk2) = (phi.d_in(), phi.d_out(), psi.d_out());
    let n = dh * dk;
    let m = dk2 * dk;
    let mut b = SdpBuilder::new(Sense::Maximize);
    let g = b.block(n);
    let s_rho = b.block(n);
    let rho = b.block(dh);
    let s = b.block(1);
    let tau = b.block(dk2);
    let s_tau = b.block(m);
    b.objective_fn(g, |x| 2.0 * pairing(&map_of(dk, dh, x), phi).expect("dimensions checked"));
    b.objective(tau, &CMatrix::identity(dk2).scale(-2.0));
    let id_k = CMatrix::identity(dk);
    let lift = |x: &CMatrix| -kron(x, &id_k);
    b.matrix_constraint(n, &[(g, &ident), (s_rho, &ident), (rho, &lift)], &CMatrix::zeros(n, n));
    b.scalar_constraint(&[(rho, CMatrix::identity(dh)), (s, CMatrix::identity(1))], 1.0);
    let push = |x: &CMatrix| compose(psi, &map_of(dk, dh, x)).expect("dimensions checked").into_choi();
    b.matrix_constraint(m, &[(s_tau, &ident), (g, &push), (tau, &lift)], &CMatrix::zeros(m, m));
    let (sol, certificate) = solve_certified(&b.build())?;
    let gamma = HermitianMap::from_choi(dk, dh, crate::linalg::psd_clip(sol.block(g)))?;
    Ok((clamp(sol.primal_value), gamma, certificate))
}

/// `delta(Phi, Psi)` with the optimal post-processing and the minimax witness.
pub fn deficiency(phi: &HermitianMap, psi: &HermitianMap) -> Result<DeficiencyResult> {
    check_pair(phi, psi)?;
    let (value, alpha, c1) = primal(phi, psi)?;
    let (witness_value, gamma, c2) = witness(phi, psi)?;
    let inner = dual_diamond_norm_cp(&compose(psi, &gamma)?)?;
    let reeval = 2.0 * (pairing(&gamma, phi)? - inner.value);
    let certified_gap = (value - witness_value).abs().max((value - reeval).abs());
    Ok(DeficiencyResult {
        value,
        optimal_postprocessing: alpha,
        witness: gamma,
        witness_value,
        certified_gap,
        certificate: c1.merge(&c2).merge(&inner.certificate),
    })
}

/// `delta(Phi, Psi)` from the main program only.
pub fn deficiency_value(phi: &HermitianMap, psi: &HermitianMap) -> Result<Certified> {
    check_pair(phi, psi)?;
    let (value, _, certificate) = primal(phi, psi)?;
    Ok(Certified { value, certificate })
}

/// The witness side alone: `(gamma, 2 max_gamma (<gamma, Phi> - ||Psi o gamma||^diamond))`.
pub fn deficiency_witness(phi: &HermitianMap, psi: &HermitianMap) -> Result<(HermitianMap, Certified)> {
    check_pair(phi, psi)?;
    let (value, gamma, certificate) = witness(phi, psi)?;
    Ok((gamma, Certified { value, certificate }))
}

/// `Delta(Phi, Psi) = max(delta(Phi, Psi), delta(Psi, Phi))`.
pub fn lecam_distance(phi: &HermitianMap, psi: &HermitianMap) -> Result<Certified> {
    let a = deficiency_value(phi, psi)?;
    let b = deficiency_value(psi, phi)?;
    Ok(Certified { value: a.value.max(b.value), certificate: a.certificate.merge(&b.certificate) })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct DataProcessing {
    pub delta_1: f64,
    pub delta_2: f64,
    pub holds: bool,
}

/// `(delta(beta o Phi_2, Psi), delta(Phi_2, Psi))`; the first may not exceed the second.
pub fn data_processing_check(phi2: &HermitianMap, psi: &HermitianMap, beta: &HermitianMap) -> Result<DataProcessing> {
    let phi1 = compose(beta, phi2)?;
    let delta_1 = deficiency_value(&phi1, psi)?.value;
    let delta_2 = deficiency_value(phi2, psi)?.value;
    Ok(DataProcessing { delta_1, delta_2, holds: delta_1 <= delta_2 + 1e-7 })
}

/// `(delta(Phi, beta o Psi_2), delta(Phi, Psi_2))`; the first may not be smaller.
pub fn data_processing_check_dual(
    phi: &HermitianMap,
    psi2: &HermitianMap,
    beta: &HermitianMap,
) -> Result<DataProcessing> {
    let psi1 = compose(beta, psi2)?;
    let delta_1 = deficiency_value(phi, &psi1)?.value;
    let delta_2 = deficiency_value(phi, psi2)?.value;
    Ok(DataProcessing { delta_1, delta_2, holds: delta_1 >= delta_2 - 1e-7 })
}

#[derive(Clone, Debug, Serialize)]
pub struct PovmGap {
    /// `min_N ||phi^qc_{Phi*(M)} - phi^qc_{Psi*(N)}||_diamond`.
    pub gap: Certified,
    pub povm: Povm,
}

/// Best approximation of the measurement `Phi*(M)` by pre-processed
/// measurements `Psi*(N)`, in diamond norm.
///
/// For qc-maps the diamond program can keep `beta` classical, giving blocks
/// `P_i, Q_i` on `H` with `Q_i - P_i = 2(Phi*(M_i) - Psi*(N_i))`.
pub fn povm_postprocessing_gap(phi: &HermitianMap, psi: &HermitianMap, m: &Povm) -> Result<PovmGap> {
    check_pair(phi, psi)?;
    let (dh, dk, dk2) = (phi.d_in(), phi.d_out(), psi.d_out());
    if m.dim() != dk {
        return Err(Error::dims(format!("POVM acts on C^{}, channel outputs C^{dk}", m.dim())));
    }
    let phi_adj = adjoint(phi);
    let psi_adj = adjoint(psi);
    let pull = |x: &CMatrix| psi_adj.apply(x).expect("dimensions checked").scale(2.0);
    let mut b = SdpBuilder::new(Sense::Minimize);
    let obj = CMatrix::identity(dh).scale(1.0 / (2.0 * dh as f64));
    let mut ns = Vec::new();
    let mut pq = Vec::new();
    for mi in m.elements() {
        let n = b.block(dk2);
        let p = b.block(dh);
        let q = b.block(dh);
        b.objective(p, &obj);
        b.objective(q, &obj);
        b.matrix_constraint(dh, &[(q, &ident), (p, &negate), (n, &pull)], &phi_adj.apply(mi)?.scale(2.0));
        ns.push(n);
        pq.push(p);
        pq.push(q);
    }
    let sum_n: Vec<_> = ns.iter().map(|&n| (n, &ident as &dyn Fn(&CMatrix) -> CMatrix)).collect();
    b.matrix_constraint(dk2, &sum_n, &CMatrix::identity(dk2));
    let sum_pq: Vec<_> = pq.iter().map(|&x| (x, &ident as &dyn Fn(&CMatrix) -> CMatrix)).collect();
    b.traceless_constraint(dh, &sum_pq, &CMatrix::zeros(dh, dh));
    let (s, certificate) = solve_certified(&b.build())?;
    let povm = Povm::repaired(&ns.iter().map(|&n| s.block(n).clone()).collect::<Vec<_>>())?;
    Ok(PovmGap { gap: Certified { value: clamp(s.primal_value), certificate }, povm })
}

/// Largest sampled violations of the four no-ancilla comparison statements at
/// a fixed number `k` of outcomes. The first three are lower bounds on the
/// smallest admissible `epsilon`; the last is `max_M gap(M) / 2` over sampled
/// POVMs, which include the optimal measurements of the sampled ensembles.
#[derive(Clone, Debug, Serialize)]
pub struct ClassicalScan {
    pub k: usize,
    pub trials: usize,
    pub ensembles: f64,
    pub positive_collections: f64,
    pub hermitian_collections: f64,
    pub povm_gaps: f64,
    /// `ensembles <= povm_gaps + 1e-6`.
    pub consistent: bool,
}

fn push_collection(phi: &HermitianMap, f: &[CMatrix]) -> Result<Vec<CMatrix>> {
    f.iter().map(|x| phi.apply(x)).collect()
}

pub fn classical_comparison_scan(
    phi: &HermitianMap,
    psi: &HermitianMap,
    k: usize,
    trials: usize,
    seed: u64,
) -> Result<ClassicalScan> {
    check_pair(phi, psi)?;
    if k == 0 || trials == 0 {
        return Err(Error::InvalidInput("k and trials must be positive".into()));
    }
    let (dh, dk) = (phi.d_in(), phi.d_out());
    let mut stats = [f64::NEG_INFINITY; 4];
    for t in 0..trials {
        let mut r = trial_rng(seed, t as u64);
        let w = random::probability(&mut r, k);
        let states: Vec<_> = (0..k).map(|_| random::state(&mut r, dh)).collect();
        let e = Ensemble::from_parts(&w, &states)?;
        let base = psucc(&e)?.value;
        let on_phi = psucc(&push_ensemble(phi, &e, 1)?)?;
        let on_psi = psucc(&push_ensemble(psi, &e, 1)?)?.value;
        stats[0] = stats[0].max((on_phi.value - on_psi) / base);

        let f: Vec<_> = (0..k).map(|_| random::cp_map(&mut r, 1, dh, dh).into_choi()).collect();
        let a = cq_norms(&push_collection(phi, &f)?)?.dual.value;
        let b = cq_norms(&push_collection(psi, &f)?)?.dual.value;
        let c = cq_norms(&f)?.dual.value;
        stats[1] = stats[1].max((a - b) / c);

        let h: Vec<_> = (0..k).map(|_| random::hermitian(&mut r, dh)).collect();
        let a = optimal_povm_value(&push_collection(phi, &h)?)?.0.value;
        let b = optimal_povm_value(&push_collection(psi, &h)?)?.0.value;
        let c = cq_norms(&h)?.dual.value;
        stats[2] = stats[2].max((a - b) / (2.0 * c));

        let sampled = Povm::repaired(&random::povm(&mut r, dk, k))?;
        for m in [sampled, on_phi.povm] {
            stats[3] = stats[3].max(povm_postprocessing_gap(phi, psi, &m)?.gap.value / 2.0);
        }
    }
    Ok(ClassicalScan {
        k,
        trials,
        ensembles: stats[0],
        positive_collections: stats[1],
        hermitian_collections: stats[2],
        povm_gaps: stats[3],
        consistent: stats[0] <= stats[3] + 1e-6,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct Thm1Report {
    pub delta: f64,
    pub witness_value: f64,
    /// `|delta - witness_value|`.
    pub minimax_gap: f64,
    /// Smallest `||Psi o gamma||^d + (delta/2)||gamma||^d - ||Phi o gamma||^d` over sampled `gamma`.
    pub min_slack_maps: f64,
    /// Smallest guessing-probability slack over the ensembles `E_gamma`.
    pub min_slack_ensembles: f64,
    /// `delta/2 - (||Phi o gamma*||^d - ||Psi o gamma*||^d)` for the witness `gamma*`.
    pub witness_saturation: f64,
    pub trials: usize,
    pub violations: usize,
    pub certificate: Certificate,
}

fn ensemble_slack(phi: &HermitianMap, psi: &HermitianMap, e: &Ensemble, anc: usize, eps: f64) -> Result<f64> {
    let a = psucc(&push_ensemble(phi, e, anc)?)?.value;
    let b = psucc(&push_ensemble(psi, e, anc)?)?.value;
    Ok(b + eps * psucc(e)?.value - a)
}

/// Samples CP maps `gamma: K -> H` and checks both characterizations of
/// `delta(Phi, Psi) <= delta` at the computed `delta`, on the maps and on their
/// equiprobable ensembles with ancilla `K`.
pub fn thm1_verify(phi: &HermitianMap, psi: &HermitianMap, trials: usize, seed: u64, tol: f64) -> Result<Thm1Report> {
    let d = deficiency(phi, psi)?;
    let (dh, dk) = (phi.d_in(), phi.d_out());
    let half = d.value / 2.0;
    let norm = |m: &HermitianMap| -> Result<f64> { Ok(dual_diamond_norm_cp(m)?.value) };
    let map_slack =
        |g: &HermitianMap| -> Result<f64> { Ok(norm(&compose(psi, g)?)? + half * norm(g)? - norm(&compose(phi, g)?)?) };
    let mut min_maps = f64::INFINITY;
    let mut min_ens = f64::INFINITY;
    let mut violations = 0;
    let mut gammas = Vec::with_capacity(trials + 1);
    for t in 0..trials {
        let mut r = trial_rng(seed, t as u64);
        let rank = r.gen_range(1..=dh * dk);
        gammas.push(random::cp_map(&mut r, dk, dh, rank));
    }
    if d.witness.choi().trace_re() > 1e-9 {
        gammas.push(d.witness.clone());
    }
    for g in &gammas {
        let s = map_slack(g)?;
        let e = ensemble_slack(phi, psi, &ensemble_from_cp_map(g)?, dk, half)?;
        violations += usize::from(s < -tol) + usize::from(e < -tol);
        min_maps = min_maps.min(s);
        min_ens = min_ens.min(e);
    }
    let w = &d.witness;
    let saturation = half - (norm(&compose(phi, w)?)? - norm(&compose(psi, w)?)?);
    let minimax_gap = (d.value - d.witness_value).abs();
    violations += usize::from(minimax_gap > tol);
    violations += usize::from(d.value > tol && saturation.abs() > tol);
    Ok(Thm1Report {
        delta: d.value,
        witness_value: d.witness_value,
        minimax_gap,
        min_slack_maps: min_maps,
        min_slack_ensembles: min_ens,
        witness_saturation: saturation,
        trials,
        violations,
        certificate: d.certificate,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct Coro1Report {
    pub delta: f64,
    /// Largest `P_succ((Phi (x) id)(E)) - P_succ((Psi (x) id)(E))` found.
    pub max_gap: f64,
    pub trials: usize,
    /// True when `delta` vanishes but a gap above `1e-6` was found.
    pub violation: bool,
}

/// Checks that `spanning` spans the Hermitian matrices on its space.
pub fn require_spanning(states: &[CMatrix]) -> Result<usize> {
    let d = states.first().ok_or(Error::NotSpanning { rank: 0, needed: 1 })?.rows();
    if states.iter().any(|s| s.rows() != d || s.cols() != d) {
        return Err(Error::dims("spanning states must share one size"));
    }
    let rank = real_span_rank(states);
    if rank < d * d {
        return Err(Error::NotSpanning { rank, needed: d * d });
    }
    Ok(d)
}

/// Compares guessing probabilities on ensembles of the separable form
/// `rho_i = sum_j rho^i_j (x) sigma_j` with `sigma_j` from a spanning family.
pub fn thm2_coro1_scan(
    phi: &HermitianMap,
    psi: &HermitianMap,
    spanning: &[CMatrix],
    trials: usize,
    seed: u64,
) -> Result<Coro1Report> {
    check_pair(phi, psi)?;
    let d0 = require_spanning(spanning)?;
    let delta = deficiency_value(phi, psi)?.value;
    let dh = phi.d_in();
    let mut max_gap = f64::NEG_INFINITY;
    for t in 0..trials {
        let mut r = trial_rng(seed, t as u64);
        let k = 2 + t % 3;
        let w = random::probability(&mut r, k);
        let items = w
            .into_iter()
            .map(|weight| {
                let c = random::probability(&mut r, spanning.len());
                let mut state = CMatrix::zeros(dh * d0, dh * d0);
                for (cj, sj) in c.iter().zip(spanning) {
                    state.axpy(*cj, &kron(&random::pure_state(&mut r, dh), sj));
                }
                EnsembleItem { weight, state }
            })
            .collect();
        let e = Ensemble::new(items)?;
        let a = psucc(&push_ensemble(phi, &e, d0)?)?.value;
        let b = psucc(&push_ensemble(psi, &e, d0)?)?.value;
        max_gap = max_gap.max(a - b);
    }
    Ok(Coro1Report { delta, max_gap, trials, violation: delta <= 1e-7 && max_gap > 1e-6 })
}
