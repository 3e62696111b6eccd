//! Quantum statistical experiments, decision problems, and the
//! epsilon-deficiency of one experiment with respect to another.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::discrimination::{
    check_state, ensemble_from_cp_map, optimal_povm_value, psucc, push_ensemble, Ensemble, EnsembleItem, Povm,
};
use crate::error::{Error, Result};
use crate::linalg::{kron, op_norm, real_span_rank, CMatrix};
use crate::maps::{compose, cq_map, pinching, project_to_channel, HermitianMap, PSD_TOL};
use crate::norms::{clamp, ident, negate, trace_first};
use crate::random::{self, trial_rng};
use crate::sdp::{solve_certified, Certificate, Certified, SdpBuilder, Sense, SolveStatus};

const STATE_TOL: f64 = 1e-8;
const WEIGHT_TOL: f64 = 1e-10;

/// A finite family of labelled density matrices on `C^dim`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawExperiment")]
pub struct Experiment {
    dim: usize,
    labels: Vec<String>,
    states: BTreeMap<String, CMatrix>,
}

#[derive(Deserialize)]
struct RawExperiment {
    dim: usize,
    labels: Vec<String>,
    states: BTreeMap<String, CMatrix>,
}

impl TryFrom<RawExperiment> for Experiment {
    type Error = Error;
    fn try_from(mut r: RawExperiment) -> Result<Self> {
        if r.states.len() != r.labels.len() {
            return Err(Error::InvalidInput(format!("{} labels but {} states", r.labels.len(), r.states.len())));
        }
        let states = r
            .labels
            .iter()
            .map(|l| r.states.remove(l).ok_or_else(|| Error::LabelUnknown(l.clone())))
            .collect::<Result<Vec<_>>>()?;
        let e = Experiment::new(r.labels, states)?;
        if e.dim != r.dim {
            return Err(Error::InvalidInput(format!("declared dim {} but states are {}x{}", r.dim, e.dim, e.dim)));
        }
        Ok(e)
    }
}

impl Experiment {
    pub fn new(labels: Vec<String>, states: Vec<CMatrix>) -> Result<Self> {
        if labels.is_empty() || labels.len() != states.len() {
            return Err(Error::InvalidInput("an experiment needs one state per label and at least one label".into()));
        }
        if labels.iter().collect::<BTreeSet<_>>().len() != labels.len() {
            return Err(Error::InvalidInput("labels must be distinct".into()));
        }
        let dim = states[0].rows();
        let mut map = BTreeMap::new();
        for (l, s) in labels.iter().zip(states) {
            if s.rows() != dim || s.cols() != dim {
                return Err(Error::dims(format!("state {l} has a different size")));
            }
            check_state(&s, STATE_TOL).map_err(|e| Error::InvalidState(format!("{l}: {e}")))?;
            map.insert(l.clone(), s.hermitian_part());
        }
        Ok(Experiment { dim, labels, states: map })
    }

    /// Labels `"0"`, `"1"`, ... in order.
    pub fn from_states(states: Vec<CMatrix>) -> Result<Self> {
        Self::new((0..states.len()).map(|i| i.to_string()).collect(), states)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn state(&self, label: &str) -> Result<&CMatrix> {
        self.states.get(label).ok_or_else(|| Error::LabelUnknown(label.to_string()))
    }

    /// States in label order.
    pub fn states(&self) -> Vec<&CMatrix> {
        self.labels.iter().map(|l| &self.states[l]).collect()
    }

    /// States for the given labels, in that order.
    pub fn select(&self, labels: &[String]) -> Result<Vec<CMatrix>> {
        labels.iter().map(|l| self.state(l).cloned()).collect()
    }

    /// `alpha(T) = {alpha(rho_theta)}` for a channel `alpha`.
    pub fn push(&self, alpha: &HermitianMap) -> Result<Experiment> {
        let states = self.states().into_iter().map(|s| alpha.apply(s)).collect::<Result<Vec<_>>>()?;
        Experiment::new(self.labels.clone(), states)
    }

    /// Same labels and states plus one more label.
    pub fn with_label(&self, label: &str, state: CMatrix) -> Result<Experiment> {
        let mut labels = self.labels.clone();
        let mut states: Vec<CMatrix> = self.states().into_iter().cloned().collect();
        labels.push(label.to_string());
        states.push(state);
        Experiment::new(labels, states)
    }

    /// All states diagonal within `tol`.
    pub fn is_classical(&self, tol: f64) -> bool {
        self.states.values().all(|s| is_diagonal(s, tol))
    }

    /// The cq-channel `e_theta -> rho_theta` in label order.
    pub fn cq_channel(&self) -> HermitianMap {
        cq_map(&self.states().into_iter().cloned().collect::<Vec<_>>()).expect("states share a size")
    }
}

fn is_diagonal(m: &CMatrix, tol: f64) -> bool {
    (0..m.rows()).all(|i| (0..m.cols()).all(|j| i == j || m[(i, j)].norm() <= tol))
}

fn require_same_labels(s: &Experiment, t: &Experiment) -> Result<()> {
    let a: BTreeSet<_> = s.labels.iter().collect();
    let b: BTreeSet<_> = t.labels.iter().collect();
    if a != b {
        return Err(Error::LabelMismatch(format!("{:?} vs {:?}", s.labels, t.labels)));
    }
    Ok(())
}

/// A decision set with a nonnegative payoff table `g(theta, d)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDecision")]
pub struct DecisionProblem {
    labels: Vec<String>,
    decisions: Vec<String>,
    /// One row per label, one column per decision.
    payoff: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct RawDecision {
    labels: Vec<String>,
    decisions: Vec<String>,
    payoff: Vec<Vec<f64>>,
}

impl TryFrom<RawDecision> for DecisionProblem {
    type Error = Error;
    fn try_from(r: RawDecision) -> Result<Self> {
        DecisionProblem::new(r.labels, r.decisions, r.payoff)
    }
}

impl DecisionProblem {
    pub fn new(labels: Vec<String>, decisions: Vec<String>, payoff: Vec<Vec<f64>>) -> Result<Self> {
        if decisions.is_empty() || payoff.len() != labels.len() || payoff.iter().any(|r| r.len() != decisions.len()) {
            return Err(Error::SizeMismatch("payoff table must be labels x decisions".into()));
        }
        if payoff.iter().flatten().any(|&g| !(g >= 0.0 && g.is_finite())) {
            return Err(Error::InvalidInput("payoffs must be finite and nonnegative".into()));
        }
        Ok(DecisionProblem { labels, decisions, payoff })
    }

    /// `g(theta, d) = [theta == d]` with decisions named after the labels.
    pub fn indicator(labels: &[String]) -> Self {
        let n = labels.len();
        let payoff = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
        DecisionProblem { labels: labels.to_vec(), decisions: labels.to_vec(), payoff }
    }

    pub fn decisions(&self) -> &[String] {
        &self.decisions
    }

    /// The payoff row of `theta`.
    pub fn row(&self, theta: &str) -> Result<&[f64]> {
        let i = self.labels.iter().position(|l| l == theta).ok_or_else(|| Error::LabelUnknown(theta.to_string()))?;
        Ok(&self.payoff[i])
    }
}

/// Matrix-valued payoff `G(theta) >= 0` on `C^dim`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantumDecisionProblem {
    dim: usize,
    payoff: BTreeMap<String, CMatrix>,
}

impl QuantumDecisionProblem {
    pub fn new(payoff: BTreeMap<String, CMatrix>) -> Result<Self> {
        let dim = payoff.values().next().ok_or_else(|| Error::InvalidInput("empty payoff map".into()))?.rows();
        for (l, g) in &payoff {
            if g.rows() != dim || g.cols() != dim {
                return Err(Error::dims(format!("payoff {l} has a different size")));
            }
            let g = g.require_hermitian()?;
            if crate::linalg::min_eigenvalue(&g) < -PSD_TOL {
                return Err(Error::InvalidInput(format!("payoff {l} is not positive")));
            }
        }
        Ok(QuantumDecisionProblem { dim, payoff })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, theta: &str) -> Result<&CMatrix> {
        self.payoff.get(theta).ok_or_else(|| Error::LabelUnknown(theta.to_string()))
    }
}

/// Finitely supported probability weights over labels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prior {
    weights: BTreeMap<String, f64>,
}

impl Prior {
    pub fn new(weights: BTreeMap<String, f64>) -> Result<Self> {
        if weights.values().any(|&w| !(w >= 0.0 && w.is_finite())) {
            return Err(Error::InvalidInput("prior weights must be nonnegative".into()));
        }
        let total: f64 = weights.values().sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::InvalidInput(format!("prior weights sum to {total}")));
        }
        Ok(Prior { weights })
    }

    pub fn uniform(labels: &[String]) -> Self {
        let w = 1.0 / labels.len() as f64;
        Prior { weights: labels.iter().map(|l| (l.clone(), w)).collect() }
    }

    pub fn weight(&self, theta: &str) -> f64 {
        self.weights.get(theta).copied().unwrap_or(0.0)
    }

    pub fn weights(&self) -> &BTreeMap<String, f64> {
        &self.weights
    }
}

/// `P_T(theta, M, g) = sum_d g(theta, d) Tr[rho_theta M_d]`.
pub fn payoff(t: &Experiment, theta: &str, m: &Povm, g: &DecisionProblem) -> Result<f64> {
    if m.len() != g.decisions.len() {
        return Err(Error::SizeMismatch(format!("{} outcomes for {} decisions", m.len(), g.decisions.len())));
    }
    if m.dim() != t.dim {
        return Err(Error::SizeMismatch(format!("POVM on C^{} for states on C^{}", m.dim(), t.dim)));
    }
    let rho = t.state(theta)?;
    Ok(g.row(theta)?.iter().zip(m.elements()).map(|(gd, md)| gd * rho.trace_product(md).re).sum())
}

/// `P_T(theta, phi, G) = Tr[phi(rho_theta) G(theta)]`.
pub fn quantum_payoff(t: &Experiment, theta: &str, phi: &HermitianMap, g: &QuantumDecisionProblem) -> Result<f64> {
    if phi.d_in() != t.dim || phi.d_out() != g.dim {
        return Err(Error::dims(format!(
            "channel {}->{} for states on C^{} and payoffs on C^{}",
            phi.d_in(),
            phi.d_out(),
            t.dim,
            g.dim
        )));
    }
    Ok(phi.apply(t.state(theta)?)?.trace_product(g.get(theta)?).re)
}

/// `sum_theta p(theta) P_T(theta, M, g)`.
pub fn bayes_payoff(t: &Experiment, p: &Prior, m: &Povm, g: &DecisionProblem) -> Result<f64> {
    let mut total = 0.0;
    for (theta, &w) in &p.weights {
        if w > 0.0 {
            total += w * payoff(t, theta, m, g)?;
        }
    }
    Ok(total)
}

/// Best Bayes payoff `max_M sum_theta p(theta) P_T(theta, M, g)`.
pub fn bayes_value(t: &Experiment, p: &Prior, g: &DecisionProblem) -> Result<Certified> {
    let ops = (0..g.decisions.len())
        .map(|d| {
            let mut a = CMatrix::zeros(t.dim, t.dim);
            for (theta, &w) in &p.weights {
                if w > 0.0 {
                    a.axpy(w * g.row(theta)?[d], t.state(theta)?);
                }
            }
            Ok(a)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(optimal_povm_value(&ops)?.0)
}

/// `Z = sum_theta sum_d p(theta) g(theta, d)`.
pub fn payoff_mass(p: &Prior, g: &DecisionProblem) -> Result<f64> {
    let mut z = 0.0;
    for (theta, &w) in &p.weights {
        z += w * g.row(theta)?.iter().sum::<f64>();
    }
    Ok(z)
}

/// `sum_theta max_d p(theta) g(theta, d)`, the scale of the deficiency term.
pub fn payoff_bound(p: &Prior, g: &DecisionProblem) -> Result<f64> {
    let mut z = 0.0;
    for (theta, &w) in &p.weights {
        z += w * g.row(theta)?.iter().cloned().fold(0.0, f64::max);
    }
    Ok(z)
}

/// The classical ensemble `{lambda_d, diag(mu^d_theta)}` on `C^n` (labels of
/// `t` in order) with `lambda_d mu^d_theta = p(theta) g(theta, d) / Z`.
/// Decisions of zero weight are dropped.
pub fn decision_to_ensemble(p: &Prior, g: &DecisionProblem, t: &Experiment) -> Result<Ensemble> {
    for theta in p.weights.keys() {
        t.state(theta)?;
    }
    let z = payoff_mass(p, g)?;
    if z <= 0.0 {
        return Err(Error::DegeneratePayoff);
    }
    let n = t.len();
    let mut items = Vec::new();
    for d in 0..g.decisions.len() {
        let mass: Vec<f64> = t.labels.iter().map(|l| Ok(p.weight(l) * g.row(l)?[d] / z)).collect::<Result<Vec<_>>>()?;
        let lambda: f64 = mass.iter().sum();
        if lambda > 0.0 {
            let mu: Vec<f64> = mass.iter().map(|m| m / lambda).collect();
            items.push(EnsembleItem { weight: lambda, state: CMatrix::diag_real(&mu) });
        }
    }
    debug_assert!(items.iter().all(|i| i.state.rows() == n));
    Ensemble::new(items)
}

/// Inverse of [`decision_to_ensemble`]: a prior and payoff table on `labels`
/// reproducing a classical ensemble on `C^n`.
pub fn ensemble_to_decision(e: &Ensemble, labels: &[String]) -> Result<(Prior, DecisionProblem)> {
    if e.dim() != labels.len() {
        return Err(Error::SizeMismatch(format!("ensemble on C^{} for {} labels", e.dim(), labels.len())));
    }
    if e.items().iter().any(|i| !is_diagonal(&i.state, 1e-12)) {
        return Err(Error::ShapeError("ensemble states must be diagonal".into()));
    }
    let n = labels.len();
    let joint: Vec<Vec<f64>> =
        (0..n).map(|th| e.items().iter().map(|i| i.weight * i.state[(th, th)].re).collect()).collect();
    let p: Vec<f64> = joint.iter().map(|r| r.iter().sum()).collect();
    let payoff = joint
        .iter()
        .zip(&p)
        .map(|(row, &pt)| row.iter().map(|x| if pt > 0.0 { x / pt } else { 0.0 }).collect())
        .collect();
    let decisions = (0..e.len()).map(|d| format!("d{d}")).collect();
    let prior = Prior::new(labels.iter().cloned().zip(p).collect())?;
    Ok((prior, DecisionProblem::new(labels.to_vec(), decisions, payoff)?))
}

/// `{lambda_d, sum_theta mu^d_theta sigma_theta}` for a classical ensemble on
/// the labels of `s`.
pub fn mix_states(s: &Experiment, e: &Ensemble) -> Result<Ensemble> {
    push_ensemble(&s.cq_channel(), e, 1)
}

#[derive(Clone, Debug, Serialize)]
pub struct ExpDeficiency {
    /// Smallest `epsilon` with `sup_theta ||sigma_theta - alpha(rho_theta)||_1 <= 2 epsilon`.
    pub epsilon: f64,
    /// Channel `alpha: H -> K` attaining it.
    pub channel: HermitianMap,
    pub certificate: Certificate,
}

/// `min_alpha max_theta ||sigma_theta - alpha(rho_theta)||_1 / 2` for `S` on `K`,
/// `T` on `H`, by one program with a shared bound `t`.
pub fn exp_deficiency(s: &Experiment, t: &Experiment) -> Result<ExpDeficiency> {
    require_same_labels(s, t)?;
    let (dk, dh) = (s.dim, t.dim);
    let mut b = SdpBuilder::new(Sense::Minimize);
    let a = b.block(dk * dh);
    let bound = b.block(1);
    b.objective(bound, &CMatrix::identity(1));
    b.matrix_constraint(dh, &[(a, &trace_first(dk, dh))], &CMatrix::identity(dh));
    for l in &s.labels {
        let rho = t.state(l)?;
        let p = b.block(dk);
        let n = b.block(dk);
        let slack = b.block(1);
        let act = |x: &CMatrix| {
            HermitianMap::from_choi(dh, dk, x.clone())
                .expect("basis matrices are Hermitian")
                .apply(rho)
                .expect("sizes match")
        };
        b.matrix_constraint(dk, &[(p, &ident), (n, &negate), (a, &act)], s.state(l)?);
        let one = CMatrix::identity(1);
        b.scalar_constraint(
            &[(p, CMatrix::identity(dk)), (n, CMatrix::identity(dk)), (slack, one.clone()), (bound, -&one)],
            0.0,
        );
    }
    let (sol, mut certificate) = solve_certified(&b.build())?;
    let (channel, shift) = project_to_channel(dh, dk, sol.block(a))?;
    if shift > crate::deficiency::SHIFT_TOL && certificate.is_optimal() {
        log::warn!("randomization moved by {shift:.2e} when projected onto channels");
        certificate.status = SolveStatus::MaxIter;
    }
    Ok(ExpDeficiency { epsilon: clamp(sol.primal_value) / 2.0, channel, certificate })
}

/// Le Cam deficiency of classical (diagonal) experiments.
pub fn classical_deficiency(s: &Experiment, t: &Experiment) -> Result<ExpDeficiency> {
    if !s.is_classical(1e-12) || !t.is_classical(1e-12) {
        return Err(Error::ShapeError("classical experiments must have diagonal states".into()));
    }
    exp_deficiency(s, t)
}

/// Splits a state on `C^n (x) C^d` into its diagonal blocks, or fails if an
/// off-diagonal block is nonzero.
fn diagonal_blocks(m: &CMatrix, n: usize, d: usize) -> Result<Vec<CMatrix>> {
    for j in 0..n {
        for j2 in 0..n {
            if j != j2 && m.sub_block(j * d, j2 * d, d, d).max_abs() > 1e-12 {
                return Err(Error::ShapeError(format!("block ({j}, {j2}) is not zero")));
            }
        }
    }
    Ok((0..n).map(|j| m.sub_block(j * d, j * d, d, d)).collect())
}

/// `P_succ({lambda_i, sum_j sigma_j (x) tau^j_i}) - P_succ({lambda_i, sum_j rho_j (x) tau^j_i}) - epsilon P_succ(E)`
/// for a block-diagonal ensemble `E` on `C^n (x) K`.
pub fn ensemble_criterion_gap(
    s: &Experiment,
    t: &Experiment,
    labels: &[String],
    e: &Ensemble,
    epsilon: f64,
) -> Result<f64> {
    require_same_labels(s, t)?;
    let (n, dk) = (labels.len(), s.dim);
    if e.dim() != n * dk {
        return Err(Error::ShapeError(format!("ensemble on C^{} is not C^{n} (x) C^{dk}", e.dim())));
    }
    for item in e.items() {
        diagonal_blocks(&item.state, n, dk)?;
    }
    let cq_s = cq_map(&s.select(labels)?)?;
    let cq_t = cq_map(&t.select(labels)?)?;
    let a = psucc(&push_ensemble(&cq_s, e, dk)?)?.value;
    let b = psucc(&push_ensemble(&cq_t, e, dk)?)?.value;
    Ok(a - b - epsilon * psucc(e)?.value)
}

/// Random block-diagonal ensemble with `k` items on `C^n (x) C^d`.
pub fn random_block_ensemble<R: Rng + ?Sized>(rng: &mut R, n: usize, d: usize, k: usize) -> Ensemble {
    let w = random::probability(rng, k);
    let items = w
        .into_iter()
        .map(|weight| {
            let c = random::probability(rng, n);
            let mut state = CMatrix::zeros(n * d, n * d);
            for (j, cj) in c.iter().enumerate() {
                state.axpy(*cj, &kron(&CMatrix::unit(n, j, j), &random::state(rng, d)));
            }
            EnsembleItem { weight, state }
        })
        .collect();
    Ensemble::new(items).expect("valid by construction")
}

/// Random experiment with `n` full-rank states on `C^d`.
pub fn random_experiment<R: Rng + ?Sized>(rng: &mut R, d: usize, n: usize) -> Experiment {
    Experiment::from_states((0..n).map(|_| random::state(rng, d)).collect()).expect("valid by construction")
}

/// Random experiment with `n` diagonal states on `C^d`.
pub fn random_classical_experiment<R: Rng + ?Sized>(rng: &mut R, d: usize, n: usize) -> Experiment {
    Experiment::from_states((0..n).map(|_| CMatrix::diag_real(&random::probability(rng, d))).collect())
        .expect("valid by construction")
}

/// True iff the states span the Hermitian matrices on `C^dim`.
pub fn is_complete(t: &Experiment) -> bool {
    span_rank(t) == t.dim * t.dim
}

fn span_rank(t: &Experiment) -> usize {
    real_span_rank(&t.states().into_iter().cloned().collect::<Vec<_>>())
}

/// `{lambda_i, sum_{j,l} Lambda^i_{jl} tau^H_l (x) tau^K_j}` with `j` indexing
/// `s0` (on `K`) and `l` indexing `t0` (on `H`). Weights default to `1/k`.
pub fn coro3_ensemble(
    lambda: &[Vec<Vec<f64>>],
    t0: &Experiment,
    s0: &Experiment,
    weights: Option<&[f64]>,
) -> Result<Ensemble> {
    let k = lambda.len();
    let (nj, nl) = (s0.len(), t0.len());
    if k == 0 || lambda.iter().any(|m| m.len() != nj || m.iter().any(|r| r.len() != nl)) {
        return Err(Error::ShapeError(format!("Lambda must be k x {nj} x {nl}")));
    }
    for (i, m) in lambda.iter().enumerate() {
        let total: f64 = m.iter().flatten().sum();
        if m.iter().flatten().any(|&x| !(x >= 0.0)) || (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::ShapeError(format!("Lambda^{i} is not a probability table")));
        }
    }
    let w = match weights {
        Some(w) if w.len() == k => w.to_vec(),
        Some(w) => return Err(Error::ShapeError(format!("{} weights for {k} items", w.len()))),
        None => vec![1.0 / k as f64; k],
    };
    let (tk, th) = (s0.states(), t0.states());
    let items =
        lambda.iter().zip(w).map(|(m, weight)| EnsembleItem { weight, state: product_mix(m, &th, &tk) }).collect();
    Ensemble::new(items)
}

/// `sum_{j,l} m[j][l] left_l (x) right_j`.
fn product_mix(m: &[Vec<f64>], left: &[&CMatrix], right: &[&CMatrix]) -> CMatrix {
    let n = left[0].rows() * right[0].rows();
    let mut out = CMatrix::zeros(n, n);
    for (j, row) in m.iter().enumerate() {
        for (l, &c) in row.iter().enumerate() {
            if c != 0.0 {
                out.axpy(c, &kron(left[l], right[j]));
            }
        }
    }
    out
}

fn random_table<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Vec<Vec<f64>> {
    let flat = random::probability(rng, rows * cols);
    flat.chunks(cols).map(|c| c.to_vec()).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct Coro2Report {
    pub epsilon: f64,
    /// Largest `P_succ` gap found between the `sigma`- and `rho`-ensembles.
    pub max_gap: f64,
    pub trials: usize,
    /// True when `epsilon` vanishes but a gap above `1e-6` was found.
    pub violation: bool,
}

/// Random ensembles `{1/k, sum_{jl} Lambda^i_{jl} sigma_l (x) tau_j}` against
/// their `rho` counterparts, for a complete experiment `s0 = {tau_j}` on `K`.
pub fn coro2_scan(s: &Experiment, t: &Experiment, s0: &Experiment, trials: usize, seed: u64) -> Result<Coro2Report> {
    require_same_labels(s, t)?;
    let rank = span_rank(s0);
    if rank < s0.dim * s0.dim {
        return Err(Error::NotComplete { rank, needed: s0.dim * s0.dim });
    }
    let epsilon = exp_deficiency(s, t)?.epsilon;
    let sig = s.states();
    let rho = t.select(&s.labels)?;
    let rho: Vec<&CMatrix> = rho.iter().collect();
    let tau = s0.states();
    let mut max_gap = f64::NEG_INFINITY;
    for trial in 0..trials {
        let mut r = trial_rng(seed, trial as u64);
        let k = 2 + trial % 3;
        let tables: Vec<_> = (0..k).map(|_| random_table(&mut r, tau.len(), sig.len())).collect();
        let build = |states: &[&CMatrix]| {
            Ensemble::equiprobable(&tables.iter().map(|m| product_mix(m, states, &tau)).collect::<Vec<_>>())
        };
        let gap = psucc(&build(&sig)?)?.value - psucc(&build(&rho)?)?.value;
        max_gap = max_gap.max(gap);
    }
    Ok(Coro2Report { epsilon, max_gap, trials, violation: epsilon <= 1e-7 && max_gap > 1e-6 })
}

#[derive(Clone, Debug, Serialize)]
pub struct Thm4Report {
    pub epsilon: f64,
    /// Largest [`ensemble_criterion_gap`] over sampled block-diagonal ensembles.
    pub max_ensemble_gap: f64,
    /// Largest `P_S(theta, phi, G) - P_T(theta, phi o alpha, G) - epsilon ||G(theta)||`
    /// over sampled quantum decision problems.
    pub max_decision_gap: f64,
    pub ensembles: usize,
    pub decision_problems: usize,
    pub violations: usize,
    pub certificate: Certificate,
}

/// Computes `epsilon` and the optimal randomization, then samples
/// block-diagonal ensembles (random, and pinched equiprobable ensembles of
/// random CP maps) and quantum decision problems.
pub fn thm4_verify(s: &Experiment, t: &Experiment, trials: usize, seed: u64, tol: f64) -> Result<Thm4Report> {
    let ed = exp_deficiency(s, t)?;
    let eps = ed.epsilon;
    let labels = s.labels.clone();
    let (n, dk) = (labels.len(), s.dim);
    let mut max_e = f64::NEG_INFINITY;
    let mut max_d = f64::NEG_INFINITY;
    let mut violations = 0;
    let mut ensembles = 0;
    for trial in 0..trials {
        let mut r = trial_rng(seed, trial as u64);
        let k = 2 + trial % 3;
        let mut family = vec![random_block_ensemble(&mut r, n, dk, k)];
        if trial % 2 == 0 {
            let rank = r.gen_range(1..=n * dk);
            let gamma = random::cp_map(&mut r, dk, n, rank);
            family.push(push_ensemble(&pinching(n), &ensemble_from_cp_map(&gamma)?, dk)?);
        }
        for e in &family {
            let g = ensemble_criterion_gap(s, t, &labels, e, eps)?;
            violations += usize::from(g > tol);
            max_e = max_e.max(g);
            ensembles += 1;
        }

        let dd = r.gen_range(1..=3);
        let phi = random::generic_channel(&mut r, dk, dd);
        let phi2 = compose(&phi, &ed.channel)?;
        for l in &labels {
            let g = random::cp_map(&mut r, 1, dd, dd).into_choi();
            let lhs = phi.apply(s.state(l)?)?.trace_product(&g).re;
            let rhs = phi2.apply(t.state(l)?)?.trace_product(&g).re;
            let gap = lhs - rhs - eps * op_norm(&g);
            violations += usize::from(gap > tol);
            max_d = max_d.max(gap);
        }
    }
    Ok(Thm4Report {
        epsilon: eps,
        max_ensemble_gap: max_e,
        max_decision_gap: max_d,
        ensembles,
        decision_problems: trials,
        violations,
        certificate: ed.certificate,
    })
}
