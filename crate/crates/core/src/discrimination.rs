//! Ensembles, POVMs and optimal guessing probabilities.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hmat, inverse_sqrt, min_eigenvalue, psd_clip, CMatrix, C64, ZERO};
use crate::maps::{cq_map, HermitianMap, PSD_TOL};
use crate::norms::{dual_diamond_norm, ident};
use crate::sdp::{solve_certified, Certificate, Certified, SdpBuilder, Sense};

const WEIGHT_TOL: f64 = 1e-10;
const STATE_TOL: f64 = 1e-8;
const POVM_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleItem {
    pub weight: f64,
    pub state: CMatrix,
}

/// A finite family `{lambda_i, sigma_i}` of weighted density matrices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawEnsemble")]
pub struct Ensemble {
    dim: usize,
    items: Vec<EnsembleItem>,
}

#[derive(Deserialize)]
struct RawEnsemble {
    dim: usize,
    items: Vec<EnsembleItem>,
}

impl TryFrom<RawEnsemble> for Ensemble {
    type Error = Error;
    fn try_from(r: RawEnsemble) -> Result<Self> {
        let e = Ensemble::new(r.items)?;
        if e.dim != r.dim {
            return Err(Error::InvalidEnsemble(format!("declared dim {} but states are {}x{}", r.dim, e.dim, e.dim)));
        }
        Ok(e)
    }
}

/// Checks that `rho` is a density matrix within `tol`.
pub fn check_state(rho: &CMatrix, tol: f64) -> Result<()> {
    let h = rho.require_hermitian().map_err(|_| Error::InvalidState("not Hermitian".into()))?;
    let tr = h.trace_re();
    if (tr - 1.0).abs() > tol {
        return Err(Error::InvalidState(format!("trace {tr}")));
    }
    let m = min_eigenvalue(&h);
    if m < -tol {
        return Err(Error::InvalidState(format!("smallest eigenvalue {m:.3e}")));
    }
    Ok(())
}

impl Ensemble {
    pub fn new(items: Vec<EnsembleItem>) -> Result<Self> {
        let dim = items.first().ok_or_else(|| Error::InvalidEnsemble("no items".into()))?.state.rows();
        let mut total = 0.0;
        for (i, it) in items.iter().enumerate() {
            if it.state.rows() != dim || it.state.cols() != dim {
                return Err(Error::InvalidEnsemble(format!("state {i} has a different size")));
            }
            if !(it.weight > 0.0 && it.weight <= 1.0 + WEIGHT_TOL) {
                return Err(Error::InvalidEnsemble(format!("weight {i} is {}", it.weight)));
            }
            check_state(&it.state, STATE_TOL).map_err(|e| Error::InvalidEnsemble(format!("state {i}: {e}")))?;
            total += it.weight;
        }
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::InvalidEnsemble(format!("weights sum to {total}")));
        }
        let items =
            items.into_iter().map(|it| EnsembleItem { weight: it.weight, state: it.state.hermitian_part() }).collect();
        Ok(Ensemble { dim, items })
    }

    pub fn from_parts(weights: &[f64], states: &[CMatrix]) -> Result<Self> {
        if weights.len() != states.len() {
            return Err(Error::InvalidEnsemble("weights and states differ in number".into()));
        }
        Self::new(weights.iter().zip(states).map(|(&weight, s)| EnsembleItem { weight, state: s.clone() }).collect())
    }

    pub fn equiprobable(states: &[CMatrix]) -> Result<Self> {
        let w = vec![1.0 / states.len() as f64; states.len()];
        Self::from_parts(&w, states)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[EnsembleItem] {
        &self.items
    }

    pub fn weights(&self) -> Vec<f64> {
        self.items.iter().map(|i| i.weight).collect()
    }

    /// The operators `lambda_i sigma_i`.
    pub fn weighted_states(&self) -> Vec<CMatrix> {
        self.items.iter().map(|i| i.state.scale(i.weight)).collect()
    }

    /// `phi_E = phi^cq_{lambda_1 sigma_1, ..., lambda_n sigma_n}`.
    pub fn cq_map(&self) -> HermitianMap {
        cq_map(&self.weighted_states()).expect("ensemble states share a size")
    }
}

/// Positive operators summing to the identity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Povm {
    dim: usize,
    elements: Vec<CMatrix>,
}

impl Povm {
    pub fn new(elements: Vec<CMatrix>) -> Result<Self> {
        let dim = elements.first().ok_or_else(|| Error::InvalidPovm("no elements".into()))?.rows();
        let mut sum = CMatrix::zeros(dim, dim);
        let mut out = Vec::with_capacity(elements.len());
        for (i, m) in elements.into_iter().enumerate() {
            if m.rows() != dim || m.cols() != dim {
                return Err(Error::InvalidPovm(format!("element {i} has a different size")));
            }
            let m = m.require_hermitian().map_err(|_| Error::InvalidPovm(format!("element {i} is not Hermitian")))?;
            let low = min_eigenvalue(&m);
            if low < -POVM_TOL {
                return Err(Error::InvalidPovm(format!("element {i} has eigenvalue {low:.3e}")));
            }
            sum += &m;
            out.push(m);
        }
        let defect = sum.max_diff(&CMatrix::identity(dim));
        if defect > POVM_TOL {
            return Err(Error::InvalidPovm(format!("elements sum to the identity only within {defect:.3e}")));
        }
        Ok(Povm { dim, elements: out })
    }

    /// Projects nearly valid elements onto a POVM: clip negative eigenvalues,
    /// then conjugate by `S^{-1/2}` with `S` the sum.
    pub fn repaired(elements: &[CMatrix]) -> Result<Self> {
        let clipped: Vec<CMatrix> = elements.iter().map(psd_clip).collect();
        let dim = clipped.first().ok_or_else(|| Error::InvalidPovm("no elements".into()))?.rows();
        let mut s = CMatrix::zeros(dim, dim);
        for m in &clipped {
            s += m;
        }
        let t = inverse_sqrt(&s).map_err(|_| Error::InvalidPovm("elements do not span the space".into()))?;
        Self::new(clipped.iter().map(|m| t.congruence(m)).collect())
    }

    /// Measurement in the standard basis of `C^d`.
    pub fn standard(d: usize) -> Self {
        Povm { dim: d, elements: (0..d).map(|i| CMatrix::unit(d, i, i)).collect() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[CMatrix] {
        &self.elements
    }

    /// Outcome probabilities `Tr[rho M_i]`.
    pub fn probabilities(&self, rho: &CMatrix) -> Vec<f64> {
        self.elements.iter().map(|m| rho.trace_product(m).re).collect()
    }
}

/// Optimal guessing probability with the optimal measurement and the dual
/// optimal `Y` (`Y >= lambda_i sigma_i`, `Tr Y = P_succ`).
#[derive(Clone, Debug, Serialize)]
pub struct Psucc {
    pub value: f64,
    pub povm: Povm,
    pub dual: CMatrix,
    pub certificate: Certificate,
}

/// `max_M sum_i Tr[M_i A_i]` over POVMs, for Hermitian `A_i` of one size.
/// Returns the value, the repaired optimal POVM and the dual optimal `Y`.
pub fn optimal_povm_value(ops: &[CMatrix]) -> Result<(Certified, Povm, CMatrix)> {
    let d = ops.first().ok_or_else(|| Error::InvalidPovm("no operators".into()))?.rows();
    if ops.iter().any(|a| a.rows() != d || a.cols() != d) {
        return Err(Error::dims("operators must share one size"));
    }
    let mut b = SdpBuilder::new(Sense::Maximize);
    let blocks: Vec<_> = ops
        .iter()
        .map(|a| {
            let m = b.block(d);
            b.objective(m, a);
            m
        })
        .collect();
    let terms: Vec<_> = blocks.iter().map(|&m| (m, &ident as &dyn Fn(&CMatrix) -> CMatrix)).collect();
    let rows = b.matrix_constraint(d, &terms, &CMatrix::identity(d));
    let (s, certificate) = solve_certified(&b.build())?;
    let dual = hmat(&s.dual_vector[rows], d);
    let povm = Povm::repaired(&blocks.iter().map(|&m| s.block(m).clone()).collect::<Vec<_>>())?;
    Ok((Certified { value: s.primal_value, certificate }, povm, dual))
}

/// `P_succ(E) = max_M sum_i lambda_i Tr[M_i sigma_i]`.
pub fn psucc(e: &Ensemble) -> Result<Psucc> {
    let (v, povm, dual) = optimal_povm_value(&e.weighted_states())?;
    Ok(Psucc { value: v.value, povm, dual, certificate: v.certificate })
}

/// Guessing probability as a certified number.
pub fn guessing_value(e: &Ensemble) -> Result<Certified> {
    let p = psucc(e)?;
    Ok(Certified { value: p.value, certificate: p.certificate })
}

/// Success probability of a given measurement.
pub fn success_probability(e: &Ensemble, m: &Povm) -> Result<f64> {
    if m.len() != e.len() || m.dim() != e.dim() {
        return Err(Error::SizeMismatch(format!(
            "{} outcomes on C^{} for {} states on C^{}",
            m.len(),
            m.dim(),
            e.len(),
            e.dim()
        )));
    }
    Ok(e.items().iter().zip(m.elements()).map(|(it, mi)| it.weight * it.state.trace_product(mi).re).sum())
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct DualNormCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub diff: f64,
}

/// `P_succ(E)` against `||phi_E||^diamond`.
pub fn psucc_equals_dual_norm_check(e: &Ensemble) -> Result<DualNormCheck> {
    let lhs = psucc(e)?.value;
    let rhs = dual_diamond_norm(&e.cq_map())?.value;
    Ok(DualNormCheck { lhs, rhs, diff: lhs - rhs })
}

/// Clock-shift unitaries `U_(a d + b) = S^a C^b`, with `S|k> = |k+1>` and
/// `C = diag(omega^k)`, `omega = exp(2 pi i / d)`.
pub fn heisenberg_weyl(d: usize) -> Vec<CMatrix> {
    let omega = |k: usize| C64::from_polar(1.0, 2.0 * std::f64::consts::PI * (k % d) as f64 / d as f64);
    let mut out = Vec::with_capacity(d * d);
    for a in 0..d {
        for b in 0..d {
            // (S^a C^b)[r, c] = [r == c + a mod d] omega^(b c)
            out.push(CMatrix::from_fn(d, d, |r, c| if r == (c + a) % d { omega(b * c) } else { ZERO }));
        }
    }
    out
}

/// The equiprobable ensemble `E_gamma` on `H (x) K` of a CP map `gamma: K -> H`:
/// `sigma_i = (I (x) U_i^dagger) C(gamma) (I (x) U_i) / Tr[gamma(I)]`.
pub fn ensemble_from_cp_map(gamma: &HermitianMap) -> Result<Ensemble> {
    gamma.require_cp(PSD_TOL)?;
    let (dk, dh) = (gamma.d_in(), gamma.d_out());
    let norm = gamma.choi().trace_re();
    if norm <= 1e-12 {
        return Err(Error::ZeroMap);
    }
    let id_h = CMatrix::identity(dh);
    let us = heisenberg_weyl(dk);
    let w = 1.0 / us.len() as f64;
    let items = us
        .iter()
        .map(|u| {
            let v = crate::linalg::kron(&id_h, &u.adjoint());
            let s = v.congruence(gamma.choi()).scale(1.0 / norm).hermitian_part();
            let s = if min_eigenvalue(&s) < 0.0 { psd_clip(&s) } else { s };
            let t = s.trace_re();
            EnsembleItem { weight: w, state: s.scale(1.0 / t) }
        })
        .collect();
    Ensemble::new(items)
}

/// Informationally complete pure states on `C^d`: `|i>`, `(|i> + |j>)/sqrt2`
/// and `(|i> + i|j>)/sqrt2` for `i < j`.
pub fn tomographic_states(d: usize) -> Vec<CMatrix> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(d * d);
    let ket = |entries: &[(usize, C64)]| {
        let mut v = vec![ZERO; d];
        for &(i, z) in entries {
            v[i] = z;
        }
        CMatrix::outer(&v)
    };
    for i in 0..d {
        out.push(ket(&[(i, C64::new(1.0, 0.0))]));
    }
    for i in 0..d {
        for j in i + 1..d {
            out.push(ket(&[(i, C64::new(s, 0.0)), (j, C64::new(s, 0.0))]));
            out.push(ket(&[(i, C64::new(s, 0.0)), (j, C64::new(0.0, s))]));
        }
    }
    out
}

/// `{lambda_i, (phi (x) id_anc)(sigma_i)}` for states on `H (x) C^anc`.
pub fn push_ensemble(phi: &HermitianMap, e: &Ensemble, ancilla: usize) -> Result<Ensemble> {
    let items = e
        .items()
        .iter()
        .map(|it| {
            let s = phi.apply_with_ancilla(&it.state, ancilla)?;
            Ok(EnsembleItem { weight: it.weight, state: s.hermitian_part() })
        })
        .collect::<Result<Vec<_>>>()?;
    Ensemble::new(items)
}
