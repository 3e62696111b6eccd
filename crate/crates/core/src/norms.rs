//! The diamond norm, its dual, and their closed forms for CP, cq and qc maps.
//!
//! For `phi: H -> K`:
//!
//! * `||phi||_diamond = min { lambda : C(beta) -+ C(phi) >= 0, Tr_K C(beta) = lambda I_H }`
//!   over CP maps `beta`;
//! * `||phi||^diamond = min { Tr rho : rho (x) I_H -+ C(phi) >= 0 }` over `rho` on `K`.

use crate::error::{Error, Result};
use crate::linalg::{kron, op_norm, partial_trace, trace_norm, CMatrix, Factor};
use crate::maps::{cq_map, qc_map, HermitianMap, PSD_TOL};
use crate::sdp::{solve_certified, Certified, SdpBuilder, Sense};

/// Values below this are reported as exactly zero.
pub const ZERO_CLAMP: f64 = 1e-10;

pub(crate) fn clamp(v: f64) -> f64 {
    if v.abs() < ZERO_CLAMP {
        0.0
    } else {
        v
    }
}

/// `X -> Tr_2 X` on `(d1 d2) x (d1 d2)` blocks, as a closure for constraints.
pub(crate) fn trace_second(d1: usize, d2: usize) -> impl Fn(&CMatrix) -> CMatrix {
    move |x| partial_trace(x, (d1, d2), Factor::Second).expect("block has the product dimension")
}

pub(crate) fn trace_first(d1: usize, d2: usize) -> impl Fn(&CMatrix) -> CMatrix {
    move |x| partial_trace(x, (d1, d2), Factor::First).expect("block has the product dimension")
}

pub(crate) fn ident(x: &CMatrix) -> CMatrix {
    x.clone()
}

pub(crate) fn negate(x: &CMatrix) -> CMatrix {
    -x
}

/// Diamond norm by the order-structure SDP. Blocks `S_+ = C(beta) - C(phi)`
/// and `S_- = C(beta) + C(phi)`.
pub fn diamond_norm(phi: &HermitianMap) -> Result<Certified> {
    let (dh, dk) = (phi.d_in(), phi.d_out());
    let n = dh * dk;
    let mut b = SdpBuilder::new(Sense::Minimize);
    let sp = b.block(n);
    let sm = b.block(n);
    let obj = CMatrix::identity(n).scale(1.0 / (2.0 * dh as f64));
    b.objective(sp, &obj);
    b.objective(sm, &obj);
    b.matrix_constraint(n, &[(sm, &ident), (sp, &negate)], &phi.choi().scale(2.0));
    let tr_k = trace_first(dk, dh);
    b.traceless_constraint(dh, &[(sp, &tr_k), (sm, &tr_k)], &CMatrix::zeros(dh, dh));
    let p = b.build();
    let (s, certificate) = solve_certified(&p)?;
    Ok(Certified { value: clamp(s.primal_value), certificate })
}

/// Dual diamond norm, solved in the form
/// `max Tr[C(phi)(X_1 - X_2)]` s.t. `Tr_H(X_1 + X_2) = I_K`, whose multiplier is
/// the optimal `rho`.
pub fn dual_diamond_norm(phi: &HermitianMap) -> Result<Certified> {
    Ok(dual_diamond_norm_full(phi)?.0)
}

/// As [`dual_diamond_norm`], also returning the optimal `rho` on the output space.
pub fn dual_diamond_norm_full(phi: &HermitianMap) -> Result<(Certified, CMatrix)> {
    let (dh, dk) = (phi.d_in(), phi.d_out());
    let n = dh * dk;
    let mut b = SdpBuilder::new(Sense::Maximize);
    let x1 = b.block(n);
    let x2 = b.block(n);
    b.objective(x1, phi.choi());
    b.objective(x2, &-phi.choi());
    let tr_h = trace_second(dk, dh);
    let rows = b.matrix_constraint(dk, &[(x1, &tr_h), (x2, &tr_h)], &CMatrix::identity(dk));
    let p = b.build();
    let (s, certificate) = solve_certified(&p)?;
    let rho = crate::linalg::hmat(&s.dual_vector[rows], dk);
    Ok((Certified { value: clamp(s.primal_value), certificate }, rho))
}

/// `||phi||_diamond = lambda_max(phi*(I))` for CP `phi`.
pub fn diamond_norm_cp(phi: &HermitianMap) -> Result<f64> {
    phi.require_cp(PSD_TOL)?;
    Ok(clamp(op_norm(&phi.adjoint_on_identity())))
}

/// `||phi||^diamond = max <alpha, phi>` over channels `alpha: K -> H`, for CP
/// `phi`. Solved over `Y = C(alpha*)`, the Choi matrix of a unital map.
pub fn dual_diamond_norm_cp(phi: &HermitianMap) -> Result<Certified> {
    phi.require_cp(PSD_TOL)?;
    let (dh, dk) = (phi.d_in(), phi.d_out());
    let mut b = SdpBuilder::new(Sense::Maximize);
    let y = b.block(dh * dk);
    b.objective(y, phi.choi());
    b.matrix_constraint(dk, &[(y, &trace_second(dk, dh))], &CMatrix::identity(dk));
    let (s, certificate) = solve_certified(&b.build())?;
    Ok(Certified { value: clamp(s.primal_value), certificate })
}

/// Diamond and dual norms of a cq-map `phi^cq_A`.
#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct CollectionNorms {
    pub diamond: Certified,
    pub dual: Certified,
}

fn check_collection(a: &[CMatrix]) -> Result<usize> {
    let d = a.first().ok_or_else(|| Error::dims("empty operator collection"))?.rows();
    if a.iter().any(|m| m.rows() != d || m.cols() != d) {
        return Err(Error::dims("operators must be square and share one size"));
    }
    for m in a {
        m.require_hermitian()?;
    }
    Ok(d)
}

/// `||phi^cq_A||_diamond = max_i ||A_i||_1` and the dual norm
/// `min { Tr rho : rho -+ A_i >= 0 for all i }`.
pub fn cq_norms(a: &[CMatrix]) -> Result<CollectionNorms> {
    let d = check_collection(a)?;
    let diamond = Certified::exact(clamp(a.iter().map(trace_norm).fold(0.0, f64::max)));
    // max sum_i Tr[A_i (X_i - Y_i)] s.t. sum_i (X_i + Y_i) = I.
    let mut b = SdpBuilder::new(Sense::Maximize);
    let mut terms = Vec::new();
    for ai in a {
        let x = b.block(d);
        let y = b.block(d);
        b.objective(x, ai);
        b.objective(y, &-ai);
        terms.push(x);
        terms.push(y);
    }
    let maps: Vec<_> = terms.iter().map(|&t| (t, &ident as &dyn Fn(&CMatrix) -> CMatrix)).collect();
    b.matrix_constraint(d, &maps, &CMatrix::identity(d));
    let (s, certificate) = solve_certified(&b.build())?;
    Ok(CollectionNorms { diamond, dual: Certified { value: clamp(s.primal_value), certificate } })
}

/// `||phi^qc_A||^diamond = sum_i ||A_i||` and the diamond norm
/// `max sum_i Tr[F_i A_i]` s.t. `-sigma <= F_i <= sigma`, `Tr sigma = 1`.
pub fn qc_norms(a: &[CMatrix]) -> Result<CollectionNorms> {
    let d = check_collection(a)?;
    let dual = Certified::exact(clamp(a.iter().map(op_norm).sum()));
    // P_i = sigma - F_i, Q_i = sigma + F_i.
    let mut b = SdpBuilder::new(Sense::Maximize);
    let sigma = b.block(d);
    b.scalar_constraint(&[(sigma, CMatrix::identity(d))], 1.0);
    let twice = |x: &CMatrix| x.scale(-2.0);
    for ai in a {
        let p = b.block(d);
        let q = b.block(d);
        b.objective(p, &ai.scale(-0.5));
        b.objective(q, &ai.scale(0.5));
        b.matrix_constraint(d, &[(p, &ident), (q, &ident), (sigma, &twice)], &CMatrix::zeros(d, d));
    }
    let (s, certificate) = solve_certified(&b.build())?;
    Ok(CollectionNorms { diamond: Certified { value: clamp(s.primal_value), certificate }, dual })
}

/// Both norms of `phi^cq_A` through the generic SDPs, for cross-checks.
pub fn cq_norms_generic(a: &[CMatrix]) -> Result<CollectionNorms> {
    let phi = cq_map(a)?;
    Ok(CollectionNorms { diamond: diamond_norm(&phi)?, dual: dual_diamond_norm(&phi)? })
}

pub fn qc_norms_generic(a: &[CMatrix]) -> Result<CollectionNorms> {
    let phi = qc_map(a)?;
    Ok(CollectionNorms { diamond: diamond_norm(&phi)?, dual: dual_diamond_norm(&phi)? })
}

/// `||phi - psi||_diamond` for channels as `2 max <gamma, phi - psi>` over CP
/// `gamma: K -> H` with `||gamma||^diamond <= 1`.
///
/// With `Y = C(gamma*)` on `K (x) H` the dual-ball condition reads
/// `I_K (x) tau - Y >= 0` for a state `tau`.
pub fn channel_distance_dual(phi: &HermitianMap, psi: &HermitianMap) -> Result<Certified> {
    if phi.dims() != psi.dims() {
        return Err(Error::dims("channels must have the same dimensions"));
    }
    let (dh, dk) = (phi.d_in(), phi.d_out());
    let n = dh * dk;
    let delta = phi - psi;
    let mut b = SdpBuilder::new(Sense::Maximize);
    let y = b.block(n);
    let s = b.block(n);
    let tau = b.block(dh);
    b.objective(y, &delta.choi().scale(2.0));
    b.scalar_constraint(&[(tau, CMatrix::identity(dh))], 1.0);
    let id_k = CMatrix::identity(dk);
    let lift = move |t: &CMatrix| -kron(&id_k, t);
    b.matrix_constraint(n, &[(s, &ident), (y, &ident), (tau, &lift)], &CMatrix::zeros(n, n));
    let (sol, certificate) = solve_certified(&b.build())?;
    Ok(Certified { value: clamp(sol.primal_value), certificate })
}

/// Erasure channel `A -> Tr[A] sigma` from `C^d_in`.
pub fn erasure_channel(sigma: &CMatrix, d_in: usize) -> Result<HermitianMap> {
    HermitianMap::erasure(sigma, d_in)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::paulis;
    use crate::maps::{compose, pinching};
    use crate::random::{self, rng};

    const TOL: f64 = 1e-7;

    #[test]
    fn channels_have_unit_diamond_norm() {
        let mut r = rng(21);
        for (di, dk) in [(2, 2), (2, 3), (3, 2)] {
            let phi = random::generic_channel(&mut r, di, dk);
            let v = diamond_norm(&phi).unwrap();
            assert!(v.certificate.is_optimal());
            assert!((v.value - 1.0).abs() < TOL, "{}", v.value);
            assert!((diamond_norm_cp(&phi).unwrap() - 1.0).abs() < 1e-12);
            assert!((diamond_norm_cp(&(&phi * 2.0)).unwrap() - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn identity_minus_depolarizing() {
        let phi = &HermitianMap::identity(2) - &HermitianMap::depolarizing(2, 1.0);
        assert!((diamond_norm(&phi).unwrap().value - 1.5).abs() < TOL);
    }

    #[test]
    fn dual_norm_of_identity_is_d_squared() {
        for d in [2, 3] {
            let id = HermitianMap::identity(d);
            let want = (d * d) as f64;
            assert!((dual_diamond_norm(&id).unwrap().value - want).abs() < 1e-6);
            assert!((dual_diamond_norm_cp(&id).unwrap().value - want).abs() < 1e-6);
        }
    }

    #[test]
    fn dual_norm_of_erasure_is_one() {
        let sigma = random::state(&mut rng(22), 2);
        let phi = HermitianMap::erasure(&sigma, 3).unwrap();
        let (v, rho) = dual_diamond_norm_full(&phi).unwrap();
        assert!((v.value - 1.0).abs() < TOL);
        assert!((rho.trace_re() - 1.0).abs() < 1e-6);
        assert!((dual_diamond_norm_cp(&phi).unwrap().value - 1.0).abs() < TOL);
    }

    #[test]
    fn pauli_collections() {
        let a = [paulis::z(), paulis::x()];
        let cq = cq_norms(&a).unwrap();
        assert!((cq.diamond.value - 2.0).abs() < 1e-12);
        let qc = qc_norms(&a).unwrap();
        assert!((qc.dual.value - 2.0).abs() < 1e-12);
        let gen = cq_norms_generic(&a).unwrap();
        assert!((gen.diamond.value - 2.0).abs() < TOL);
        assert!((gen.dual.value - cq.dual.value).abs() < TOL);
    }

    #[test]
    fn povm_qc_diamond_is_one() {
        let m = random::povm(&mut rng(23), 2, 3);
        assert!((qc_norms(&m).unwrap().diamond.value - 1.0).abs() < TOL);
    }

    #[test]
    fn zero_map_clamps() {
        let v = diamond_norm(&HermitianMap::zero(2, 2)).unwrap();
        assert_eq!(v.value, 0.0);
    }

    #[test]
    fn cp_dual_norm_matches_generic() {
        let phi = random::cp_map(&mut rng(24), 2, 2, 2);
        let a = dual_diamond_norm(&phi).unwrap().value;
        let b = dual_diamond_norm_cp(&phi).unwrap().value;
        assert!((a - b).abs() < TOL, "{a} vs {b}");
        assert!((diamond_norm(&phi).unwrap().value - diamond_norm_cp(&phi).unwrap()).abs() < TOL);
    }

    #[test]
    fn not_cp_is_rejected() {
        let phi = &HermitianMap::identity(2) * -1.0;
        assert!(matches!(diamond_norm_cp(&phi), Err(Error::NotCompletelyPositive { .. })));
    }

    #[test]
    fn distance_via_dual_ball() {
        let mut r = rng(25);
        let phi = random::generic_channel(&mut r, 2, 2);
        let psi = random::generic_channel(&mut r, 2, 2);
        let direct = diamond_norm(&(&phi - &psi)).unwrap().value;
        let dual = channel_distance_dual(&phi, &psi).unwrap().value;
        assert!((direct - dual).abs() < 1e-6, "{direct} vs {dual}");
    }

    #[test]
    fn pinching_after_channel_is_contraction() {
        let phi = random::hermitian_map(&mut rng(26), 2, 2);
        let before = diamond_norm(&phi).unwrap().value;
        let after = diamond_norm(&compose(&pinching(2), &phi).unwrap()).unwrap().value;
        assert!(after <= before + 1e-8);
    }
}
