//! Hermitian-preserving linear maps stored as Choi matrices.
//!
//! For `phi: B(H) -> B(K)` the Choi matrix `C(phi) = (phi (x) id)(X_H)` lives
//! on `K (x) H`, so that `choi[(o1, i), (o2, j)] = phi(|i><j|)[o1, o2]`.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{
    herm_eig_unchecked, inverse_sqrt, kron, min_eigenvalue, partial_trace, psd_clip, CMatrix, DimPair, Factor, C64,
    ZERO,
};

/// Default eigenvalue floor for complete positivity.
pub const PSD_TOL: f64 = 1e-8;
/// Default tolerance on `Tr_K C(phi) = I_H` for trace preservation.
pub const CHAN_TOL: f64 = 1e-8;

/// A Hermitian-preserving map `B_h(H) -> B_h(K)` with `H = C^d_in`, `K = C^d_out`.
#[derive(Clone, PartialEq)]
pub struct HermitianMap {
    dims: DimPair,
    choi: CMatrix,
}

/// The unnormalized maximally entangled operator `X_d = sum_ij |i><j| (x) |i><j|`.
#[derive(Clone, Debug, PartialEq)]
pub struct MaxEntangledKernel {
    pub dim: usize,
    pub matrix: CMatrix,
}

impl MaxEntangledKernel {
    pub fn new(dim: usize) -> Self {
        let n = dim * dim;
        let matrix =
            CMatrix::from_fn(
                n,
                n,
                |r, c| {
                    if r % (dim + 1) == 0 && c % (dim + 1) == 0 {
                        C64::new(1.0, 0.0)
                    } else {
                        ZERO
                    }
                },
            );
        MaxEntangledKernel { dim, matrix }
    }
}

impl HermitianMap {
    /// Wraps a Choi matrix on `d_out * d_in`; rejects non-Hermitian input.
    pub fn from_choi(d_in: usize, d_out: usize, choi: CMatrix) -> Result<Self> {
        let dims = DimPair::new(d_in, d_out)?;
        let n = d_in * d_out;
        if choi.rows() != n || choi.cols() != n {
            return Err(Error::dims(format!(
                "Choi matrix of a {d_in}->{d_out} map must be {n}x{n}, got {}x{}",
                choi.rows(),
                choi.cols()
            )));
        }
        let choi = choi.require_hermitian()?;
        Ok(HermitianMap { dims, choi })
    }

    /// Builds the Choi matrix from the action on matrix units `|i><j|`.
    /// The closure must be Hermitian-preserving.
    pub fn from_action(d_in: usize, d_out: usize, f: impl Fn(&CMatrix) -> CMatrix) -> Result<Self> {
        DimPair::new(d_in, d_out)?;
        let n = d_in * d_out;
        let mut choi = CMatrix::zeros(n, n);
        for i in 0..d_in {
            for j in 0..d_in {
                let img = f(&CMatrix::unit(d_in, i, j));
                if img.rows() != d_out || img.cols() != d_out {
                    return Err(Error::dims("action returned a matrix of the wrong size"));
                }
                for o1 in 0..d_out {
                    for o2 in 0..d_out {
                        choi[(o1 * d_in + i, o2 * d_in + j)] = img[(o1, o2)];
                    }
                }
            }
        }
        Self::from_choi(d_in, d_out, choi)
    }

    /// `A -> sum_k K_k A K_k^dagger`.
    pub fn from_kraus(kraus: &[CMatrix]) -> Result<Self> {
        let first = kraus.first().ok_or_else(|| Error::dims("empty Kraus list"))?;
        let (d_out, d_in) = (first.rows(), first.cols());
        if kraus.iter().any(|k| k.rows() != d_out || k.cols() != d_in) {
            return Err(Error::dims("Kraus operators have different shapes"));
        }
        DimPair::new(d_in, d_out)?;
        let n = d_in * d_out;
        let mut choi = CMatrix::zeros(n, n);
        for k in kraus {
            let v: Vec<C64> = (0..n).map(|r| k[(r / d_in, r % d_in)]).collect();
            choi += &CMatrix::outer(&v);
        }
        Ok(HermitianMap { dims: DimPair { d_in, d_out }, choi: choi.hermitian_part() })
    }

    pub fn identity(d: usize) -> Self {
        HermitianMap { dims: DimPair { d_in: d, d_out: d }, choi: MaxEntangledKernel::new(d).matrix }
    }

    /// The zero map `C^d_in -> C^d_out`.
    pub fn zero(d_in: usize, d_out: usize) -> Self {
        let n = d_in * d_out;
        HermitianMap { dims: DimPair { d_in, d_out }, choi: CMatrix::zeros(n, n) }
    }

    /// Erasure channel `A -> Tr[A] sigma` on `C^d_in`; `C = sigma (x) I`.
    pub fn erasure(sigma: &CMatrix, d_in: usize) -> Result<Self> {
        let sigma = sigma.require_hermitian()?;
        let d_out = sigma.rows();
        DimPair::new(d_in, d_out)?;
        Ok(HermitianMap { dims: DimPair { d_in, d_out }, choi: kron(&sigma, &CMatrix::identity(d_in)) })
    }

    /// `rho -> (1 - p) rho + p Tr[rho] I/d`.
    pub fn depolarizing(d: usize, p: f64) -> Self {
        let id = Self::identity(d);
        let full =
            Self::erasure(&CMatrix::identity(d).scale(1.0 / d as f64), d).expect("maximally mixed state is Hermitian");
        &id * (1.0 - p) + &full * p
    }

    pub fn dims(&self) -> DimPair {
        self.dims
    }

    pub fn d_in(&self) -> usize {
        self.dims.d_in
    }

    pub fn d_out(&self) -> usize {
        self.dims.d_out
    }

    pub fn choi(&self) -> &CMatrix {
        &self.choi
    }

    pub fn into_choi(self) -> CMatrix {
        self.choi
    }

    pub fn apply(&self, a: &CMatrix) -> Result<CMatrix> {
        let (di, dk) = (self.d_in(), self.d_out());
        if a.rows() != di || a.cols() != di {
            return Err(Error::dims(format!("input is {}x{}, map expects {di}x{di}", a.rows(), a.cols())));
        }
        let c = &self.choi;
        Ok(CMatrix::from_fn(dk, dk, |o1, o2| {
            let mut acc = ZERO;
            for i in 0..di {
                for j in 0..di {
                    let aij = a[(i, j)];
                    if aij != ZERO {
                        acc += aij * c[(o1 * di + i, o2 * di + j)];
                    }
                }
            }
            acc
        }))
    }

    /// `(phi (x) id_anc)(m)` for `m` on `H (x) C^anc`.
    pub fn apply_with_ancilla(&self, m: &CMatrix, anc: usize) -> Result<CMatrix> {
        let (di, dk) = (self.d_in(), self.d_out());
        if m.rows() != di * anc || m.cols() != di * anc {
            return Err(Error::dims(format!(
                "input is {}x{}, expected {} for a {di}-dimensional input with ancilla {anc}",
                m.rows(),
                m.cols(),
                di * anc
            )));
        }
        let c = &self.choi;
        let n = dk * anc;
        Ok(CMatrix::from_fn(n, n, |r, s| {
            let (o1, a1) = (r / anc, r % anc);
            let (o2, a2) = (s / anc, s % anc);
            let mut acc = ZERO;
            for i in 0..di {
                for j in 0..di {
                    let mij = m[(i * anc + a1, j * anc + a2)];
                    if mij != ZERO {
                        acc += mij * c[(o1 * di + i, o2 * di + j)];
                    }
                }
            }
            acc
        }))
    }

    /// `phi*(I)`; the identity iff `phi` is trace preserving.
    pub fn adjoint_on_identity(&self) -> CMatrix {
        partial_trace(&self.choi, (self.d_out(), self.d_in()), Factor::First)
            .expect("Choi dimensions are consistent")
            .transpose()
    }

    pub fn is_cp(&self, tol: f64) -> bool {
        min_eigenvalue(&self.choi) >= -tol
    }

    pub fn is_trace_preserving(&self, tol: f64) -> bool {
        self.adjoint_on_identity().max_diff(&CMatrix::identity(self.d_in())) <= tol
    }

    pub fn is_channel(&self, tol: f64) -> bool {
        self.is_trace_preserving(tol) && self.is_cp(tol)
    }

    /// Returns `Err(NotCompletelyPositive)` unless the Choi matrix is PSD within `tol`.
    pub fn require_cp(&self, tol: f64) -> Result<()> {
        let m = min_eigenvalue(&self.choi);
        if m < -tol {
            return Err(Error::NotCompletelyPositive { min_eigenvalue: m });
        }
        Ok(())
    }

    pub fn require_channel(&self, tol: f64) -> Result<()> {
        self.require_cp(tol)?;
        let defect = self.adjoint_on_identity().max_diff(&CMatrix::identity(self.d_in()));
        if defect > tol {
            return Err(Error::NotChannel(format!("partial trace deviates from identity by {defect:.3e}")));
        }
        Ok(())
    }

    /// Kraus operators from the eigendecomposition of the Choi matrix (CP maps only;
    /// negative eigenvalues are dropped).
    pub fn kraus(&self) -> Vec<CMatrix> {
        let (di, dk) = (self.d_in(), self.d_out());
        let e = herm_eig_unchecked(&self.choi);
        let cutoff = 1e-14 * e.max().abs().max(1.0);
        e.values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > cutoff)
            .map(|(k, &v)| {
                let s = v.sqrt();
                CMatrix::from_fn(dk, di, |o, i| e.vectors[(o * di + i, k)] * s)
            })
            .collect()
    }

    /// Approximate equality of Choi matrices.
    pub fn approx_eq(&self, other: &HermitianMap, tol: f64) -> bool {
        self.dims == other.dims && self.choi.max_diff(&other.choi) <= tol
    }

    fn require_same_dims(&self, other: &HermitianMap) {
        assert_eq!(self.dims, other.dims, "arithmetic on maps with different dimensions");
    }
}

impl std::fmt::Debug for HermitianMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "HermitianMap {}->{} {:?}", self.d_in(), self.d_out(), self.choi)
    }
}

/// Nearest-channel repair of an approximately optimal Choi matrix: clip
/// negative eigenvalues, then conjugate by `I (x) T^{-1/2}` with
/// `T = Tr_K C`. Returns the channel and the largest entry change.
pub fn project_to_channel(d_in: usize, d_out: usize, choi: &CMatrix) -> Result<(HermitianMap, f64)> {
    let clipped = psd_clip(&choi.hermitian_part());
    let t = partial_trace(&clipped, (d_out, d_in), Factor::First)?;
    let x = inverse_sqrt(&t).map_err(|_| Error::NotChannel("partial trace is singular".into()))?;
    let lift = kron(&CMatrix::identity(d_out), &x);
    let fixed = lift.congruence(&clipped).hermitian_part();
    let shift = fixed.max_diff(choi);
    Ok((HermitianMap::from_choi(d_in, d_out, fixed)?, shift))
}

/// `psi o phi` for `phi: H -> K`, `psi: K -> L`.
pub fn compose(psi: &HermitianMap, phi: &HermitianMap) -> Result<HermitianMap> {
    let (dh, dk, dl) = (phi.d_in(), phi.d_out(), psi.d_out());
    if psi.d_in() != dk {
        return Err(Error::dims(format!(
            "cannot compose: inner map outputs dimension {dk}, outer map takes {}",
            psi.d_in()
        )));
    }
    let (cp, cs) = (&phi.choi, &psi.choi);
    let n = dl * dh;
    let mut choi = CMatrix::zeros(n, n);
    // C[(l1,h1),(l2,h2)] = sum_{k1,k2} Cpsi[(l1,k1),(l2,k2)] Cphi[(k1,h1),(k2,h2)]
    for k1 in 0..dk {
        for k2 in 0..dk {
            for l1 in 0..dl {
                for l2 in 0..dl {
                    let s = cs[(l1 * dk + k1, l2 * dk + k2)];
                    if s == ZERO {
                        continue;
                    }
                    for h1 in 0..dh {
                        for h2 in 0..dh {
                            choi[(l1 * dh + h1, l2 * dh + h2)] += s * cp[(k1 * dh + h1, k2 * dh + h2)];
                        }
                    }
                }
            }
        }
    }
    Ok(HermitianMap { dims: DimPair { d_in: dh, d_out: dl }, choi: choi.hermitian_part() })
}

/// The adjoint with respect to `Tr[phi*(A) B] = Tr[A phi(B)]`.
pub fn adjoint(phi: &HermitianMap) -> HermitianMap {
    let (dh, dk) = (phi.d_in(), phi.d_out());
    let c = &phi.choi;
    let n = dh * dk;
    let choi = CMatrix::from_fn(n, n, |r, s| {
        let (h1, k1) = (r / dk, r % dk);
        let (h2, k2) = (s / dk, s % dk);
        c[(k2 * dh + h2, k1 * dh + h1)]
    });
    HermitianMap { dims: DimPair { d_in: dk, d_out: dh }, choi }
}

/// `phi (x) psi`, acting on `H1 (x) H2`.
pub fn tensor(phi: &HermitianMap, psi: &HermitianMap) -> HermitianMap {
    let (h1, k1) = (phi.d_in(), phi.d_out());
    let (h2, k2) = (psi.d_in(), psi.d_out());
    let (hin, kout) = (h1 * h2, k1 * k2);
    let n = hin * kout;
    let (ca, cb) = (&phi.choi, &psi.choi);
    let choi = CMatrix::from_fn(n, n, |r, s| {
        let (ko, hi) = (r / hin, r % hin);
        let (ko2, hi2) = (s / hin, s % hin);
        let (ka, kb, ha, hb) = (ko / k2, ko % k2, hi / h2, hi % h2);
        let (ka2, kb2, ha2, hb2) = (ko2 / k2, ko2 % k2, hi2 / h2, hi2 % h2);
        ca[(ka * h1 + ha, ka2 * h1 + ha2)] * cb[(kb * h2 + hb, kb2 * h2 + hb2)]
    });
    HermitianMap { dims: DimPair { d_in: hin, d_out: kout }, choi }
}

fn common_square_dim(mats: &[CMatrix]) -> Result<usize> {
    let first = mats.first().ok_or_else(|| Error::dims("empty operator collection"))?;
    let d = first.rows();
    if d == 0 || mats.iter().any(|m| m.rows() != d || m.cols() != d) {
        return Err(Error::dims("operators must be square and share one size"));
    }
    Ok(d)
}

/// `X -> sum_i <e_i, X e_i> A_i`, a map `C^n -> K`.
pub fn cq_map(a: &[CMatrix]) -> Result<HermitianMap> {
    let dk = common_square_dim(a)?;
    let a: Vec<CMatrix> = a.iter().map(|m| m.require_hermitian()).collect::<Result<_>>()?;
    let n = a.len();
    let size = dk * n;
    let choi = CMatrix::from_fn(size, size, |r, s| {
        let (o1, i) = (r / n, r % n);
        let (o2, j) = (s / n, s % n);
        if i == j {
            a[i][(o1, o2)]
        } else {
            ZERO
        }
    });
    Ok(HermitianMap { dims: DimPair { d_in: n, d_out: dk }, choi })
}

/// `X -> sum_i Tr[X B_i] |e_i><e_i|`, a map `H -> C^n`.
pub fn qc_map(b: &[CMatrix]) -> Result<HermitianMap> {
    let dh = common_square_dim(b)?;
    let b: Vec<CMatrix> = b.iter().map(|m| m.require_hermitian()).collect::<Result<_>>()?;
    let n = b.len();
    let size = dh * n;
    let choi = CMatrix::from_fn(size, size, |r, s| {
        let (i, x) = (r / dh, r % dh);
        let (j, y) = (s / dh, s % dh);
        if i == j {
            b[i][(y, x)]
        } else {
            ZERO
        }
    });
    Ok(HermitianMap { dims: DimPair { d_in: dh, d_out: n }, choi })
}

/// The pinching channel onto the diagonal of `C^d`.
pub fn pinching(d: usize) -> HermitianMap {
    let projectors: Vec<CMatrix> = (0..d).map(|i| CMatrix::unit(d, i, i)).collect();
    cq_map(&projectors).expect("basis projectors are valid")
}

/// `s(phi) = sum_ij <e_i, phi(|e_i><e_j|) e_j> = Tr[C(phi) X_H]`.
pub fn s_functional(phi: &HermitianMap) -> Result<f64> {
    let d = phi.d_in();
    if phi.d_out() != d {
        return Err(Error::dims("the s functional needs a map from a space to itself"));
    }
    let mut acc = 0.0;
    for i in 0..d {
        for j in 0..d {
            acc += phi.choi[(i * d + i, j * d + j)].re;
        }
    }
    Ok(acc)
}

/// `<psi, phi> = s(psi o phi) = Tr[C(phi) C(psi*)]` for `psi: K -> H`, `phi: H -> K`.
pub fn pairing(psi: &HermitianMap, phi: &HermitianMap) -> Result<f64> {
    if psi.d_in() != phi.d_out() || psi.d_out() != phi.d_in() {
        return Err(Error::dims(format!(
            "pairing needs maps K->H and H->K, got {}->{} and {}->{}",
            psi.d_in(),
            psi.d_out(),
            phi.d_in(),
            phi.d_out()
        )));
    }
    Ok(phi.choi.trace_product(&adjoint(psi).choi).re)
}

pub fn is_cp(phi: &HermitianMap, tol: f64) -> bool {
    phi.is_cp(tol)
}

pub fn is_channel(phi: &HermitianMap, tol: f64) -> bool {
    phi.is_channel(tol)
}

impl Add<&HermitianMap> for &HermitianMap {
    type Output = HermitianMap;
    fn add(self, rhs: &HermitianMap) -> HermitianMap {
        self.require_same_dims(rhs);
        HermitianMap { dims: self.dims, choi: &self.choi + &rhs.choi }
    }
}

impl Add<HermitianMap> for HermitianMap {
    type Output = HermitianMap;
    fn add(self, rhs: HermitianMap) -> HermitianMap {
        &self + &rhs
    }
}

impl Sub<&HermitianMap> for &HermitianMap {
    type Output = HermitianMap;
    fn sub(self, rhs: &HermitianMap) -> HermitianMap {
        self.require_same_dims(rhs);
        HermitianMap { dims: self.dims, choi: &self.choi - &rhs.choi }
    }
}

impl Sub<HermitianMap> for HermitianMap {
    type Output = HermitianMap;
    fn sub(self, rhs: HermitianMap) -> HermitianMap {
        &self - &rhs
    }
}

impl Mul<f64> for &HermitianMap {
    type Output = HermitianMap;
    fn mul(self, s: f64) -> HermitianMap {
        HermitianMap { dims: self.dims, choi: self.choi.scale(s) }
    }
}

impl Mul<f64> for HermitianMap {
    type Output = HermitianMap;
    fn mul(self, s: f64) -> HermitianMap {
        &self * s
    }
}

impl Neg for &HermitianMap {
    type Output = HermitianMap;
    fn neg(self) -> HermitianMap {
        self * -1.0
    }
}

#[derive(Serialize, Deserialize)]
struct MapRecord {
    d_in: usize,
    d_out: usize,
    choi: CMatrix,
}

impl Serialize for HermitianMap {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MapRecord { d_in: self.d_in(), d_out: self.d_out(), choi: self.choi.clone() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for HermitianMap {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = MapRecord::deserialize(d)?;
        HermitianMap::from_choi(r.d_in, r.d_out, r.choi).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::paulis;

    #[test]
    fn identity_kraus_gives_kernel() {
        let id = HermitianMap::from_kraus(&[CMatrix::identity(3)]).unwrap();
        assert_eq!(id.choi(), &MaxEntangledKernel::new(3).matrix);
        assert!(id.is_channel(CHAN_TOL));
    }

    #[test]
    fn kernel_has_trace_dim_and_rank_one() {
        let x = MaxEntangledKernel::new(3);
        assert!((x.matrix.trace_re() - 3.0).abs() < 1e-15);
        let e = herm_eig_unchecked(&x.matrix);
        assert!((e.values[0] - 3.0).abs() < 1e-12 && e.values[1].abs() < 1e-12);
    }

    #[test]
    fn diagonal_kraus_is_pinching() {
        let k = HermitianMap::from_kraus(&[paulis::ket0(), paulis::ket1()]).unwrap();
        assert!(k.approx_eq(&pinching(2), 1e-15));
    }

    #[test]
    fn pauli_x_kraus() {
        let phi = HermitianMap::from_kraus(&[paulis::x()]).unwrap();
        let xi = kron(&paulis::x(), &CMatrix::identity(2));
        let want = xi.congruence(&MaxEntangledKernel::new(2).matrix);
        assert!(phi.choi().max_diff(&want) < 1e-15);
    }

    #[test]
    fn erasure_outputs_sigma() {
        let sigma = CMatrix::diag_real(&[0.25, 0.75]);
        let phi = HermitianMap::erasure(&sigma, 3).unwrap();
        let rho = CMatrix::diag_real(&[0.2, 0.3, 0.5]);
        assert!(phi.apply(&rho).unwrap().max_diff(&sigma) < 1e-15);
        assert!(phi.is_channel(CHAN_TOL));
    }

    #[test]
    fn apply_rejects_wrong_size() {
        assert!(HermitianMap::identity(2).apply(&CMatrix::identity(3)).is_err());
    }

    #[test]
    fn adjoint_of_identity_and_involution() {
        let id = HermitianMap::identity(2);
        assert!(adjoint(&id).approx_eq(&id, 0.0));
        let phi = HermitianMap::depolarizing(2, 0.3);
        assert!(adjoint(&adjoint(&phi)).approx_eq(&phi, 0.0));
    }

    #[test]
    fn s_functional_values() {
        assert!((s_functional(&HermitianMap::identity(3)).unwrap() - 9.0).abs() < 1e-15);
        assert!((s_functional(&pinching(3)).unwrap() - 3.0).abs() < 1e-15);
        assert!(s_functional(&HermitianMap::zero(2, 3)).is_err());
    }

    #[test]
    fn pairing_of_identities() {
        let id = HermitianMap::identity(3);
        assert!((pairing(&id, &id).unwrap() - 9.0).abs() < 1e-15);
    }

    #[test]
    fn negative_kernel_is_not_cp() {
        let m = HermitianMap::from_choi(2, 2, -MaxEntangledKernel::new(2).matrix).unwrap();
        assert!(!m.is_cp(PSD_TOL));
    }

    #[test]
    fn pinching_is_idempotent() {
        let p = pinching(3);
        assert!(compose(&p, &p).unwrap().approx_eq(&p, 1e-15));
        let rho = CMatrix::from_fn(3, 3, |i, j| C64::new(1.0 + (i * j) as f64, i as f64 - j as f64));
        let out = p.apply(&rho).unwrap();
        assert!(out.max_diff(&CMatrix::diag_real(&[1.0, 2.0, 5.0])) < 1e-15);
    }

    #[test]
    fn qc_map_measures() {
        let m = qc_map(&[paulis::ket0(), paulis::ket1()]).unwrap();
        let rho = CMatrix::from_real_rows(&[&[0.3, 0.1], &[0.1, 0.7]]);
        assert!(m.apply(&rho).unwrap().max_diff(&CMatrix::diag_real(&[0.3, 0.7])) < 1e-15);
        assert!(m.is_channel(CHAN_TOL));
        assert!(m.approx_eq(&pinching(2), 0.0));
    }

    #[test]
    fn kraus_roundtrip() {
        let phi = HermitianMap::depolarizing(2, 0.4);
        let back = HermitianMap::from_kraus(&phi.kraus()).unwrap();
        assert!(back.approx_eq(&phi, 1e-12));
    }

    #[test]
    fn json_record() {
        let phi = pinching(2);
        let s = serde_json::to_string(&phi).unwrap();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["d_in"], 2);
        assert_eq!(v["d_out"], 2);
        assert_eq!(v["choi"][3][3][0], 1.0);
        let back: HermitianMap = serde_json::from_str(&s).unwrap();
        assert_eq!(back, phi);
        assert!(serde_json::from_str::<HermitianMap>("{\"d_in\":2,\"d_out\":1,\"choi\":[[[1,0]]]}").is_err());
    }

    #[test]
    fn projection_repairs_perturbed_channel() {
        let mut r = crate::random::rng(12);
        let phi = crate::random::generic_channel(&mut r, 2, 3);
        let noisy = phi.choi() + &crate::random::hermitian(&mut r, 6).scale(1e-6);
        let (fixed, shift) = project_to_channel(2, 3, &noisy).unwrap();
        assert!(fixed.is_channel(1e-12));
        assert!(shift < 1e-5);
        let (same, s0) = project_to_channel(2, 3, phi.choi()).unwrap();
        assert!(s0 < 1e-12 && same.approx_eq(&phi, 1e-12));
    }
}
