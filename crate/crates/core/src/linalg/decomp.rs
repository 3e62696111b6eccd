//! Hermitian eigendecomposition (cyclic Jacobi), Cholesky and the norms
//! built on them.

use super::matrix::{CMatrix, C64, ONE, ZERO};
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;

/// Eigen-decomposition `M = V diag(values) V^dagger` of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermEig {
    /// Eigenvalues in descending order.
    pub values: Vec<f64>,
    /// Unitary whose columns are the matching eigenvectors.
    pub vectors: CMatrix,
}

impl HermEig {
    pub fn reconstruct(&self) -> CMatrix {
        self.apply_fn(|x| x)
    }

    /// `V f(diag) V^dagger`.
    pub fn apply_fn(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.values.len();
        let fv: Vec<f64> = self.values.iter().map(|&x| f(x)).collect();
        let v = &self.vectors;
        let mut out = CMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let mut acc = ZERO;
                for k in 0..n {
                    if fv[k] != 0.0 {
                        acc += v[(i, k)] * v[(j, k)].conj() * fv[k];
                    }
                }
                out[(i, j)] = acc;
                out[(j, i)] = acc.conj();
            }
        }
        for i in 0..n {
            out[(i, i)] = C64::new(out[(i, i)].re, 0.0);
        }
        out
    }

    pub fn min(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }
}

/// Eigendecomposition of a Hermitian matrix; checks Hermiticity within
/// [`HERM_TOL`](super::HERM_TOL) and symmetrizes before iterating.
pub fn herm_eig(m: &CMatrix) -> Result<HermEig> {
    let h = m.require_hermitian()?;
    Ok(jacobi(h))
}

/// Eigendecomposition of the Hermitian part of `m`, skipping the check.
pub fn herm_eig_unchecked(m: &CMatrix) -> HermEig {
    jacobi(m.hermitian_part())
}

pub fn eigenvalues(m: &CMatrix) -> Result<Vec<f64>> {
    Ok(herm_eig(m)?.values)
}

pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    herm_eig_unchecked(m).min()
}

fn jacobi(mut a: CMatrix) -> HermEig {
    let n = a.rows();
    let mut v = CMatrix::identity(n);
    let scale = a.frobenius_norm();
    if n <= 1 || scale == 0.0 {
        return finish(a, v);
    }
    let floor = scale * f64::EPSILON * 1e-3;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag <= floor {
                    continue;
                }
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                rotated = true;
                let phase = apq / mag;
                let theta = (aqq - app) / (2.0 * mag);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // J = diag(1, conj(phase)) * [[c, s], [-s, c]] on the (p, q) plane.
                let jpp = C64::new(c, 0.0);
                let jpq = C64::new(s, 0.0);
                let jqp = phase.conj() * (-s);
                let jqq = phase.conj() * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * jpp + akq * jqp;
                    a[(k, q)] = akp * jpq + akq * jqq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = jpp.conj() * apk + jqp.conj() * aqk;
                    a[(q, k)] = jpq.conj() * apk + jqq.conj() * aqk;
                }
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
                a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * jpp + vkq * jqp;
                    v[(k, q)] = vkp * jpq + vkq * jqq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    finish(a, v)
}

fn finish(a: CMatrix, v: CMatrix) -> HermEig {
    let n = a.rows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].re.total_cmp(&a[(i, i)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    HermEig { values, vectors }
}

/// Lower-triangular `L` with `M = L L^dagger`.
pub fn cholesky(m: &CMatrix) -> Result<CMatrix> {
    let n = m.rows();
    if !m.is_square() {
        return Err(Error::dims("cholesky of a non-square matrix"));
    }
    let mut l = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = m[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::NotPositiveDefinite);
        }
        let djj = d.sqrt();
        l[(j, j)] = C64::new(djj, 0.0);
        for i in j + 1..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(l)
}

/// Inverse of a lower-triangular matrix.
pub fn lower_triangular_inverse(l: &CMatrix) -> CMatrix {
    let n = l.rows();
    let mut inv = CMatrix::zeros(n, n);
    for j in 0..n {
        inv[(j, j)] = ONE / l[(j, j)];
        for i in j + 1..n {
            let mut s = ZERO;
            for k in j..i {
                s += l[(i, k)] * inv[(k, j)];
            }
            inv[(i, j)] = -s / l[(i, i)];
        }
    }
    inv
}

/// Sum of singular values. Hermitian input goes through its eigenvalues;
/// general input through the Hermitian dilation `[[0, M], [M^dagger, 0]]`,
/// whose spectrum is `+-` the singular values.
pub fn trace_norm(m: &CMatrix) -> f64 {
    if m.is_square() && m.is_hermitian(super::HERM_TOL) {
        herm_eig_unchecked(m).values.iter().map(|x| x.abs()).sum()
    } else {
        singular_values(m).iter().sum()
    }
}

/// Largest singular value.
pub fn op_norm(m: &CMatrix) -> f64 {
    if m.is_square() && m.is_hermitian(super::HERM_TOL) {
        let e = herm_eig_unchecked(m);
        e.max().abs().max(e.min().abs())
    } else {
        singular_values(m).first().copied().unwrap_or(0.0)
    }
}

/// Singular values in descending order.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    let (r, c) = (m.rows(), m.cols());
    let dil = CMatrix::from_fn(r + c, r + c, |i, j| {
        if i < r && j >= r {
            m[(i, j - r)]
        } else if i >= r && j < r {
            m[(j, i - r)].conj()
        } else {
            ZERO
        }
    });
    let e = herm_eig_unchecked(&dil);
    let mut sv: Vec<f64> = e.values.iter().take(r.min(c)).map(|x| x.max(0.0)).collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Projection onto the PSD cone (negative eigenvalues set to zero).
pub fn psd_clip(m: &CMatrix) -> CMatrix {
    herm_eig_unchecked(m).apply_fn(|x| x.max(0.0))
}

/// Square root of a PSD matrix; small negative eigenvalues are clipped.
pub fn psd_sqrt(m: &CMatrix) -> CMatrix {
    herm_eig_unchecked(m).apply_fn(|x| x.max(0.0).sqrt())
}

/// `M^{-1/2}` for positive definite `M`.
pub fn inverse_sqrt(m: &CMatrix) -> Result<CMatrix> {
    let e = herm_eig_unchecked(m);
    if e.min() <= 0.0 {
        return Err(Error::NotPositiveDefinite);
    }
    Ok(e.apply_fn(|x| 1.0 / x.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::paulis;

    #[test]
    fn identity_eigenvalues() {
        let e = herm_eig(&CMatrix::identity(2)).unwrap();
        assert_eq!(e.values, vec![1.0, 1.0]);
    }

    #[test]
    fn pauli_z_eigenvalues() {
        let e = herm_eig(&paulis::z()).unwrap();
        assert_eq!(e.values, vec![1.0, -1.0]);
    }

    #[test]
    fn pauli_y_reconstructs() {
        let y = paulis::y();
        let e = herm_eig(&y).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14 && (e.values[1] + 1.0).abs() < 1e-14);
        assert!(e.reconstruct().max_diff(&y) < 1e-14);
    }

    #[test]
    fn not_hermitian_is_reported() {
        let m = CMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert!(matches!(herm_eig(&m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn cholesky_roundtrip() {
        let a = CMatrix::from_fn(3, 3, |i, j| C64::new((i * j) as f64 * 0.1, (i as f64) - (j as f64)));
        let m = a.matmul(&a.adjoint()) + CMatrix::identity(3);
        let l = cholesky(&m).unwrap();
        assert!(l.matmul(&l.adjoint()).max_diff(&m) < 1e-13);
        let li = lower_triangular_inverse(&l);
        assert!(li.matmul(&l).max_diff(&CMatrix::identity(3)) < 1e-13);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        assert!(cholesky(&paulis::z()).is_err());
    }

    #[test]
    fn norms_of_paulis_and_diagonals() {
        assert!((trace_norm(&paulis::x()) - 2.0).abs() < 1e-14);
        assert!((op_norm(&CMatrix::identity(4)) - 1.0).abs() < 1e-14);
        assert!((op_norm(&CMatrix::diag_real(&[3.0, -5.0])) - 5.0).abs() < 1e-14);
    }

    #[test]
    fn zero_minus_plus_projector_has_trace_norm_sqrt2() {
        // Eigenvalues of |0><0| - |+><+| are +-1/sqrt(2).
        let zero = CMatrix::diag_real(&[1.0, 0.0]);
        let plus = CMatrix::from_real_rows(&[&[0.5, 0.5], &[0.5, 0.5]]);
        assert!((trace_norm(&(zero - plus)) - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn singular_values_of_rectangular() {
        // [[3, 0, 0], [0, 0, -2]] has singular values 3 and 2.
        let m = CMatrix::from_real_rows(&[&[3.0, 0.0, 0.0], &[0.0, 0.0, -2.0]]);
        let sv = singular_values(&m);
        assert!((sv[0] - 3.0).abs() < 1e-14 && (sv[1] - 2.0).abs() < 1e-14);
        assert!((trace_norm(&m) - 5.0).abs() < 1e-14);
    }
}
