//! Real coordinates of Hermitian matrices in the orthonormal basis
//! `{E_ii} u {(E_ij + E_ji)/sqrt2} u {i(E_ij - E_ji)/sqrt2}` (i < j), so that
//! `Tr[A B] = hvec(A) . hvec(B)` for Hermitian `A`, `B`.

use std::f64::consts::SQRT_2;

use super::matrix::{CMatrix, C64};

/// Number of real coordinates of an `n x n` Hermitian matrix.
pub fn herm_dim(n: usize) -> usize {
    n * n
}

pub fn hvec(m: &CMatrix) -> Vec<f64> {
    let mut out = vec![0.0; herm_dim(m.rows())];
    hvec_into(m, &mut out);
    out
}

pub fn hvec_into(m: &CMatrix, out: &mut [f64]) {
    let n = m.rows();
    debug_assert_eq!(out.len(), n * n);
    let mut k = 0;
    for i in 0..n {
        out[k] = m[(i, i)].re;
        k += 1;
    }
    for i in 0..n {
        for j in i + 1..n {
            // Average both triangles so slightly non-Hermitian input maps to
            // its Hermitian part.
            let z = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            out[k] = SQRT_2 * z.re;
            out[k + 1] = -SQRT_2 * z.im;
            k += 2;
        }
    }
}

pub fn hmat(v: &[f64], n: usize) -> CMatrix {
    debug_assert_eq!(v.len(), n * n);
    let mut m = CMatrix::zeros(n, n);
    let mut k = 0;
    for i in 0..n {
        m[(i, i)] = C64::new(v[i], 0.0);
        k += 1;
    }
    for i in 0..n {
        for j in i + 1..n {
            let z = C64::new(v[k], -v[k + 1]) / SQRT_2;
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
            k += 2;
        }
    }
    m
}

/// The orthonormal Hermitian basis matrices, in `hvec` coordinate order.
pub fn herm_basis(n: usize) -> Vec<CMatrix> {
    (0..herm_dim(n))
        .map(|k| {
            let mut e = vec![0.0; herm_dim(n)];
            e[k] = 1.0;
            hmat(&e, n)
        })
        .collect()
}

/// Dimension of the real span of Hermitian matrices of one size. Computed by
/// Gram-Schmidt with reorthogonalization; a residual below `1e-9` times the
/// largest coordinate norm counts as dependent.
pub fn real_span_rank(ms: &[CMatrix]) -> usize {
    let vs: Vec<Vec<f64>> = ms.iter().map(hvec).collect();
    let top = vs.iter().map(|v| norm(v)).fold(0.0, f64::max);
    if top == 0.0 {
        return 0;
    }
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for v in vs {
        let mut r = v;
        for _ in 0..2 {
            for q in &basis {
                let c: f64 = r.iter().zip(q).map(|(a, b)| a * b).sum();
                r.iter_mut().zip(q).for_each(|(a, b)| *a -= c * b);
            }
        }
        let n = norm(&r);
        if n > 1e-9 * top {
            basis.push(r.into_iter().map(|x| x / n).collect());
        }
    }
    basis.len()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_is_orthonormal() {
        let b = herm_basis(3);
        for (i, x) in b.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                let t = x.trace_product(y);
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((t.re - want).abs() < 1e-14 && t.im.abs() < 1e-14);
            }
        }
    }

    #[test]
    fn inner_product_is_trace() {
        let a = CMatrix::from_fn(3, 3, |i, j| C64::new((i + j) as f64, i as f64 - j as f64));
        let b = CMatrix::from_fn(3, 3, |i, j| C64::new((i * j) as f64 + 1.0, 2.0 * (j as f64 - i as f64)));
        let dot: f64 = hvec(&a).iter().zip(hvec(&b)).map(|(x, y)| x * y).sum();
        assert!((dot - a.trace_product(&b).re).abs() < 1e-12);
        assert!(hmat(&hvec(&a), 3).max_diff(&a) < 1e-14);
    }
}
