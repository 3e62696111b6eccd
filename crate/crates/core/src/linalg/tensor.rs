//! Tensor-product operations on composite spaces `A (x) B`.
//!
//! The composite index `(a, b)` flattens to `a * dim_b + b`: the first
//! factor is the slow index.

use super::matrix::{CMatrix, ZERO};
use crate::error::{Error, Result};

/// Which tensor factor an operation acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Factor {
    First,
    Second,
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac, br, bc) = (a.rows(), a.cols(), b.rows(), b.cols());
    let mut out = CMatrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[(i, j)];
            if aij == ZERO {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

fn check_square_dims(m: &CMatrix, dims: (usize, usize)) -> Result<()> {
    let n = dims.0 * dims.1;
    if m.rows() != n || m.cols() != n {
        return Err(Error::dims(format!(
            "{}x{} matrix on a {}x{} composite space",
            m.rows(),
            m.cols(),
            dims.0,
            dims.1
        )));
    }
    Ok(())
}

/// Traces out `which` factor of a matrix on `A (x) B` with `dims = (dA, dB)`.
pub fn partial_trace(m: &CMatrix, dims: (usize, usize), which: Factor) -> Result<CMatrix> {
    check_square_dims(m, dims)?;
    let (da, db) = dims;
    Ok(match which {
        Factor::First => CMatrix::from_fn(db, db, |b1, b2| (0..da).map(|a| m[(a * db + b1, a * db + b2)]).sum()),
        Factor::Second => CMatrix::from_fn(da, da, |a1, a2| (0..db).map(|b| m[(a1 * db + b, a2 * db + b)]).sum()),
    })
}

/// Transposes the `which` factor of a matrix on `A (x) B`.
pub fn partial_transpose(m: &CMatrix, dims: (usize, usize), which: Factor) -> Result<CMatrix> {
    check_square_dims(m, dims)?;
    let (da, db) = dims;
    let n = da * db;
    Ok(CMatrix::from_fn(n, n, |r, c| {
        let (a1, b1) = (r / db, r % db);
        let (a2, b2) = (c / db, c % db);
        match which {
            Factor::First => m[(a2 * db + b1, a1 * db + b2)],
            Factor::Second => m[(a1 * db + b2, a2 * db + b1)],
        }
    }))
}

/// Reorders `A (x) B` into `B (x) A`: returns `S M S^dagger` with `S` the swap.
pub fn swap_factors(m: &CMatrix, dims: (usize, usize)) -> Result<CMatrix> {
    check_square_dims(m, dims)?;
    let (da, db) = dims;
    let n = da * db;
    Ok(CMatrix::from_fn(n, n, |r, c| {
        let (b1, a1) = (r / da, r % da);
        let (b2, a2) = (c / da, c % da);
        m[(a1 * db + b1, a2 * db + b2)]
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{paulis, C64};

    fn sample(n: usize, seed: f64) -> CMatrix {
        CMatrix::from_fn(n, n, |i, j| {
            C64::new((seed + i as f64 * 1.3 - j as f64).sin(), (seed * j as f64 + i as f64).cos())
        })
    }

    #[test]
    fn partial_trace_of_product() {
        let a = sample(2, 0.3);
        let b = sample(3, 1.7);
        let ab = kron(&a, &b);
        let pa = partial_trace(&ab, (2, 3), Factor::Second).unwrap();
        assert!(pa.max_diff(&a.scale_c(b.trace())) < 1e-13);
        let pb = partial_trace(&ab, (2, 3), Factor::First).unwrap();
        assert!(pb.max_diff(&b.scale_c(a.trace())) < 1e-13);
    }

    #[test]
    fn partial_transpose_is_involution() {
        let m = sample(6, 0.9);
        for which in [Factor::First, Factor::Second] {
            let t = partial_transpose(&m, (2, 3), which).unwrap();
            let tt = partial_transpose(&t, (2, 3), which).unwrap();
            assert_eq!(tt, m);
        }
    }

    #[test]
    fn partial_transposes_compose_to_full_transpose() {
        let m = sample(6, 2.1);
        let t1 = partial_transpose(&m, (2, 3), Factor::First).unwrap();
        let t12 = partial_transpose(&t1, (2, 3), Factor::Second).unwrap();
        assert_eq!(t12, m.transpose());
    }

    #[test]
    fn swap_reverses_kron() {
        let a = sample(2, 0.1);
        let b = sample(3, 0.2);
        let swapped = swap_factors(&kron(&a, &b), (2, 3)).unwrap();
        assert!(swapped.max_diff(&kron(&b, &a)) < 1e-14);
    }

    #[test]
    fn dimension_mismatch() {
        let m = paulis::x();
        assert!(partial_trace(&m, (2, 2), Factor::First).is_err());
    }
}
