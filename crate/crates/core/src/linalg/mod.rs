//! Dense complex linear algebra.

mod decomp;
mod hvec;
mod matrix;
mod tensor;

pub use decomp::{
    cholesky, eigenvalues, herm_eig, herm_eig_unchecked, inverse_sqrt, lower_triangular_inverse, min_eigenvalue,
    op_norm, psd_clip, psd_sqrt, singular_values, trace_norm, HermEig,
};
pub use hvec::{herm_basis, herm_dim, hmat, hvec, hvec_into, real_span_rank};
pub use matrix::{CMatrix, C64, HERM_TOL, ONE, ZERO};
pub use tensor::{kron, partial_trace, partial_transpose, swap_factors, Factor};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Input and output dimensions of a map.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DimPair {
    pub d_in: usize,
    pub d_out: usize,
}

impl DimPair {
    pub fn new(d_in: usize, d_out: usize) -> Result<Self> {
        if d_in == 0 || d_out == 0 {
            return Err(Error::dims("dimensions must be at least 1"));
        }
        Ok(DimPair { d_in, d_out })
    }
}

/// Kronecker product of several factors, left to right.
pub fn kron_all(factors: &[&CMatrix]) -> CMatrix {
    factors.iter().fold(CMatrix::identity(1), |acc, f| kron(&acc, f))
}

/// Pauli matrices and a few standard qubit states.
pub mod paulis {
    use super::{CMatrix, C64};

    pub fn x() -> CMatrix {
        CMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])
    }

    pub fn y() -> CMatrix {
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 1)] = C64::new(0.0, -1.0);
        m[(1, 0)] = C64::new(0.0, 1.0);
        m
    }

    pub fn z() -> CMatrix {
        CMatrix::diag_real(&[1.0, -1.0])
    }

    /// `|0><0|`
    pub fn ket0() -> CMatrix {
        CMatrix::diag_real(&[1.0, 0.0])
    }

    /// `|1><1|`
    pub fn ket1() -> CMatrix {
        CMatrix::diag_real(&[0.0, 1.0])
    }

    /// `|+><+|`
    pub fn plus() -> CMatrix {
        CMatrix::from_real_rows(&[&[0.5, 0.5], &[0.5, 0.5]])
    }
}
