use std::f64::consts::FRAC_1_SQRT_2;

use super::{Constraint, SdpProblem, Sense};
use crate::linalg::{herm_basis, hmat, CMatrix, C64};

/// Handle to a PSD block variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Block(usize);

impl Block {
    pub fn index(self) -> usize {
        self.0
    }
}

/// A linear map applied to one block inside a matrix constraint.
pub type BlockMap<'a> = (Block, &'a dyn Fn(&CMatrix) -> CMatrix);

/// Incremental construction of an [`SdpProblem`].
///
/// Matrix equalities `sum_b f_b(X_b) = R` are expanded into one scalar row
/// per basis element of the Hermitian target space.
pub struct SdpBuilder {
    problem: SdpProblem,
}

impl SdpBuilder {
    pub fn new(sense: Sense) -> Self {
        SdpBuilder { problem: SdpProblem { blocks: vec![], sense, objective: vec![], constraints: vec![] } }
    }

    pub fn block(&mut self, n: usize) -> Block {
        self.problem.blocks.push(n);
        self.problem.objective.push(CMatrix::zeros(n, n));
        Block(self.problem.blocks.len() - 1)
    }

    pub fn size(&self, b: Block) -> usize {
        self.problem.blocks[b.0]
    }

    /// Adds `Tr[c X_b]` to the objective.
    pub fn objective(&mut self, b: Block, c: &CMatrix) {
        self.problem.objective[b.0] += c;
    }

    /// Adds a real-linear functional of `X_b` to the objective.
    pub fn objective_fn(&mut self, b: Block, f: impl Fn(&CMatrix) -> f64) {
        let n = self.size(b);
        let coeffs: Vec<f64> = herm_basis(n).iter().map(f).collect();
        self.problem.objective[b.0] += &hmat(&coeffs, n);
    }

    /// `sum_i Tr[A_i X_{b_i}] = rhs`. Returns the row index.
    pub fn scalar_constraint(&mut self, terms: &[(Block, CMatrix)], rhs: f64) -> usize {
        let terms = terms.iter().map(|(b, a)| (b.0, a.clone())).collect();
        self.problem.constraints.push(Constraint { terms, rhs });
        self.problem.constraints.len() - 1
    }

    /// `sum_i f_i(X_{b_i}) = rhs` as an equality of `dim x dim` Hermitian
    /// matrices. Returns the range of row indices, one per basis element in
    /// `hvec` order.
    pub fn matrix_constraint(&mut self, dim: usize, terms: &[BlockMap<'_>], rhs: &CMatrix) -> std::ops::Range<usize> {
        self.tested_constraint(&herm_basis(dim), terms, rhs)
    }

    /// Like [`matrix_constraint`](Self::matrix_constraint) but only the
    /// traceless part of the equality is imposed.
    pub fn traceless_constraint(
        &mut self,
        dim: usize,
        terms: &[BlockMap<'_>],
        rhs: &CMatrix,
    ) -> std::ops::Range<usize> {
        self.tested_constraint(&traceless_basis(dim), terms, rhs)
    }

    /// One row `sum_i Tr[T f_i(X_{b_i})] = Tr[T rhs]` per test matrix `T`.
    pub fn tested_constraint(
        &mut self,
        tests: &[CMatrix],
        terms: &[BlockMap<'_>],
        rhs: &CMatrix,
    ) -> std::ops::Range<usize> {
        let start = self.problem.constraints.len();
        let mut rows: Vec<Constraint> =
            tests.iter().map(|t| Constraint { terms: vec![], rhs: t.trace_product(rhs).re }).collect();
        for (b, f) in terms {
            let n = self.size(*b);
            let images: Vec<CMatrix> = herm_basis(n).iter().map(f).collect();
            for (row, t) in rows.iter_mut().zip(tests) {
                let coeffs: Vec<f64> = images.iter().map(|y| t.trace_product(y).re).collect();
                if coeffs.iter().any(|&c| c != 0.0) {
                    row.terms.push((b.0, hmat(&coeffs, n)));
                }
            }
        }
        self.problem.constraints.extend(rows);
        start..self.problem.constraints.len()
    }

    pub fn build(self) -> SdpProblem {
        self.problem
    }
}

/// A basis of the traceless Hermitian `d x d` matrices: the
/// off-diagonal elements of the `hvec` basis plus `(E_ii - E_(i+1)(i+1))/sqrt2`.
pub fn traceless_basis(d: usize) -> Vec<CMatrix> {
    let mut out: Vec<CMatrix> = herm_basis(d).into_iter().skip(d).collect();
    for i in 0..d.saturating_sub(1) {
        let mut m = CMatrix::zeros(d, d);
        m[(i, i)] = C64::new(FRAC_1_SQRT_2, 0.0);
        m[(i + 1, i + 1)] = C64::new(-FRAC_1_SQRT_2, 0.0);
        out.push(m);
    }
    out
}
