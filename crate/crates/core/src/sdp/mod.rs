//! Dense semidefinite programming over complex Hermitian blocks.
//!
//! A problem has PSD block variables `X_b`, equality constraints
//! `sum_b Tr[A_kb X_b] = r_k` and the objective `sum_b Tr[C_b X_b]`, to be
//! maximized or minimized. [`solve`] runs a primal-dual interior-point method
//! and returns both the primal blocks and the dual vector, so every answer can
//! be re-certified with [`residuals`].

mod builder;
mod solver;

pub use builder::{Block, SdpBuilder};

use std::cell::RefCell;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{min_eigenvalue, CMatrix};

/// Environment variable overriding [`SolverSettings::gap_tol`].
pub const TOL_ENV: &str = "QCOMP_SDP_TOL";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    MaxIter,
    NumericalFailure,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    pub gap_tol: f64,
    pub feas_tol: f64,
    pub max_iter: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings { gap_tol: 1e-8, feas_tol: 1e-8, max_iter: 200 }
    }
}

impl SolverSettings {
    /// Defaults with `gap_tol` taken from `QCOMP_SDP_TOL` when set to a positive number.
    pub fn from_env() -> Self {
        let mut s = Self::default();
        if let Some(t) = std::env::var(TOL_ENV).ok().and_then(|v| v.trim().parse::<f64>().ok()) {
            if t > 0.0 && t.is_finite() {
                s.gap_tol = t;
            }
        }
        s
    }
}

/// One equality row: `sum over terms of Tr[A X_block] = rhs`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Constraint {
    pub terms: Vec<(usize, CMatrix)>,
    pub rhs: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SdpProblem {
    pub blocks: Vec<usize>,
    pub sense: Sense,
    /// One Hermitian coefficient matrix per block.
    pub objective: Vec<CMatrix>,
    pub constraints: Vec<Constraint>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SdpSolution {
    pub status: SolveStatus,
    pub primal_value: f64,
    pub dual_value: f64,
    pub primal_blocks: Vec<CMatrix>,
    /// Multipliers of the constraints, in the order they were added.
    pub dual_vector: Vec<f64>,
    /// `|primal - dual| / (1 + |primal|)`.
    pub gap: f64,
    pub iterations: usize,
}

impl SdpSolution {
    pub fn block(&self, b: Block) -> &CMatrix {
        &self.primal_blocks[b.index()]
    }

    pub fn dual(&self, k: usize) -> f64 {
        self.dual_vector[k]
    }

    /// The value of the problem as posed (primal objective).
    pub fn value(&self) -> f64 {
        self.primal_value
    }
}

/// Recomputed optimality measures of a candidate solution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    /// Largest constraint violation, or the negative part of the smallest
    /// eigenvalue of a primal block, whichever is larger.
    pub primal_infeas: f64,
    /// Negative part of the smallest eigenvalue of the dual slack.
    pub dual_infeas: f64,
    /// `|primal - dual| / (1 + |primal|)`.
    pub gap: f64,
}

/// Solver outcome attached to every SDP-derived number.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub status: SolveStatus,
    pub primal_infeas: f64,
    pub dual_infeas: f64,
    pub gap: f64,
    pub iterations: usize,
}

impl Certificate {
    pub fn from_solution(p: &SdpProblem, s: &SdpSolution) -> Self {
        let r = residuals(p, s);
        Certificate {
            status: s.status,
            primal_infeas: r.primal_infeas,
            dual_infeas: r.dual_infeas,
            gap: r.gap,
            iterations: s.iterations,
        }
    }

    /// Certificate of a closed-form value.
    pub fn exact() -> Self {
        Certificate { status: SolveStatus::Optimal, primal_infeas: 0.0, dual_infeas: 0.0, gap: 0.0, iterations: 0 }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    /// Largest of the three residuals.
    pub fn worst(&self) -> f64 {
        self.primal_infeas.max(self.dual_infeas).max(self.gap)
    }

    /// Combines certificates of several solves: worst status and residuals.
    pub fn merge(&self, other: &Certificate) -> Certificate {
        let status = if self.status == SolveStatus::Optimal { other.status } else { self.status };
        Certificate {
            status,
            primal_infeas: self.primal_infeas.max(other.primal_infeas),
            dual_infeas: self.dual_infeas.max(other.dual_infeas),
            gap: self.gap.max(other.gap),
            iterations: self.iterations + other.iterations,
        }
    }
}

/// A number produced by one or more SDP solves, with their certificate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certified {
    pub value: f64,
    pub certificate: Certificate,
}

impl Certified {
    pub fn exact(value: f64) -> Self {
        Certified { value, certificate: Certificate::exact() }
    }
}

/// Solves with [`SolverSettings::from_env`].
pub fn solve(p: &SdpProblem) -> Result<SdpSolution> {
    solve_with(p, &SolverSettings::from_env())
}

pub fn solve_with(p: &SdpProblem, settings: &SolverSettings) -> Result<SdpSolution> {
    p.validate()?;
    Ok(solver::solve(p, settings))
}

thread_local! {
    static AUDIT: RefCell<Option<Vec<Certificate>>> = const { RefCell::new(None) };
}

/// Runs `f` and returns, with its result, the certificate of every program
/// solved by the library on this thread meanwhile. Calls may nest; inner
/// calls see only their own solves.
pub fn audit<T>(f: impl FnOnce() -> T) -> (T, Vec<Certificate>) {
    let outer = AUDIT.with(|a| a.borrow_mut().replace(Vec::new()));
    let out = f();
    let mine = AUDIT.with(|a| {
        let mut slot = a.borrow_mut();
        let mine = slot.take().unwrap_or_default();
        if let Some(mut o) = outer {
            o.extend_from_slice(&mine);
            *slot = Some(o);
        }
        mine
    });
    (out, mine)
}

/// Runs the solver and converts terminal failures into errors. `MaxIter`
/// results are returned so callers can report them.
pub(crate) fn solve_certified(p: &SdpProblem) -> Result<(SdpSolution, Certificate)> {
    let s = solve(p)?;
    let c = Certificate::from_solution(p, &s);
    AUDIT.with(|a| {
        if let Some(v) = a.borrow_mut().as_mut() {
            v.push(c);
        }
    });
    match s.status {
        SolveStatus::Optimal | SolveStatus::MaxIter => Ok((s, c)),
        status => Err(Error::Solver { status, gap: s.gap }),
    }
}

impl SdpProblem {
    pub fn validate(&self) -> Result<()> {
        if self.objective.len() != self.blocks.len() {
            return Err(Error::dims("one objective matrix per block is required"));
        }
        for (b, (c, &n)) in self.objective.iter().zip(&self.blocks).enumerate() {
            if n == 0 {
                return Err(Error::dims(format!("block {b} has size 0")));
            }
            check_coefficient(c, n, "objective")?;
        }
        for (k, con) in self.constraints.iter().enumerate() {
            if !con.rhs.is_finite() {
                return Err(Error::InvalidInput(format!("constraint {k} has a non-finite right-hand side")));
            }
            for (b, a) in &con.terms {
                let n = *self.blocks.get(*b).ok_or_else(|| Error::dims(format!("constraint {k} names block {b}")))?;
                check_coefficient(a, n, "constraint")?;
            }
        }
        Ok(())
    }

    /// `sum_b Tr[C_b X_b]`.
    pub fn objective_value(&self, x: &[CMatrix]) -> f64 {
        self.objective.iter().zip(x).map(|(c, xb)| c.trace_product(xb).re).sum()
    }

    /// Left-hand side of every constraint at `x`.
    pub fn constraint_values(&self, x: &[CMatrix]) -> Vec<f64> {
        self.constraints.iter().map(|con| con.terms.iter().map(|(b, a)| a.trace_product(&x[*b]).re).sum()).collect()
    }

    /// Dual slack blocks: `A*y - C` when maximizing, `C - A*y` when minimizing.
    pub fn dual_slack(&self, y: &[f64]) -> Vec<CMatrix> {
        let mut aty: Vec<CMatrix> = self.blocks.iter().map(|&n| CMatrix::zeros(n, n)).collect();
        for (con, &yk) in self.constraints.iter().zip(y) {
            for (b, a) in &con.terms {
                aty[*b].axpy(yk, a);
            }
        }
        aty.into_iter()
            .zip(&self.objective)
            .map(|(a, c)| match self.sense {
                Sense::Maximize => a - c,
                Sense::Minimize => c - &a,
            })
            .collect()
    }

    pub fn dual_objective(&self, y: &[f64]) -> f64 {
        self.constraints.iter().zip(y).map(|(c, yk)| c.rhs * yk).sum()
    }
}

fn check_coefficient(a: &CMatrix, n: usize, what: &str) -> Result<()> {
    if a.rows() != n || a.cols() != n {
        return Err(Error::dims(format!("{what} coefficient is {}x{}, block is {n}x{n}", a.rows(), a.cols())));
    }
    if !a.is_hermitian(crate::linalg::HERM_TOL) {
        return Err(Error::NotHermitian { asymmetry: a.hermitian_defect() });
    }
    Ok(())
}

/// Recomputes primal/dual infeasibility and the relative gap from the problem
/// data and the reported primal blocks and dual vector.
pub fn residuals(p: &SdpProblem, s: &SdpSolution) -> Residuals {
    let x = &s.primal_blocks;
    let viol = p.constraint_values(x).iter().zip(&p.constraints).map(|(v, c)| (v - c.rhs).abs()).fold(0.0, f64::max);
    let neg_x = x.iter().map(|b| (-min_eigenvalue(b)).max(0.0)).fold(0.0, f64::max);
    let neg_z = p.dual_slack(&s.dual_vector).iter().map(|z| (-min_eigenvalue(z)).max(0.0)).fold(0.0, f64::max);
    let pv = p.objective_value(x);
    let dv = p.dual_objective(&s.dual_vector);
    Residuals { primal_infeas: viol.max(neg_x), dual_infeas: neg_z, gap: (pv - dv).abs() / (1.0 + pv.abs()) }
}

/// Pretty JSON of a problem, for debugging.
pub fn dump_problem(p: &SdpProblem) -> Result<String> {
    Ok(serde_json::to_string_pretty(p)?)
}

pub fn dump_solution(s: &SdpSolution) -> Result<String> {
    Ok(serde_json::to_string_pretty(s)?)
}

#[cfg(test)]
mod tests;
