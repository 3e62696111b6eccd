use super::*;
use crate::linalg::{eigenvalues, paulis, trace_norm, C64};
use crate::random::{self, rng};

fn opt() -> SolverSettings {
    SolverSettings::default()
}

/// `max Tr[c X]` s.t. `Tr X = 1`: the largest eigenvalue of `c`.
fn lambda_max_problem(c: &CMatrix) -> SdpProblem {
    let n = c.rows();
    let mut b = SdpBuilder::new(Sense::Maximize);
    let x = b.block(n);
    b.objective(x, c);
    b.scalar_constraint(&[(x, CMatrix::identity(n))], 1.0);
    b.build()
}

/// `min Tr[P + N]` s.t. `P - N = m`: the trace norm of `m`.
fn trace_norm_problem(m: &CMatrix) -> SdpProblem {
    let n = m.rows();
    let mut b = SdpBuilder::new(Sense::Minimize);
    let p = b.block(n);
    let q = b.block(n);
    b.objective(p, &CMatrix::identity(n));
    b.objective(q, &CMatrix::identity(n));
    b.matrix_constraint(n, &[(p, &|x: &CMatrix| x.clone()), (q, &|x: &CMatrix| -x)], m);
    b.build()
}

fn assert_certified(p: &SdpProblem, s: &SdpSolution) {
    assert_eq!(s.status, SolveStatus::Optimal);
    let r = residuals(p, s);
    assert!(r.primal_infeas <= 1e-8 && r.dual_infeas <= 1e-8 && r.gap <= 1e-8, "{r:?}");
}

#[test]
fn scalar_lp() {
    let p = lambda_max_problem(&CMatrix::identity(1));
    let s = solve_with(&p, &opt()).unwrap();
    assert_certified(&p, &s);
    assert!((s.primal_value - 1.0).abs() < 1e-9);
    let r = residuals(&p, &s);
    assert!(r.primal_infeas <= 1e-8 && r.dual_infeas <= 1e-8 && r.gap <= 1e-8);
}

#[test]
fn lambda_max_matches_eigenvalues() {
    let mut r = rng(11);
    for n in [2, 3, 5, 8] {
        let c = random::hermitian(&mut r, n);
        let p = lambda_max_problem(&c);
        let s = solve_with(&p, &opt()).unwrap();
        assert_certified(&p, &s);
        let want = eigenvalues(&c).unwrap()[0];
        assert!((s.primal_value - want).abs() < 1e-7, "{} vs {want}", s.primal_value);
        assert!(s.dual_value >= s.primal_value - 1e-9);
    }
}

#[test]
fn trace_norm_matches_eigenvalues() {
    let mut r = rng(12);
    for n in [1, 2, 4, 6] {
        let m = random::hermitian(&mut r, n);
        let p = trace_norm_problem(&m);
        let s = solve_with(&p, &opt()).unwrap();
        assert_certified(&p, &s);
        assert!((s.primal_value - trace_norm(&m)).abs() < 1e-7);
    }
}

#[test]
fn complex_coefficients() {
    // Pauli Y has eigenvalues +-1, so the trace norm SDP must see its imaginary part.
    let p = trace_norm_problem(&paulis::y());
    let s = solve_with(&p, &opt()).unwrap();
    assert_certified(&p, &s);
    assert!((s.primal_value - 2.0).abs() < 1e-8);
}

#[test]
fn dependent_rows_are_dropped() {
    let mut b = SdpBuilder::new(Sense::Maximize);
    let x = b.block(2);
    b.objective(x, &paulis::z());
    b.scalar_constraint(&[(x, CMatrix::identity(2))], 1.0);
    b.scalar_constraint(&[(x, CMatrix::identity(2).scale(2.0))], 2.0);
    let p = b.build();
    let s = solve_with(&p, &opt()).unwrap();
    assert_certified(&p, &s);
    assert!((s.primal_value - 1.0).abs() < 1e-8);
}

#[test]
fn inconsistent_rows_are_infeasible() {
    let mut b = SdpBuilder::new(Sense::Maximize);
    let x = b.block(2);
    b.scalar_constraint(&[(x, CMatrix::identity(2))], 1.0);
    b.scalar_constraint(&[(x, CMatrix::identity(2))], 2.0);
    let s = solve_with(&b.build(), &opt()).unwrap();
    assert_eq!(s.status, SolveStatus::Infeasible);
}

#[test]
fn negative_trace_is_infeasible() {
    let mut b = SdpBuilder::new(Sense::Maximize);
    let x = b.block(2);
    b.objective(x, &paulis::x());
    b.scalar_constraint(&[(x, CMatrix::identity(2))], -1.0);
    let s = solve_with(&b.build(), &opt()).unwrap();
    assert_eq!(s.status, SolveStatus::Infeasible);
}

#[test]
fn unbounded_objective() {
    // max Tr[X] with only an off-diagonal constraint.
    let mut b = SdpBuilder::new(Sense::Maximize);
    let x = b.block(2);
    b.objective(x, &CMatrix::identity(2));
    b.scalar_constraint(&[(x, paulis::x())], 0.0);
    let s = solve_with(&b.build(), &opt()).unwrap();
    assert_eq!(s.status, SolveStatus::Unbounded);
}

#[test]
fn perturbed_solution_is_detected() {
    let p = lambda_max_problem(&random::hermitian(&mut rng(13), 3));
    let mut s = solve_with(&p, &opt()).unwrap();
    s.primal_blocks[0][(0, 0)] += C64::new(1e-3, 0.0);
    assert!(residuals(&p, &s).primal_infeas >= 1e-4);
}

#[test]
fn functional_objective_matches_matrix_objective() {
    let c = random::hermitian(&mut rng(14), 3);
    let mut b = SdpBuilder::new(Sense::Maximize);
    let x = b.block(3);
    b.objective_fn(x, |m| c.trace_product(m).re);
    b.scalar_constraint(&[(x, CMatrix::identity(3))], 1.0);
    let p = b.build();
    assert!(p.objective[0].max_diff(&c) < 1e-14);
}

#[test]
fn env_override_changes_gap_tol() {
    // Only checks parsing; the process environment is shared across tests.
    let s = SolverSettings::default();
    assert_eq!((s.gap_tol, s.feas_tol, s.max_iter), (1e-8, 1e-8, 200));
}

#[test]
fn json_dump_roundtrip() {
    let p = lambda_max_problem(&paulis::z());
    let text = dump_problem(&p).unwrap();
    let back: SdpProblem = serde_json::from_str(&text).unwrap();
    assert_eq!(back.blocks, p.blocks);
    assert!(text.contains("\"maximize\""));
    let s = solve_with(&p, &opt()).unwrap();
    assert!(dump_solution(&s).unwrap().contains("\"optimal\""));
}

#[test]
fn audit_collects_nested_solves() {
    let p = lambda_max_problem(&CMatrix::diag_real(&[1.0, 2.0]));
    let ((), outer) = audit(|| {
        solve_certified(&p).unwrap();
        let ((), inner) = audit(|| {
            solve_certified(&p).unwrap();
        });
        assert_eq!(inner.len(), 1);
    });
    assert_eq!(outer.len(), 2);
    assert!(outer.iter().all(|c| c.is_optimal()));
}
