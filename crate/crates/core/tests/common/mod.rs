//! Independent reference computations for integration tests. Nothing here
//! calls the library's eigensolver or SDP solver.

#![allow(dead_code)]

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use qcomp::{CMatrix, C64};

/// Eigenvalues of a Hermitian matrix of size 1, 2 or 3 in closed form.
pub fn small_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let a = |i: usize, j: usize| m[(i, j)];
    match m.rows() {
        1 => vec![a(0, 0).re],
        2 => {
            let (p, q) = (a(0, 0).re, a(1, 1).re);
            let r = (((p - q) / 2.0).powi(2) + a(0, 1).norm_sqr()).sqrt();
            vec![(p + q) / 2.0 + r, (p + q) / 2.0 - r]
        }
        3 => {
            // Trigonometric solution of the characteristic cubic.
            let off = a(0, 1).norm_sqr() + a(0, 2).norm_sqr() + a(1, 2).norm_sqr();
            let q = (a(0, 0).re + a(1, 1).re + a(2, 2).re) / 3.0;
            let p2 = (0..3).map(|i| (a(i, i).re - q).powi(2)).sum::<f64>() + 2.0 * off;
            let p = (p2 / 6.0).sqrt();
            if p < 1e-300 {
                return vec![q; 3];
            }
            let b = |i: usize, j: usize| (a(i, j) - if i == j { C64::new(q, 0.0) } else { C64::new(0.0, 0.0) }) / p;
            let det = b(0, 0) * (b(1, 1) * b(2, 2) - b(1, 2) * b(2, 1))
                - b(0, 1) * (b(1, 0) * b(2, 2) - b(1, 2) * b(2, 0))
                + b(0, 2) * (b(1, 0) * b(2, 1) - b(1, 1) * b(2, 0));
            let r = (det.re / 2.0).clamp(-1.0, 1.0);
            let phi = r.acos() / 3.0;
            let e1 = q + 2.0 * p * phi.cos();
            let e3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
            vec![e1, 3.0 * q - e1 - e3, e3]
        }
        n => panic!("closed-form eigenvalues only for n <= 3, got {n}"),
    }
}

pub fn small_trace_norm(m: &CMatrix) -> f64 {
    small_eigenvalues(m).iter().map(|l| l.abs()).sum()
}

/// Optimal success probability for two weighted states.
pub fn helstrom(p0: f64, rho0: &CMatrix, rho1: &CMatrix) -> f64 {
    let d = &rho0.scale(p0) - &rho1.scale(1.0 - p0);
    0.5 * (1.0 + small_trace_norm(&d))
}

/// `min_W max_theta ||sigma_theta - W rho_theta||_1 / 2` over column-stochastic
/// `W`, for probability vectors `rho_theta` (length h) and `sigma_theta` (length k).
pub fn lecam_lp(sigmas: &[Vec<f64>], rhos: &[Vec<f64>]) -> f64 {
    let (k, h) = (sigmas[0].len(), rhos[0].len());
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let eps = lp.add_var(1.0, (0.0, f64::INFINITY));
    let w: Vec<Vec<_>> = (0..k).map(|_| (0..h).map(|_| lp.add_var(0.0, (0.0, 1.0))).collect()).collect();
    for c in 0..h {
        lp.add_constraint((0..k).map(|r| (w[r][c], 1.0)).collect::<Vec<_>>(), ComparisonOp::Eq, 1.0);
    }
    for (s, r) in sigmas.iter().zip(rhos) {
        let u: Vec<_> = (0..k).map(|_| lp.add_var(0.0, (0.0, f64::INFINITY))).collect();
        for i in 0..k {
            // u_i >= +-(s_i - sum_c W_ic r_c)
            let mut plus = vec![(u[i], 1.0)];
            let mut minus = vec![(u[i], 1.0)];
            for c in 0..h {
                plus.push((w[i][c], -r[c]));
                minus.push((w[i][c], r[c]));
            }
            lp.add_constraint(plus, ComparisonOp::Ge, -s[i]);
            lp.add_constraint(minus, ComparisonOp::Ge, s[i]);
        }
        let mut sum: Vec<_> = u.iter().map(|&ui| (ui, 1.0)).collect();
        sum.push((eps, -2.0));
        lp.add_constraint(sum, ComparisonOp::Le, 0.0);
    }
    lp.solve().expect("LP is feasible and bounded").objective()
}

/// Trace norm of `rho_1 - t rho_2` for qubit states given by real Bloch
/// vectors in the x-z plane.
fn bloch_pair_norm(r1: (f64, f64), r2: (f64, f64), t: f64) -> f64 {
    let (x, z) = (r1.0 - t * r2.0, r1.1 - t * r2.1);
    (1.0 - t).abs().max((x * x + z * z).sqrt())
}

/// Whether some qubit channel maps the pair `(r1, r2)` to `(s1, s2)`, by the
/// qubit criterion `||s1 - t s2||_1 <= ||r1 - t r2||_1` for all `t >= 0`,
/// checked on a grid of `t`.
pub fn qubit_pair_reachable(r1: (f64, f64), r2: (f64, f64), s1: (f64, f64), s2: (f64, f64)) -> bool {
    (0..200).all(|i| {
        let u = i as f64 / 200.0;
        let t = u / (1.0 - u + 1e-12);
        bloch_pair_norm(s1, s2, t) <= bloch_pair_norm(r1, r2, t) + 1e-12
    })
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    (0..a.rows())
        .flat_map(|i| (0..a.cols()).map(move |j| (i, j)))
        .map(|(i, j)| (a[(i, j)] - b[(i, j)]).norm())
        .fold(0.0, f64::max)
}
