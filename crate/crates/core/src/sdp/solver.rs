//! Infeasible-start primal-dual path following with Nesterov-Todd scaling and
//! Mehrotra predictor-corrector steps, working directly on complex Hermitian
//! blocks.
//!
//! Internally every problem is `max <C, X>` s.t. `A(X) = b`, `X >= 0`, with
//! dual `min b.y` s.t. `Z = A*y - C >= 0`. Constraint rows are stored as
//! real coordinate vectors (see [`crate::linalg::hvec`]) after a presolve that
//! orthonormalizes them and drops dependent ones.

use log::{debug, warn};

use super::{residuals, Residuals, SdpProblem, SdpSolution, Sense, SolveStatus, SolverSettings};
use crate::linalg::{cholesky, herm_eig_unchecked, hmat, hvec_into, lower_triangular_inverse, CMatrix, C64};

/// Fractions of the distance to the cone boundary, one per solver pass. A
/// later pass runs only if the previous one did not converge.
const STEP_FRACTIONS: [f64; 2] = [0.9, 0.7];
const DEPENDENT_ROW_TOL: f64 = 1e-10;
const DIVERGENCE: f64 = 1e8;
const CERT_TOL: f64 = 1e-6;
const REGULARIZATION: f64 = 1e-12;

struct Kernel {
    blocks: Vec<usize>,
    offsets: Vec<usize>,
    total: usize,
    rows: Vec<Vec<f64>>,
    row_mats: Vec<Vec<Option<CMatrix>>>,
    beta: Vec<f64>,
    c: Vec<CMatrix>,
    /// Row `j` of the kernel is `sum_k transform[j][k] * (original row k)`.
    transform: Vec<Vec<f64>>,
    b_scale: f64,
    c_scale: f64,
}

#[derive(Clone)]
struct Iterate {
    x: Vec<CMatrix>,
    y: Vec<f64>,
    z: Vec<CMatrix>,
}

enum Stop {
    Converged,
    Stalled,
    Diverged,
    Breakdown,
    MaxIter,
}

pub(super) fn solve(p: &SdpProblem, settings: &SolverSettings) -> SdpSolution {
    let kernel = match presolve(p) {
        Ok(k) => k,
        Err(()) => return infeasible_from_presolve(p),
    };
    let converged = |r: &Residuals| {
        r.primal_infeas <= settings.feas_tol && r.dual_infeas <= settings.feas_tol && r.gap <= settings.gap_tol
    };
    let worst = |r: &Residuals| r.primal_infeas.max(r.dual_infeas).max(r.gap);
    let mut found: Option<(SdpSolution, Residuals, Iterate, Stop)> = None;
    for &fraction in &STEP_FRACTIONS {
        let (best, iterations, stop) = iterate(&kernel, settings, fraction);
        let (sol, r) = finish(p, &kernel, &best, iterations);
        let done = converged(&r) || matches!(stop, Stop::Diverged);
        if found.as_ref().is_none_or(|(_, r0, _, _)| worst(&r) < worst(r0)) {
            found = Some((sol, r, best, stop));
        }
        if done {
            break;
        }
    }
    let (mut sol, r, best, stop) = found.expect("at least one pass runs");
    sol.status = if converged(&r) {
        SolveStatus::Optimal
    } else if primal_infeasibility_certificate(&kernel, &best.y) {
        SolveStatus::Infeasible
    } else if dual_infeasibility_certificate(&kernel, &best.x) {
        SolveStatus::Unbounded
    } else {
        match stop {
            Stop::Breakdown => SolveStatus::NumericalFailure,
            _ => SolveStatus::MaxIter,
        }
    };
    debug!(
        "sdp: {:?} after {} iterations, residuals {:.2e}/{:.2e}/{:.2e}",
        sol.status, sol.iterations, r.primal_infeas, r.dual_infeas, r.gap
    );
    sol
}

/// Assembles the solution of `best`, or of its feasibility polish when that
/// has smaller residuals.
fn finish(p: &SdpProblem, k: &Kernel, best: &Iterate, iterations: usize) -> (SdpSolution, Residuals) {
    let sol = assemble(p, k, best, iterations);
    let r = residuals(p, &sol);
    let polished = assemble(p, k, &k.polish(best), iterations);
    let rp = residuals(p, &polished);
    if rp.primal_infeas.max(rp.gap) < r.primal_infeas.max(r.gap) {
        (polished, rp)
    } else {
        (sol, r)
    }
}

fn infeasible_from_presolve(p: &SdpProblem) -> SdpSolution {
    SdpSolution {
        status: SolveStatus::Infeasible,
        primal_value: f64::NAN,
        dual_value: f64::NAN,
        primal_blocks: p.blocks.iter().map(|&n| CMatrix::zeros(n, n)).collect(),
        dual_vector: vec![0.0; p.constraints.len()],
        gap: f64::INFINITY,
        iterations: 0,
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn presolve(p: &SdpProblem) -> Result<Kernel, ()> {
    let mut offsets = Vec::with_capacity(p.blocks.len());
    let mut total = 0;
    for &n in &p.blocks {
        offsets.push(total);
        total += n * n;
    }
    let m = p.constraints.len();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut beta = Vec::new();
    let mut transform: Vec<Vec<f64>> = Vec::new();
    let mut scratch = Vec::new();
    let mut dropped = 0;
    for (k, con) in p.constraints.iter().enumerate() {
        let mut v = vec![0.0; total];
        for (b, a) in &con.terms {
            let n = p.blocks[*b];
            scratch.resize(n * n, 0.0);
            hvec_into(a, &mut scratch);
            for (dst, s) in v[offsets[*b]..offsets[*b] + n * n].iter_mut().zip(&scratch) {
                *dst += s;
            }
        }
        let norm = norm2(&v);
        if norm == 0.0 {
            if con.rhs.abs() > 1e-12 {
                warn!("constraint {k} reads 0 = {}", con.rhs);
                return Err(());
            }
            dropped += 1;
            continue;
        }
        v.iter_mut().for_each(|x| *x /= norm);
        let mut rho = con.rhs / norm;
        let mut t = vec![0.0; m];
        t[k] = 1.0 / norm;
        for _pass in 0..2 {
            for (j, q) in rows.iter().enumerate() {
                let coef = dot(&v, q);
                if coef == 0.0 {
                    continue;
                }
                v.iter_mut().zip(q).for_each(|(x, qx)| *x -= coef * qx);
                rho -= coef * beta[j];
                t.iter_mut().zip(&transform[j]).for_each(|(x, tx): (&mut f64, &f64)| *x -= coef * tx);
            }
        }
        let res = norm2(&v);
        if res < DEPENDENT_ROW_TOL {
            if rho.abs() > 1e-7 * (1.0 + (con.rhs / norm).abs()) {
                warn!("constraint {k} is inconsistent with earlier rows (discrepancy {rho:.3e})");
                return Err(());
            }
            dropped += 1;
            continue;
        }
        v.iter_mut().for_each(|x| *x /= res);
        t.iter_mut().for_each(|x| *x /= res);
        rows.push(v);
        beta.push(rho / res);
        transform.push(t);
    }
    if dropped > 0 {
        warn!("presolve dropped {dropped} linearly dependent constraint(s)");
    }

    let sign = match p.sense {
        Sense::Maximize => 1.0,
        Sense::Minimize => -1.0,
    };
    let c_norm = p.objective.iter().map(|c| c.frobenius_norm()).fold(0.0, f64::max);
    let c_scale = c_norm.max(1.0);
    let b_scale = beta.iter().map(|x| x.abs()).fold(0.0, f64::max).max(1.0);
    let c = p.objective.iter().map(|c| c.scale(sign / c_scale)).collect();
    beta.iter_mut().for_each(|x| *x /= b_scale);

    let row_mats = rows
        .iter()
        .map(|r| {
            p.blocks
                .iter()
                .zip(&offsets)
                .map(|(&n, &off)| {
                    let seg = &r[off..off + n * n];
                    seg.iter().any(|&x| x != 0.0).then(|| hmat(seg, n))
                })
                .collect()
        })
        .collect();
    Ok(Kernel { blocks: p.blocks.clone(), offsets, total, rows, row_mats, beta, c, transform, b_scale, c_scale })
}

impl Kernel {
    fn m(&self) -> usize {
        self.rows.len()
    }

    fn n_total(&self) -> usize {
        self.blocks.iter().sum()
    }

    fn a_op(&self, x: &[CMatrix]) -> Vec<f64> {
        let mut v = vec![0.0; self.total];
        for ((xb, &off), &n) in x.iter().zip(&self.offsets).zip(&self.blocks) {
            hvec_into(xb, &mut v[off..off + n * n]);
        }
        self.rows.iter().map(|r| dot(r, &v)).collect()
    }

    /// Moves `x` onto the affine constraint set. The rows are orthonormal,
    /// so this is the least-squares correction.
    fn polish(&self, it: &Iterate) -> Iterate {
        let ax = self.a_op(&it.x);
        let miss: Vec<f64> = self.beta.iter().zip(ax).map(|(b, a)| b - a).collect();
        let x = it.x.iter().zip(self.a_adj(&miss)).map(|(x, c)| (x + &c).hermitian_part()).collect();
        Iterate { x, y: it.y.clone(), z: it.z.clone() }
    }

    fn a_adj(&self, y: &[f64]) -> Vec<CMatrix> {
        let mut out: Vec<CMatrix> = self.blocks.iter().map(|&n| CMatrix::zeros(n, n)).collect();
        for (mats, &yk) in self.row_mats.iter().zip(y) {
            if yk == 0.0 {
                continue;
            }
            for (o, a) in out.iter_mut().zip(mats) {
                if let Some(a) = a {
                    o.axpy(yk, a);
                }
            }
        }
        out
    }

    fn initial_point(&self) -> Iterate {
        let mut x = Vec::new();
        let mut z = Vec::new();
        for (b, &n) in self.blocks.iter().enumerate() {
            let sn = (n as f64).sqrt();
            let mut xi: f64 = 10.0_f64.max(sn);
            let mut eta: f64 = 10.0_f64.max(sn).max(self.c[b].frobenius_norm());
            for (mats, &bk) in self.row_mats.iter().zip(&self.beta) {
                if let Some(a) = &mats[b] {
                    let an = a.frobenius_norm();
                    xi = xi.max(sn * (1.0 + bk.abs()) / (1.0 + an));
                    eta = eta.max(an);
                }
            }
            x.push(CMatrix::identity(n).scale(xi));
            z.push(CMatrix::identity(n).scale(eta));
        }
        Iterate { x, y: vec![0.0; self.m()], z }
    }
}

/// Nesterov-Todd scaling of one block: `W = G G^dagger` with
/// `G^-1 X G^-dagger = G^dagger Z G = diag(v)`.
struct Scaling {
    g: CMatrix,
    g_inv: CMatrix,
    w: CMatrix,
    v: Vec<f64>,
    lx_inv: CMatrix,
    lz_inv: CMatrix,
}

fn nt_scaling(x: &CMatrix, z: &CMatrix) -> Option<Scaling> {
    let lx = cholesky(x).ok()?;
    let lz = cholesky(z).ok()?;
    let lx_inv = lower_triangular_inverse(&lx);
    let lz_inv = lower_triangular_inverse(&lz);
    let m = lx.adjoint().matmul(z).matmul(&lx);
    let e = herm_eig_unchecked(&m);
    if e.min() <= 0.0 || !e.min().is_finite() {
        return None;
    }
    let n = x.rows();
    let v: Vec<f64> = e.values.iter().map(|l| l.sqrt()).collect();
    let q = &e.vectors;
    let qs = CMatrix::from_fn(n, n, |i, j| q[(i, j)] * e.values[j].powf(-0.25));
    let g = lx.matmul(&qs);
    let qi = CMatrix::from_fn(n, n, |i, j| q[(j, i)].conj() * e.values[i].powf(0.25));
    let g_inv = qi.matmul(&lx_inv);
    let w = g.matmul(&g.adjoint()).hermitian_part();
    Some(Scaling { g, g_inv, w, v, lx_inv, lz_inv })
}

/// Dense real symmetric factorization `M + reg I = L L^T`, row-major lower.
struct SchurFactor {
    n: usize,
    m: Vec<f64>,
    l: Vec<f64>,
}

impl SchurFactor {
    fn new(m: Vec<f64>, n: usize) -> Option<Self> {
        let max_diag = (0..n).map(|i| m[i * n + i].abs()).fold(0.0, f64::max).max(1e-300);
        let mut reg = REGULARIZATION * max_diag;
        for _ in 0..6 {
            if let Some(l) = real_cholesky(&m, n, reg) {
                return Some(SchurFactor { n, m, l });
            }
            reg *= 100.0;
        }
        None
    }

    fn solve_once(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let l = &self.l;
        let mut x = b.to_vec();
        for i in 0..n {
            let mut s = x[i];
            for k in 0..i {
                s -= l[i * n + k] * x[k];
            }
            x[i] = s / l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= l[k * n + i] * x[k];
            }
            x[i] = s / l[i * n + i];
        }
        x
    }

    /// Solve with two rounds of iterative refinement against the
    /// unregularized matrix.
    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x = self.solve_once(b);
        for _ in 0..2 {
            let r: Vec<f64> = (0..n).map(|i| b[i] - dot(&self.m[i * n..(i + 1) * n], &x)).collect();
            let dx = self.solve_once(&r);
            x.iter_mut().zip(dx).for_each(|(a, d)| *a += d);
        }
        x
    }
}

fn real_cholesky(m: &[f64], n: usize, reg: f64) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut d = m[j * n + j] + reg;
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if !(d > 0.0) || !d.is_finite() {
            return None;
        }
        let djj = d.sqrt();
        l[j * n + j] = djj;
        for i in j + 1..n {
            let mut s = m[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / djj;
        }
    }
    Some(l)
}

fn schur_matrix(k: &Kernel, sc: &[Scaling]) -> Vec<f64> {
    let m = k.m();
    let mut u = vec![0.0; k.total];
    let mut out = vec![0.0; m * m];
    for j in 0..m {
        u.iter_mut().for_each(|x| *x = 0.0);
        for (b, a) in k.row_mats[j].iter().enumerate() {
            if let Some(a) = a {
                let n = k.blocks[b];
                let waw = sc[b].w.matmul(a).matmul(&sc[b].w);
                hvec_into(&waw, &mut u[k.offsets[b]..k.offsets[b] + n * n]);
            }
        }
        for i in 0..=j {
            let v = dot(&k.rows[i], &u);
            out[i * m + j] = v;
            out[j * m + i] = v;
        }
    }
    out
}

struct Direction {
    dx: Vec<CMatrix>,
    dy: Vec<f64>,
    dz: Vec<CMatrix>,
}

fn direction(k: &Kernel, sc: &[Scaling], f: &SchurFactor, rp: &[f64], rd: &[CMatrix], rc: &[CMatrix]) -> Direction {
    let t: Vec<CMatrix> = (0..sc.len()).map(|b| &rc[b] - &sc[b].w.matmul(&rd[b]).matmul(&sc[b].w)).collect();
    let rhs: Vec<f64> = k.a_op(&t).iter().zip(rp).map(|(a, r)| a - r).collect();
    let dy = f.solve(&rhs);
    let dz: Vec<CMatrix> = k.a_adj(&dy).into_iter().zip(rd).map(|(a, r)| (a + r).hermitian_part()).collect();
    let dx = (0..sc.len()).map(|b| (&rc[b] - &sc[b].w.matmul(&dz[b]).matmul(&sc[b].w)).hermitian_part()).collect();
    Direction { dx, dy, dz }
}

/// Largest `a` with `M + a D >= 0`, given `L^-1` for `M = L L^dagger`.
fn max_step(l_inv: &CMatrix, d: &CMatrix) -> f64 {
    let e = herm_eig_unchecked(&l_inv.matmul(d).matmul(&l_inv.adjoint()));
    if e.min() < 0.0 {
        -1.0 / e.min()
    } else {
        f64::INFINITY
    }
}

fn step_lengths(sc: &[Scaling], d: &Direction, fraction: f64) -> (f64, f64) {
    let mut ap = f64::INFINITY;
    let mut ad = f64::INFINITY;
    for (b, s) in sc.iter().enumerate() {
        ap = ap.min(max_step(&s.lx_inv, &d.dx[b]));
        ad = ad.min(max_step(&s.lz_inv, &d.dz[b]));
    }
    ((fraction * ap).min(1.0), (fraction * ad).min(1.0))
}

/// `G T G^dagger` where `T_ij = 2 R_ij / (v_i + v_j)` solves the scaled
/// complementarity equation `(V T + T V)/2 = R`.
fn complementarity_rhs(s: &Scaling, r: &CMatrix) -> CMatrix {
    let n = s.v.len();
    let t = CMatrix::from_fn(n, n, |i, j| r[(i, j)] * (2.0 / (s.v[i] + s.v[j])));
    s.g.matmul(&t).matmul(&s.g.adjoint()).hermitian_part()
}

fn inner(a: &[CMatrix], b: &[CMatrix]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.trace_product(y).re).sum()
}

fn frob(a: &[CMatrix]) -> f64 {
    a.iter().map(|x| x.frobenius_norm().powi(2)).sum::<f64>().sqrt()
}

fn iterate(k: &Kernel, settings: &SolverSettings, fraction: f64) -> (Iterate, usize, Stop) {
    let target = (settings.gap_tol.min(settings.feas_tol) * 1e-2).max(1e-14);
    let n_total = k.n_total() as f64;
    let b_norm = norm2(&k.beta);
    let c_norm = frob(&k.c);
    let mut it = k.initial_point();
    let mut best = it.clone();
    let mut best_merit = f64::INFINITY;
    let mut stalls = 0;
    let mut iterations = 0;
    let mut stop = Stop::MaxIter;

    for iter in 0..settings.max_iter {
        iterations = iter;
        let ax = k.a_op(&it.x);
        let rp: Vec<f64> = k.beta.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let aty = k.a_adj(&it.y);
        let rd: Vec<CMatrix> = (0..k.blocks.len()).map(|b| &(&aty[b] - &k.c[b]) - &it.z[b]).collect();
        let pobj = inner(&k.c, &it.x);
        let dobj = dot(&k.beta, &it.y);
        let mu = inner(&it.x, &it.z) / n_total;
        let pinf = norm2(&rp) / (1.0 + b_norm);
        let dinf = frob(&rd) / (1.0 + c_norm);
        let gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
        let merit = pinf.max(dinf).max(gap);
        debug!("iter {iter}: p {pobj:.10e} d {dobj:.10e} pinf {pinf:.2e} dinf {dinf:.2e} gap {gap:.2e} mu {mu:.2e}");
        if merit < best_merit {
            best_merit = merit;
            best = it.clone();
        }
        if merit <= target {
            stop = Stop::Converged;
            break;
        }
        let size = frob(&it.x).max(norm2(&it.y));
        if size > DIVERGENCE {
            best = it.clone();
            stop = Stop::Diverged;
            break;
        }

        let sc: Option<Vec<Scaling>> = it.x.iter().zip(&it.z).map(|(x, z)| nt_scaling(x, z)).collect();
        let Some(sc) = sc else {
            stop = Stop::Breakdown;
            break;
        };
        let Some(f) = SchurFactor::new(schur_matrix(k, &sc), k.m()) else {
            stop = Stop::Breakdown;
            break;
        };

        // Predictor: R = -V^2, i.e. Rc = -X.
        let rc_aff: Vec<CMatrix> = it.x.iter().map(|x| -x).collect();
        let aff = direction(k, &sc, &f, &rp, &rd, &rc_aff);
        let (ap, ad) = step_lengths(&sc, &aff, fraction);
        let xa: Vec<CMatrix> = it.x.iter().zip(&aff.dx).map(|(x, d)| x + &d.scale(ap)).collect();
        let za: Vec<CMatrix> = it.z.iter().zip(&aff.dz).map(|(z, d)| z + &d.scale(ad)).collect();
        let mu_aff = inner(&xa, &za) / n_total;
        let mut sigma = if mu > 0.0 { (mu_aff / mu).max(0.0).powi(3).min(1.0) } else { 0.0 };
        if pinf.max(dinf) > 1e3 * mu / (1.0 + pobj.abs()) {
            sigma = sigma.max(0.5);
        }

        // Corrector: R = sigma mu I - V^2 - sym(dX~ dZ~).
        let rc: Vec<CMatrix> = sc
            .iter()
            .enumerate()
            .map(|(b, s)| {
                let n = s.v.len();
                let dxt = s.g_inv.matmul(&aff.dx[b]).matmul(&s.g_inv.adjoint());
                let dzt = s.g.adjoint().matmul(&aff.dz[b]).matmul(&s.g);
                let prod = dxt.matmul(&dzt).hermitian_part();
                let mut r = -prod;
                for i in 0..n {
                    r[(i, i)] += C64::new(sigma * mu - s.v[i] * s.v[i], 0.0);
                }
                complementarity_rhs(s, &r)
            })
            .collect();
        let d = direction(k, &sc, &f, &rp, &rd, &rc);
        let (ap, ad) = step_lengths(&sc, &d, fraction);
        for b in 0..k.blocks.len() {
            it.x[b] = (&it.x[b] + &d.dx[b].scale(ap)).hermitian_part();
            it.z[b] = (&it.z[b] + &d.dz[b].scale(ad)).hermitian_part();
        }
        it.y.iter_mut().zip(&d.dy).for_each(|(y, dy)| *y += ad * dy);

        if ap < 1e-9 && ad < 1e-9 {
            stalls += 1;
            if stalls >= 3 {
                stop = Stop::Stalled;
                break;
            }
        } else {
            stalls = 0;
        }
        iterations = iter + 1;
    }
    (best, iterations, stop)
}

/// `y` with `A*y >= 0` and `b.y < 0` proves that `A(X) = b, X >= 0` has no solution.
fn primal_infeasibility_certificate(k: &Kernel, y: &[f64]) -> bool {
    let by = dot(&k.beta, y);
    if !(by < 0.0) || norm2(y) < 1e3 {
        return false;
    }
    let yh: Vec<f64> = y.iter().map(|v| v / -by).collect();
    k.a_adj(&yh).iter().all(|m| herm_eig_unchecked(m).min() >= -CERT_TOL)
}

/// `X >= 0` with `A(X) = 0` and `<C, X> > 0` proves the objective is unbounded.
fn dual_infeasibility_certificate(k: &Kernel, x: &[CMatrix]) -> bool {
    let cx = inner(&k.c, x);
    if !(cx > 0.0) || frob(x) < 1e3 {
        return false;
    }
    let xh: Vec<CMatrix> = x.iter().map(|m| m.scale(1.0 / cx)).collect();
    norm2(&k.a_op(&xh)) <= CERT_TOL
}

fn assemble(p: &SdpProblem, k: &Kernel, it: &Iterate, iterations: usize) -> SdpSolution {
    let primal_blocks: Vec<CMatrix> = it.x.iter().map(|x| x.scale(k.b_scale)).collect();
    let mut dual_vector = vec![0.0; p.constraints.len()];
    for (yj, t) in it.y.iter().zip(&k.transform) {
        for (d, tk) in dual_vector.iter_mut().zip(t) {
            *d += yj * tk * k.c_scale;
        }
    }
    if p.sense == Sense::Minimize {
        dual_vector.iter_mut().for_each(|v| *v = -*v);
    }
    let primal_value = p.objective_value(&primal_blocks);
    let dual_value = p.dual_objective(&dual_vector);
    SdpSolution {
        status: SolveStatus::MaxIter,
        primal_value,
        dual_value,
        primal_blocks,
        dual_vector,
        gap: (primal_value - dual_value).abs() / (1.0 + primal_value.abs()),
        iterations,
    }
}
