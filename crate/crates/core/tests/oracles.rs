mod common;

use common::{helstrom, lecam_lp, qubit_pair_reachable, small_eigenvalues, small_trace_norm};
use qcomp::discrimination::{psucc, Ensemble};
use qcomp::experiments::{classical_deficiency, exp_deficiency, random_classical_experiment, Experiment};
use qcomp::linalg::{eigenvalues, paulis, trace_norm};
use qcomp::random::{self, rng};
use qcomp::CMatrix;

#[test]
fn closed_form_eigenvalues_agree_with_library() {
    let mut r = rng(1);
    for n in 1..=3 {
        for _ in 0..20 {
            let h = random::hermitian(&mut r, n);
            let mut mine = small_eigenvalues(&h);
            mine.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let lib = eigenvalues(&h).unwrap();
            for (a, b) in mine.iter().zip(&lib) {
                assert!((a - b).abs() < 1e-10, "{mine:?} vs {lib:?}");
            }
            assert!((small_trace_norm(&h) - trace_norm(&h)).abs() < 1e-10);
        }
    }
}

#[test]
fn helstrom_two_state_values() {
    let e = Ensemble::equiprobable(&[paulis::ket0(), paulis::plus()]).unwrap();
    let want = (2.0 + 2f64.sqrt()) / 4.0;
    assert!((psucc(&e).unwrap().value - want).abs() < 1e-8);
    assert!((helstrom(0.5, &paulis::ket0(), &paulis::plus()) - want).abs() < 1e-14);

    let mut r = rng(2);
    for d in [2, 3] {
        for _ in 0..10 {
            let p = random::probability(&mut r, 2)[0];
            let (a, b) = (random::state(&mut r, d), random::state(&mut r, d));
            let e = Ensemble::from_parts(&[p, 1.0 - p], &[a.clone(), b.clone()]).unwrap();
            let got = psucc(&e).unwrap().value;
            assert!((got - helstrom(p, &a, &b)).abs() < 1e-8, "d={d}: {got} vs {}", helstrom(p, &a, &b));
        }
    }
}

fn diagonal(e: &Experiment) -> Vec<Vec<f64>> {
    e.states().iter().map(|s| (0..s.rows()).map(|i| s[(i, i)].re).collect()).collect()
}

#[test]
fn classical_deficiency_matches_linear_program() {
    let mut r = rng(3);
    for (dk, dh, n) in [(2, 2, 2), (2, 3, 3), (3, 2, 2), (3, 3, 4)] {
        let s = random_classical_experiment(&mut r, dk, n);
        let t = random_classical_experiment(&mut r, dh, n);
        let sdp = classical_deficiency(&s, &t).unwrap().epsilon;
        let lp = lecam_lp(&diagonal(&s), &diagonal(&t));
        assert!((sdp - lp).abs() < 1e-7, "{sdp} vs {lp}");
    }
}

#[test]
fn classical_deficiency_rejects_quantum_states() {
    let s = Experiment::from_states(vec![paulis::ket0(), paulis::plus()]).unwrap();
    assert!(classical_deficiency(&s, &s).is_err());
}

#[test]
fn qubit_experiment_against_grid_search() {
    // S = {|0>, |1>}, T = {|0>, |+>}. Both are real, so an optimal
    // randomization maps the x-z plane into itself; search the images of
    // |0> and |+> over a grid of that disk.
    let s = Experiment::from_states(vec![paulis::ket0(), paulis::ket1()]).unwrap();
    let t = Experiment::from_states(vec![paulis::ket0(), paulis::plus()]).unwrap();
    let sdp = exp_deficiency(&s, &t).unwrap().epsilon;

    let step = 0.05;
    let pts: Vec<(f64, f64)> = (-20..=20)
        .flat_map(|i| (-20..=20).map(move |j| (i as f64 * step, j as f64 * step)))
        .filter(|(x, z)| x * x + z * z <= 1.0 + 1e-12)
        .collect();
    let dist = |a: (f64, f64), b: (f64, f64)| ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt();
    let mut best = f64::INFINITY;
    for &a in &pts {
        let da = dist(a, (0.0, 1.0));
        if da / 2.0 >= best {
            continue;
        }
        for &b in &pts {
            let v = da.max(dist(b, (0.0, -1.0))) / 2.0;
            if v < best && qubit_pair_reachable((0.0, 1.0), (1.0, 0.0), a, b) {
                best = v;
            }
        }
    }
    assert!((sdp - best).abs() < 0.02, "SDP {sdp} vs grid {best}");
    assert!(sdp <= best + 1e-7);
}

#[test]
fn randomized_classical_experiment_matches_kernel() {
    let mut r = rng(4);
    let t = random_classical_experiment(&mut r, 3, 3);
    let w = random::stochastic_rows(&mut r, 3, 2);
    let states: Vec<CMatrix> = t
        .states()
        .iter()
        .map(|s| {
            let p: Vec<f64> = (0..2).map(|k| (0..3).map(|h| w[h][k] * s[(h, h)].re).sum()).collect();
            CMatrix::diag_real(&p)
        })
        .collect();
    let s = Experiment::from_states(states).unwrap();
    assert!(classical_deficiency(&s, &t).unwrap().epsilon < 1e-7);
    assert!(lecam_lp(&diagonal(&s), &diagonal(&t)) < 1e-9);
}
