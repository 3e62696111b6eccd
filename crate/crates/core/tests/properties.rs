use proptest::prelude::*;
use proptest::test_runner::RngSeed;
use qcomp::deficiency::{data_processing_check, data_processing_check_dual, deficiency_value};
use qcomp::discrimination::{psucc, Ensemble};
use qcomp::experiments::{exp_deficiency, random_experiment};
use qcomp::linalg::{herm_dim, hmat, hvec, kron};
use qcomp::maps::{adjoint, compose, pairing, tensor};
use qcomp::norms::{diamond_norm, dual_diamond_norm};
use qcomp::random::{self, rng};
use qcomp::HermitianMap;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, rng_seed: RngSeed::Fixed(0x5eed), failure_persistence: None, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn hvec_is_an_isometry(seed in any::<u64>(), n in 1usize..5) {
        let mut r = rng(seed);
        let a = random::hermitian(&mut r, n);
        let b = random::hermitian(&mut r, n);
        let (va, vb) = (hvec(&a), hvec(&b));
        prop_assert_eq!(va.len(), herm_dim(n));
        prop_assert!(hmat(&va, n).max_diff(&a) < 1e-14);
        let dot: f64 = va.iter().zip(&vb).map(|(x, y)| x * y).sum();
        prop_assert!((dot - a.trace_product(&b).re).abs() < 1e-12);
    }

    #[test]
    fn composition_and_adjoint_laws(seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = random::hermitian_map(&mut r, 2, 3);
        let b = random::hermitian_map(&mut r, 3, 2);
        let c = random::hermitian_map(&mut r, 2, 2);
        let left = compose(&c, &compose(&b, &a).unwrap()).unwrap();
        let right = compose(&compose(&c, &b).unwrap(), &a).unwrap();
        prop_assert!(left.approx_eq(&right, 1e-10));
        prop_assert!(adjoint(&adjoint(&a)).approx_eq(&a, 0.0));
        let x = random::hermitian(&mut r, 2);
        let y = random::hermitian(&mut r, 3);
        let lhs = a.apply(&x).unwrap().trace_product(&y).re;
        let rhs = x.trace_product(&adjoint(&a).apply(&y).unwrap()).re;
        prop_assert!((lhs - rhs).abs() < 1e-10);
    }

    #[test]
    fn ancilla_action_matches_tensor(seed in any::<u64>()) {
        let mut r = rng(seed);
        let phi = random::hermitian_map(&mut r, 2, 3);
        let m = random::hermitian(&mut r, 4);
        let direct = phi.apply_with_ancilla(&m, 2).unwrap();
        let via = tensor(&phi, &HermitianMap::identity(2)).apply(&m).unwrap();
        prop_assert!(direct.max_diff(&via) < 1e-12);
        let rho = random::state(&mut r, 2);
        let tau = random::state(&mut r, 2);
        let prod = phi.apply_with_ancilla(&kron(&rho, &tau), 2).unwrap();
        prop_assert!(prod.max_diff(&kron(&phi.apply(&rho).unwrap(), &tau)) < 1e-12);
    }

    #[test]
    fn ensemble_json_is_bit_identical(seed in any::<u64>(), k in 1usize..5) {
        let mut r = rng(seed);
        let w = random::probability(&mut r, k);
        let s: Vec<_> = (0..k).map(|_| random::state(&mut r, 3)).collect();
        let e = Ensemble::from_parts(&w, &s).unwrap();
        let back: Ensemble = serde_json::from_str(&serde_json::to_string(&e).unwrap()).unwrap();
        prop_assert_eq!(back, e);
    }
}

proptest! {
    #![proptest_config(config(12))]

    #[test]
    fn pairing_is_bounded_by_the_norms(seed in any::<u64>()) {
        let mut r = rng(seed);
        let psi = random::hermitian_map(&mut r, 2, 2);
        let phi = random::hermitian_map(&mut r, 2, 2);
        let p = pairing(&psi, &phi).unwrap().abs();
        let bound = diamond_norm(&psi).unwrap().value * dual_diamond_norm(&phi).unwrap().value;
        prop_assert!(p <= bound + 1e-7, "{} > {}", p, bound);
    }

    #[test]
    fn guessing_probability_bounds(seed in any::<u64>(), k in 1usize..5) {
        let mut r = rng(seed);
        let w = random::probability(&mut r, k);
        let s: Vec<_> = (0..k).map(|_| random::state(&mut r, 2)).collect();
        let v = psucc(&Ensemble::from_parts(&w, &s).unwrap()).unwrap().value;
        let top = w.iter().cloned().fold(0.0, f64::max);
        prop_assert!(v >= top - 1e-8 && v <= 1.0 + 1e-8);
    }

    #[test]
    fn deficiency_is_in_range_and_below_any_candidate(seed in any::<u64>()) {
        let mut r = rng(seed);
        let phi = random::generic_channel(&mut r, 2, 2);
        let psi = random::generic_channel(&mut r, 2, 2);
        let d = deficiency_value(&phi, &psi).unwrap().value;
        prop_assert!((0.0..=2.0 + 1e-9).contains(&d));
        let alpha = random::generic_channel(&mut r, 2, 2);
        let bound = diamond_norm(&(&phi - &compose(&alpha, &psi).unwrap())).unwrap().value;
        prop_assert!(d <= bound + 1e-8);
    }

    #[test]
    fn data_processing_inequalities(seed in any::<u64>()) {
        let mut r = rng(seed);
        let phi = random::generic_channel(&mut r, 2, 2);
        let psi = random::generic_channel(&mut r, 2, 2);
        let beta = random::channel(&mut r, 2, 2, 2);
        prop_assert!(data_processing_check(&phi, &psi, &beta).unwrap().holds);
        prop_assert!(data_processing_check_dual(&phi, &psi, &beta).unwrap().holds);
    }

    #[test]
    fn duplicated_label_keeps_epsilon(seed in any::<u64>()) {
        let mut r = rng(seed);
        let s = random_experiment(&mut r, 2, 3);
        let t = random_experiment(&mut r, 2, 3);
        let before = exp_deficiency(&s, &t).unwrap().epsilon;
        let s2 = s.with_label("dup", s.state("1").unwrap().clone()).unwrap();
        let t2 = t.with_label("dup", t.state("1").unwrap().clone()).unwrap();
        let after = exp_deficiency(&s2, &t2).unwrap().epsilon;
        prop_assert!((before - after).abs() < 1e-8, "{} vs {}", before, after);
    }
}
