use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pseudospline::analysis::{holder_exponent, kappa, lowpass_condition, lowpass_floor};
use pseudospline::cascade::run_cascade;
use pseudospline::frames::{analyze, build_bank, energy, synthesize, PeriodicSignal};
use pseudospline::io::{bank_from_json, to_json_string};
use pseudospline::symbol::{eval_h0, partition_extrema, theta_bound};
use pseudospline::{ComplexScalar, PseudoSplineOrder, TorusGrid};

fn arb_order() -> impl Strategy<Value = PseudoSplineOrder> {
    (1.0f64..5.0, -2.0f64..2.0, 0u32..4, prop::bool::ANY).prop_map(|(alpha, im, ell, complex)| {
        let ell = ell.min(PseudoSplineOrder::max_ell_for(alpha));
        let im = if complex { im } else { 0.0 };
        PseudoSplineOrder::new(ComplexScalar::new(alpha, im), ell, 0.0).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn partition_bounds_hold(order in arb_order()) {
        let ext = partition_extrema(&order, TorusGrid::new(256).unwrap()).unwrap();
        prop_assert!(ext.min >= theta_bound(&order) - 1e-10);
        prop_assert!(ext.max <= 1.0 + 1e-12);
        prop_assert!((ext.min - theta_bound(&order)).abs() < 1e-10, "grid contains g = 1/4");
    }

    #[test]
    fn uep_identities_hold(order in arb_order(), u in -2.0f64..2.0) {
        let order = order.with_shift(u).unwrap();
        let bank = build_bank(&order, TorusGrid::new(128).unwrap()).unwrap();
        prop_assert!(bank.diagonal_defect() < 1e-10);
        prop_assert!(bank.off_diagonal_defect() < 1e-10);
    }

    #[test]
    fn transform_is_parseval_and_invertible(order in arb_order(), seed in any::<u64>()) {
        let bank = build_bank(&order, TorusGrid::new(256).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let samples = (0..128)
            .map(|_| ComplexScalar::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let signal = PeriodicSignal::new(samples).unwrap();
        let bands = analyze(&bank.filters, &signal).unwrap();
        let sub: f64 = bands.iter().map(|b| energy(b)).sum();
        prop_assert!((sub - signal.energy()).abs() < 1e-6 * signal.energy());
        let back = synthesize(&bank.filters, &bands).unwrap();
        for (a, b) in back.samples().iter().zip(signal.samples()) {
            prop_assert!((a - b).norm() < 1e-6);
        }
    }

    #[test]
    fn shift_only_changes_the_phase(order in arb_order(), u in -3.0f64..3.0, g in -0.5f64..0.5) {
        let shifted = order.with_shift(u).unwrap();
        let rot = ComplexScalar::from_polar(1.0, -2.0 * std::f64::consts::PI * u * g);
        prop_assert!((eval_h0(&shifted, g) - rot * eval_h0(&order, g)).norm() < 1e-13);
    }
}

#[test]
fn kappa_grows_with_ell() {
    for alpha in [1.5, 2.0, 2.7, 3.5, 4.2] {
        let values: Vec<f64> = (0..=PseudoSplineOrder::max_ell_for(alpha))
            .map(|ell| kappa(&PseudoSplineOrder::fractional(alpha, ell).unwrap()).unwrap())
            .collect();
        assert!(values.windows(2).all(|w| w[1] >= w[0]), "{alpha}: {values:?}");
    }
}

#[test]
fn holder_exponent_of_fractional_b_splines() {
    for alpha in [1.0, 1.5, 2.0, 2.7, 3.5, 4.2] {
        let o = PseudoSplineOrder::fractional(alpha, 0).unwrap();
        assert_eq!(holder_exponent(&o).unwrap(), 2.0 * alpha - 1.0);
    }
}

#[test]
fn lowpass_floor_positive_when_condition_holds() {
    for (re, im, ell) in [(1.0, 0.0, 0), (2.0, 0.0, 1), (3.2, 1.0, 1), (3.2, 1.0, 2), (2.5, -1.5, 1)] {
        let o = PseudoSplineOrder::new(ComplexScalar::new(re, im), ell, 0.0).unwrap();
        assert!(lowpass_condition(&o).ok);
        let (p, _) = run_cascade(&o, 16, 4.0, 1.0 / 64.0).unwrap();
        assert!(lowpass_floor(&p, 0.25, None).unwrap().floor > 0.0, "{o}");
    }
}

#[test]
fn bank_json_round_trip_is_exact() {
    let o = PseudoSplineOrder::new(ComplexScalar::new(3.2, 1.0), 2, 0.5).unwrap();
    let bank = build_bank(&o, TorusGrid::new(256).unwrap()).unwrap();
    let text = to_json_string(&bank.filters).unwrap();
    let back = bank_from_json(&text).unwrap();
    assert_eq!(back, bank.filters);
    assert_eq!(to_json_string(&back).unwrap(), text);
}
