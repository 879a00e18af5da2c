//! Closed-form values the library must reproduce.

use std::f64::consts::PI;

use pseudospline::analysis::{approximation_order, holder_exponent, kappa, lowpass_condition, lowpass_floor};
use pseudospline::cascade::{run_cascade, to_time_domain};
use pseudospline::frames::build_bank;
use pseudospline::symbol::{sample_h0, theta_bound};
use pseudospline::{ComplexScalar, PseudoSplineOrder, TorusGrid};

fn order(re: f64, im: f64, ell: u32) -> PseudoSplineOrder {
    PseudoSplineOrder::new_extended(ComplexScalar::new(re, im), ell, 0.0).unwrap()
}

#[test]
fn hat_function_symbol_on_four_points() {
    let s = sample_h0(&order(1.0, 0.0, 0), TorusGrid::new(4).unwrap());
    let expected = [0.0, 0.5, 1.0, 0.5];
    for (v, e) in s.values.iter().zip(expected) {
        assert!((v - ComplexScalar::new(e, 0.0)).norm() < 1e-15);
    }
}

#[test]
fn theta_closed_forms() {
    // 2^{1-2a-2l} |sum_k binom(z+l, k)|^2
    assert_eq!(theta_bound(&order(1.0, 0.0, 0)), 0.5);
    assert!((theta_bound(&order(2.0, 0.0, 1)) - 0.5).abs() < 1e-15);
    assert!((theta_bound(&order(3.2, 1.0, 3)) - 0.8238350478781781).abs() < 1e-12);
}

#[test]
fn cubic_b_spline_coefficients() {
    // cos^4(pi g) = (e^{-2 pi i g} + 2 + e^{2 pi i g})^2 / 16
    let bank = build_bank(&order(2.0, 0.0, 0), TorusGrid::new(64).unwrap()).unwrap();
    let c0 = &bank.filters.coeffs[0];
    for (k, e) in [(-2, 1.0), (-1, 4.0), (0, 6.0), (1, 4.0), (2, 1.0)] {
        assert!((c0.get(k) - ComplexScalar::new(e / 16.0, 0.0)).norm() < 1e-14);
    }
    assert!(c0.get(3).norm() < 1e-14);
}

#[test]
fn exponents_for_two_one() {
    let o = order(2.0, 0.0, 1);
    // p(3/4) = 1 + 2 * 3/4 = 5/2
    assert!((kappa(&o).unwrap() - 2.5f64.log2()).abs() < 1e-14);
    assert!((holder_exponent(&o).unwrap() - (3.0 - 2.5f64.log2())).abs() < 1e-14);
    assert_eq!(approximation_order(&o).unwrap(), 4.0);
    assert_eq!(approximation_order(&order(1.5, 0.0, 0)).unwrap(), 2.0);
    assert_eq!(approximation_order(&order(1.5, 0.0, 1)).unwrap(), 3.0);
}

#[test]
fn arctan_sum_for_complex_order() {
    let v = lowpass_condition(&order(3.2, 1.0, 3));
    let direct = (1.0f64 / 3.2).atan() + (1.0f64 / 4.2).atan() + (1.0f64 / 5.2).atan() + (1.0f64 / 6.2).atan();
    assert!(v.ok);
    assert!((v.arctan_sum - direct).abs() < 1e-14);
    assert!((v.arctan_sum - 0.886529).abs() < 1e-6);
}

#[test]
fn hat_function_floor_and_samples() {
    let (p, _) = run_cascade(&order(1.0, 0.0, 0), 24, 8.0, 1.0 / 64.0).unwrap();
    // sinc^2(1/4) = (2 sqrt 2 / pi)^2
    let floor = lowpass_floor(&p, 0.25, None).unwrap().floor;
    assert!((floor - 8.0 / (PI * PI)).abs() < 1e-10);
    // the cubic B-spline sampled at its centre: 2/3
    let (p, _) = run_cascade(&order(2.0, 0.0, 0), 24, 64.0, 1.0 / 64.0).unwrap();
    let t = to_time_domain(&p, 2.0, 0.25, 1e-3).unwrap();
    assert!((t.at_index(0).re - 2.0 / 3.0).abs() < 1e-3);
    assert!((t.at_index(4).re - 1.0 / 6.0).abs() < 1e-3);
}
