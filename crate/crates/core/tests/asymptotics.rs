mod common;

use proptest::prelude::*;
use sphint_core::asymptotics::*;
use sphint_core::Measure;

fn edge(t: f64) -> f64 {
    let t = t.abs().max(1.0);
    t + 1.0 / t
}

#[test]
fn j_is_continuous_at_the_branch_point() {
    // J has slope 1 on both sides, so J(1 - e) and J(1 + e) differ by about 2e.
    // Compare the one-sided limits, each extrapolated linearly from the two
    // nearest samples (error O(e^2)).
    let e = 1e-4;
    let j = |t: f64| j_semicircle(t, 2.0);
    let left = 2.0 * j(1.0 - e) - j(1.0 - 2.0 * e);
    let right = 2.0 * j(1.0 + e) - j(1.0 + 2.0 * e);
    assert!((left - right).abs() < 1e-6, "{left} {right}");
    assert!((j(1.0) - 0.5).abs() < 1e-12);
}

#[test]
fn j_is_non_decreasing_in_lambda() {
    for theta in [0.3, 1.0, 2.0, 3.5] {
        let v: Vec<f64> = (0..=400).map(|i| j_semicircle(theta, 2.0 + 4.0 * i as f64 / 400.0)).collect();
        assert!(v.windows(2).all(|w| w[1] >= w[0] - 1e-13), "theta={theta}");
    }
}

#[test]
fn rate_i_matches_quadrature() {
    for x in [2.1, 2.5, 3.0, 4.0, 6.0] {
        // t = 2 cosh(u) turns sqrt(t^2 - 4) dt into 4 sinh(u)^2 du
        let want = common::simpson(&|u: f64| 4.0 * u.sinh().powi(2), 0.0, (x / 2.0f64).acosh(), 1e-13);
        assert!((rate_i(x) - want).abs() < 1e-8, "x={x}");
    }
}

#[test]
fn rate_i_theta_vanishes_only_at_the_outlier_location() {
    for theta in [0.0, 0.5, 1.0, 1.5, 2.0, 3.0] {
        let zero = edge(theta);
        assert!(rate_i_theta(theta, zero, 1e-12).abs() < 1e-8, "theta={theta}");
        for i in 0..=80 {
            let x = 2.0 + 4.0 * i as f64 / 80.0;
            let v = rate_i_theta(theta, x, 1e-12);
            assert!(v >= 0.0);
            if (x - zero).abs() > 0.05 {
                assert!(v > 0.0, "theta={theta} x={x}");
            }
        }
    }
}

#[test]
fn rate_i_theta_envelopes() {
    for theta in [0.0, 0.5, 1.0, 2.0] {
        let m = edge(theta);
        for i in 0..=40 {
            let x = 2.0 + 4.0 * i as f64 / 40.0;
            let v = rate_i_theta(theta, x, 1e-12);
            assert!(v >= 0.5 * (x - m).powi(2) - 1e-9, "lower: theta={theta} x={x}");
            assert!(v <= (x * x + theta * theta) / 2.0 + 1e-9, "upper: theta={theta} x={x}");
        }
    }
}

#[test]
fn rate_deformed_vanishes_exactly_at_the_pushforward() {
    let xi = Measure::atoms(vec![(-3.0, 0.2), (-0.5, 0.3), (1.5, 0.3), (2.0, 0.2)]).unwrap();
    let star = xi.pushforward(|x| edge(x).copysign(x));
    assert!(rate_deformed(&xi, &star).abs() < 1e-9);
    for shift in [0.05, 0.3] {
        let off = xi.pushforward(|x| (edge(x) + shift).copysign(x));
        assert!(rate_deformed(&xi, &off) > 0.0, "shift {shift}");
    }
}

#[test]
fn rate_extremal_rejects_missing_half_mass() {
    let lopsided = Measure::atoms(vec![(-3.0, 0.4), (3.0, 0.6)]).unwrap();
    assert_eq!(rate_extremal(&lopsided), f64::INFINITY);
}

proptest! {
    #[test]
    fn j_is_non_negative_on_the_semicircle(theta in 0.0f64..5.0, lam in 2.0f64..8.0) {
        prop_assert!(j_semicircle(theta, lam) >= -1e-12);
    }

    #[test]
    fn j_reflection(theta in 0.01f64..5.0, lam in 2.0f64..8.0) {
        prop_assert!((j_semicircle(theta, lam) - j_semicircle(-theta, -lam)).abs() < 1e-12);
    }

    #[test]
    fn j_on_generic_atoms_uses_its_closed_form(theta in 0.05f64..4.0, gap in 0.0f64..3.0) {
        // mu = delta_0 has G(z) = 1/z, h(z) = ln z, G^{-1}(t) = 1/t
        let lam = 0.5 + gap;
        let got = j_value(theta, lam, &Measure::dirac(0.0), 1e-14).unwrap();
        let v = if 1.0 / lam <= theta { lam } else { 1.0 / theta };
        let want = theta * lam + (v - lam) / v - theta.ln() - v.ln() - 1.0;
        prop_assert!((got - want).abs() < 1e-9, "{} {}", got, want);
    }

    #[test]
    fn rate_i_is_even(x in 0.0f64..10.0) {
        prop_assert_eq!(rate_i(x), rate_i(-x));
    }
}
