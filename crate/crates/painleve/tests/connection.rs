mod common;

use common::weierstrass_log_gamma;
use num_complex::Complex64;
use painleve::connection::*;
use painleve::specfun::{arg_gamma, gamma};
use painleve::Error;
use proptest::prelude::*;
use std::f64::consts::{FRAC_1_PI, FRAC_PI_2, LN_2, PI};

fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

#[test]
fn documented_predictions() {
    let p = predict(2.0 / PI);
    assert_eq!(p.regime, Regime::A);
    assert!(p.beta.unwrap().abs() < 1e-15);
    assert_eq!(p.gamma_mod, GammaMod::ModPi);

    let p = predict((1.0 - (-PI).exp()) / PI);
    assert_eq!(p.regime, Regime::B);
    assert!((p.beta.unwrap() + 1.0).abs() < 1e-14);

    let p = predict(FRAC_1_PI);
    assert_eq!(p.regime, Regime::C);
    assert_eq!(p.limit_value, Some(FRAC_PI_2));
    assert!(p.beta.is_none() && p.gamma.is_none());

    let p = predict(0.0);
    assert_eq!(p.regime, Regime::B);
    assert_eq!(p.beta, Some(0.0));
    assert_eq!(p.gamma, Some(0.0));
}

#[test]
fn regime_tolerance_band() {
    assert_eq!(regime_of(FRAC_1_PI + 0.9e-12), Regime::C);
    assert_eq!(regime_of(FRAC_1_PI - 0.9e-12), Regime::C);
    assert_eq!(regime_of(FRAC_1_PI + 2e-12), Regime::A);
    assert_eq!(regime_of(FRAC_1_PI - 2e-12), Regime::B);
    // negative a is in scope for the prediction
    let p = predict(-1.0);
    assert_eq!(p.regime, Regime::B);
    assert!((p.beta.unwrap() - (1.0 + PI).ln() / PI).abs() < 1e-15);
}

#[test]
fn gamma_a_at_zero_beta() {
    // Γ(−1/2) = −2√π is real negative
    let g = gamma_a(0.0);
    assert!(dist_mod_pi(g, FRAC_PI_2) < 1e-14, "{g}");
}

#[test]
fn gamma_a_against_product_oracle() {
    for &b in &[1.0, -1.0, 0.3, 2.5] {
        let z = Complex64::new(-0.5, b / 2.0);
        let arg = weierstrass_log_gamma(z, 200_000).im;
        let want = FRAC_PI_2 + 2.0 * arg + b * LN_2;
        assert!(dist_mod_pi(gamma_a(b), want) < 1e-9, "{b}");
    }
}

#[test]
fn gamma_b_against_product_oracle() {
    for &b in &[-1.0, 0.4, 2.0] {
        let z = Complex64::new(0.0, b / 2.0);
        let arg = weierstrass_log_gamma(z, 200_000).im;
        let want = -2.0 * arg + b * LN_2 - PI * b.signum();
        assert!((gamma_b(b) - want).abs() < 1e-9, "{b}");
    }
    let want = -2.0 * arg_gamma(Complex64::new(0.0, -0.5)).unwrap() - LN_2 + PI;
    assert!((gamma_b(-1.0) - want).abs() < 1e-15);
}

#[test]
fn gamma_b_continuous_at_zero() {
    for &b in &[1e-4, 1e-6, 1e-8] {
        assert!(gamma_b(b).abs() < 10.0 * b && gamma_b(-b).abs() < 10.0 * b, "{b}");
    }
}

#[test]
fn conjugation_symmetry() {
    for &b in &[0.2, 1.0, 3.0] {
        let z = Complex64::new(-0.5, b / 2.0);
        assert!((arg_gamma(z.conj()).unwrap() + arg_gamma(z).unwrap()).abs() < 1e-14);
        // γ_A(β) + γ_A(−β) ≡ π (the π/2 offsets add up)
        assert!(dist_mod_pi(gamma_a(b) + gamma_a(-b), PI) < 1e-13);
    }
}

#[test]
fn phase_matched_differs_from_literal_off_zero() {
    assert!(dist_mod_pi(gamma_a(0.0), gamma_a_phase_matched(0.0)) < 1e-14);
    for &b in &[0.5, -0.8, 1.3] {
        assert!(dist_mod_pi(gamma_a(b), gamma_a_phase_matched(b)) > 0.1, "{b}");
    }
}

#[test]
fn q21_origin_values() {
    assert_eq!(q21_origin(0.0).unwrap().value, Complex64::new(0.0, 0.0));
    let v = q21_origin(FRAC_1_PI).unwrap();
    assert!((v.value - Complex64::new(0.0, 2f64.powf(-0.75))).norm() < 1e-15);
    assert_eq!(v.source, Q21Source::Origin);
    let v = q21_origin(0.5).unwrap().value;
    assert!((v.norm_sqr() - 2f64.powf(-1.5) * 0.5 * PI).abs() < 1e-15);
    assert!(v.re == 0.0 && v.im >= 0.0);
    assert!(matches!(q21_origin(-0.1), Err(Error::Unsupported(_))));
}

#[test]
fn lemma_a_modulus_closed_form() {
    for &b in &[-2.0, -0.3, 0.0, 0.7, 1.9] {
        let m2 = q21_lemma_a(b, 0.3, 50.0).value.norm_sqr();
        let want = 2f64.powf(-0.5) * (-PI * b / 2.0).exp() * (PI * b / 2.0).cosh();
        assert!((m2 - want).abs() <= 1e-13 * want, "{b}");
        // |Γ(1/2+iy)|² = π/cosh(πy) is the identity behind it
        let g = gamma(Complex64::new(0.5, -b / 2.0)).unwrap();
        assert!((g.norm_sqr() - PI / (PI * b / 2.0).cosh()).abs() < 1e-12 * g.norm_sqr());
    }
}

#[test]
fn lemma_b_modulus_closed_form() {
    for &b in &[-2.0, -0.3, 0.4, 1.5] {
        let m2 = q21_lemma_b(b, -0.7, 30.0).value.norm_sqr();
        let want = 2f64.powf(-1.5) * ((PI * b).exp() - 1.0).abs();
        assert!((m2 - want).abs() <= 1e-13 * want, "{b}");
    }
    assert_eq!(q21_lemma_b(0.0, 1.0, 5.0).value.norm(), 0.0);
    assert!(q21_lemma_b(1e-10, 1.0, 5.0).value.norm() < 2e-5);
}

#[test]
fn modulus_independent_of_phase_inputs() {
    let (b, s0, x0) = (0.37, 0.1, 10.0);
    let (ma, mb) = (q21_lemma_a(b, s0, x0).value.norm(), q21_lemma_b(b, s0, x0).value.norm());
    for &(s, x) in &[(2.0, 100.0), (-5.0, 7.5), (0.0, 1e4)] {
        assert!((q21_lemma_a(b, s, x).value.norm() - ma).abs() < 1e-15);
        assert!((q21_lemma_b(b, s, x).value.norm() - mb).abs() < 1e-15);
    }
}

#[test]
fn modulus_match_regime_a_grid() {
    for a in grid(FRAC_1_PI + 1e-3, 3.0, 20) {
        let p = predict(a);
        assert_eq!(p.regime, Regime::A);
        let lhs = q21_lemma_a(p.beta.unwrap(), 0.0, 1.0).value.norm();
        let rhs = q21_origin(a).unwrap().value.norm();
        assert!((lhs - rhs).abs() <= 1e-12, "{a}: {lhs} {rhs}");
    }
}

#[test]
fn modulus_match_regime_b_grid() {
    for a in grid(1e-3, FRAC_1_PI - 1e-3, 20) {
        let p = predict(a);
        assert_eq!(p.regime, Regime::B);
        let lhs = q21_lemma_b(p.beta.unwrap(), 0.0, 1.0).value.norm();
        let rhs = q21_origin(a).unwrap().value.norm();
        assert!((lhs - rhs).abs() <= 1e-12, "{a}: {lhs} {rhs}");
    }
}

#[test]
fn documented_modulus_matches() {
    let b = predict(1.0).beta.unwrap();
    assert!((q21_lemma_a(b, 0.0, 1.0).value.norm() - q21_origin(1.0).unwrap().value.norm()).abs() < 1e-12);
    let b = predict(0.2).beta.unwrap();
    assert!((q21_lemma_b(b, 0.0, 1.0).value.norm() - q21_origin(0.2).unwrap().value.norm()).abs() < 1e-12);
}

#[test]
fn beta_diverges_at_separatrix() {
    let mut prev_b = 0.0;
    let mut prev_a = 0.0;
    for k in 1..=10 {
        let d = 10f64.powi(-k);
        let (bb, ba) = (predict(FRAC_1_PI - d).beta.unwrap(), predict(FRAC_1_PI + d).beta.unwrap());
        assert!(bb < prev_b && ba > prev_a, "{d}");
        prev_b = bb;
        prev_a = ba;
    }
    // β = ln(π·10⁻¹⁰)/π ≈ −6.96 at the last step
    assert!(prev_b < -6.5 && prev_a > 6.5);
}

#[test]
fn invert_beta_examples() {
    assert!((invert_beta(0.0, Regime::A).unwrap() - 2.0 / PI).abs() < 1e-16);
    assert_eq!(invert_beta(0.0, Regime::B).unwrap(), 0.0);
    let a = invert_beta(-0.7, Regime::B).unwrap();
    assert!((predict(a).beta.unwrap() + 0.7).abs() <= 1e-14);
    assert!(matches!(invert_beta(0.1, Regime::C), Err(Error::Unsupported(_))));
}

#[test]
fn reduce_mod_pi_range() {
    for &x in &[-10.0, -FRAC_PI_2, FRAC_PI_2, 0.0, 3.0, 100.0] {
        let r = reduce_mod_pi(x);
        assert!(r > -FRAC_PI_2 && r <= FRAC_PI_2 + 1e-15, "{x}: {r}");
        assert!(dist_mod_pi(r, x) < 1e-12);
    }
}

proptest! {
    #[test]
    fn prop_gamma_b_odd(b in -6.0f64..6.0) {
        prop_assert!((gamma_b(b) + gamma_b(-b)).abs() < 1e-13);
    }

    #[test]
    fn prop_invert_roundtrip_b(b in -8.0f64..0.8) {
        let a = invert_beta(b, Regime::B).unwrap();
        prop_assume!((a - FRAC_1_PI).abs() > 1e-9);
        // rounding in a is amplified by 1/(π|aπ − 1|)
        let cond = 1.0 / (PI * (a * PI - 1.0).abs());
        prop_assert!((predict(a).beta.unwrap() - b).abs() < 1e-14 + 4.0 * f64::EPSILON * cond);
    }

    #[test]
    fn prop_invert_roundtrip_a(b in -0.8f64..8.0) {
        let a = invert_beta(b, Regime::A).unwrap();
        prop_assume!((a - FRAC_1_PI).abs() > 1e-9);
        // rounding in a is amplified by 1/(π|aπ − 1|)
        let cond = 1.0 / (PI * (a * PI - 1.0).abs());
        prop_assert!((predict(a).beta.unwrap() - b).abs() < 1e-14 + 4.0 * f64::EPSILON * cond);
    }

    #[test]
    fn prop_modulus_identity(a in 0.0f64..5.0) {
        prop_assume!((a - FRAC_1_PI).abs() > 1e-6);
        let p = predict(a);
        let b = p.beta.unwrap();
        let lhs = match p.regime {
            Regime::A => q21_lemma_a(b, 0.0, 1.0),
            _ => q21_lemma_b(b, 0.0, 1.0),
        }.value.norm();
        prop_assert!((lhs - q21_origin(a).unwrap().value.norm()).abs() < 1e-12);
    }
}
