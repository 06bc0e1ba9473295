//! Closed-form connection data: regimes, `β(a)`, `γ(a)`, and the `(2,1)`
//! entry of the connection matrix from the origin datum and from the large-x
//! asymptotics.

use std::f64::consts::{FRAC_1_PI, FRAC_PI_2, LN_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::{arg_gamma, rgamma};

/// Distance from `1/π` inside which `a` counts as critical.
pub const REGIME_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// `a > 1/π`: `Φ ≈ −x + β ln x + γ`
    A,
    /// `a < 1/π`: `Φ ≈ x + β ln x + γ`
    B,
    /// `a = 1/π`: `Φ → π/2`
    C,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GammaMod {
    Exact,
    ModPi,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectionPrediction {
    pub a: f64,
    pub regime: Regime,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub gamma_mod: GammaMod,
    pub limit_value: Option<f64>,
}

pub fn regime_of(a: f64) -> Regime {
    let d = a - FRAC_1_PI;
    if d.abs() <= REGIME_TOL {
        Regime::C
    } else if d > 0.0 {
        Regime::A
    } else {
        Regime::B
    }
}

/// Representative of `x` modulo π in `(−π/2, π/2]`.
pub fn reduce_mod_pi(x: f64) -> f64 {
    let r = x - PI * (x / PI).round();
    if r <= -FRAC_PI_2 {
        r + PI
    } else if r > FRAC_PI_2 {
        r - PI
    } else {
        r
    }
}

/// Distance between `x` and `y` modulo π.
pub fn dist_mod_pi(x: f64, y: f64) -> f64 {
    reduce_mod_pi(x - y).abs()
}

pub fn beta_a(a: f64) -> f64 {
    -FRAC_1_PI * (a * PI - 1.0).ln()
}

pub fn beta_b(a: f64) -> f64 {
    FRAC_1_PI * (1.0 - a * PI).ln()
}

/// `γ = π/2 + 2 arg Γ(iβ/2 − 1/2) + β ln 2`, reduced modulo π.
pub fn gamma_a(beta: f64) -> f64 {
    let g = arg_gamma(Complex64::new(-0.5, beta / 2.0)).expect("no pole off the real axis or at -1/2");
    reduce_mod_pi(FRAC_PI_2 + 2.0 * g + beta * LN_2)
}

/// The phase obtained by matching the large-x `(2,1)` entry against the
/// purely imaginary origin datum: `π/2 + 2 arg Γ(1/2 − iβ/2) + β ln 2`,
/// reduced modulo π.
pub fn gamma_a_phase_matched(beta: f64) -> f64 {
    let g = arg_gamma(Complex64::new(0.5, -beta / 2.0)).expect("Re = 1/2 is pole free");
    reduce_mod_pi(FRAC_PI_2 + 2.0 * g + beta * LN_2)
}

/// `γ = −2 arg Γ(iβ/2) + β ln 2 − π sign β`, and `γ(0) = 0`.
pub fn gamma_b(beta: f64) -> f64 {
    if beta == 0.0 {
        return 0.0;
    }
    let g = arg_gamma(Complex64::new(0.0, beta / 2.0)).expect("beta != 0");
    -2.0 * g + beta * LN_2 - PI * beta.signum()
}

pub fn predict(a: f64) -> ConnectionPrediction {
    match regime_of(a) {
        Regime::A => {
            let b = beta_a(a);
            ConnectionPrediction {
                a,
                regime: Regime::A,
                beta: Some(b),
                gamma: Some(gamma_a(b)),
                gamma_mod: GammaMod::ModPi,
                limit_value: None,
            }
        }
        Regime::B => {
            let b = beta_b(a);
            ConnectionPrediction {
                a,
                regime: Regime::B,
                beta: Some(b),
                gamma: Some(gamma_b(b)),
                gamma_mod: GammaMod::Exact,
                limit_value: None,
            }
        }
        Regime::C => ConnectionPrediction {
            a,
            regime: Regime::C,
            beta: None,
            gamma: None,
            gamma_mod: GammaMod::Exact,
            limit_value: Some(FRAC_PI_2),
        },
    }
}

pub fn invert_beta(beta: f64, regime: Regime) -> Result<f64> {
    match regime {
        Regime::A => Ok((1.0 + (-PI * beta).exp()) / PI),
        Regime::B => Ok((1.0 - (PI * beta).exp()) / PI),
        Regime::C => Err(Error::Unsupported("beta is undefined in the critical regime".into())),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Q21Source {
    Origin,
    LemmaA,
    LemmaB,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Q21Value {
    pub value: Complex64,
    pub source: Q21Source,
}

/// `i 2^{−3/4} √(aπ)`.
pub fn q21_origin(a: f64) -> Result<Q21Value> {
    if !(a >= 0.0) {
        return Err(Error::Unsupported(format!("origin datum needs a >= 0, got {a}")));
    }
    Ok(Q21Value {
        value: Complex64::new(0.0, 2f64.powf(-0.75) * (a * PI).sqrt()),
        source: Q21Source::Origin,
    })
}

/// `2^{−1/4} √π e^{−πβ/4} / Γ(1/2 − iβ/2) · exp(iS + ix/2 − i(β/2) ln x − i(β/2) ln 2 + 3πi/4)`.
pub fn q21_lemma_a(beta: f64, s: f64, x: f64) -> Q21Value {
    let amp = 2f64.powf(-0.25) * PI.sqrt() * (-PI * beta / 4.0).exp()
        * rgamma(Complex64::new(0.5, -beta / 2.0));
    let ph = s + x / 2.0 - beta / 2.0 * x.ln() - beta / 2.0 * LN_2 + 0.75 * PI;
    Q21Value { value: amp * Complex64::from_polar(1.0, ph), source: Q21Source::LemmaA }
}

/// `i √β 2^{−3/4} √π e^{πβ/4} / Γ(iβ/2 + 1) · exp(−iS + ix/2 + i(β/2) ln x + i(β/2) ln 2)`
/// with the principal root for `β < 0`.
pub fn q21_lemma_b(beta: f64, s: f64, x: f64) -> Q21Value {
    let sqrt_beta = Complex64::new(beta, 0.0).sqrt();
    let amp = Complex64::i() * sqrt_beta * 2f64.powf(-0.75) * PI.sqrt() * (PI * beta / 4.0).exp()
        * rgamma(Complex64::new(1.0, beta / 2.0));
    let ph = -s + x / 2.0 + beta / 2.0 * x.ln() + beta / 2.0 * LN_2;
    Q21Value { value: amp * Complex64::from_polar(1.0, ph), source: Q21Source::LemmaB }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regimes() {
        assert_eq!(predict(2.0 / PI).regime, Regime::A);
        assert!(predict(2.0 / PI).beta.unwrap().abs() < 1e-15);
        let p = predict((1.0 - (-PI).exp()) / PI);
        assert_eq!(p.regime, Regime::B);
        assert!((p.beta.unwrap() + 1.0).abs() < 1e-12);
        let c = predict(FRAC_1_PI);
        assert_eq!(c.regime, Regime::C);
        assert_eq!(c.limit_value, Some(FRAC_PI_2));
        let z = predict(0.0);
        assert_eq!((z.regime, z.beta, z.gamma), (Regime::B, Some(0.0), Some(0.0)));
    }

    #[test]
    fn gamma_a_at_zero_beta() {
        assert!(dist_mod_pi(gamma_a(0.0), FRAC_PI_2) < 1e-14);
    }

    #[test]
    fn gamma_b_limit_at_zero() {
        assert!(gamma_b(1e-10).abs() < 1e-8);
        assert!(gamma_b(-1e-10).abs() < 1e-8);
    }

    #[test]
    fn invert_round_trip() {
        assert!((invert_beta(0.0, Regime::A).unwrap() - 2.0 / PI).abs() < 1e-15);
        assert_eq!(invert_beta(0.0, Regime::B).unwrap(), 0.0);
        let a = invert_beta(-0.7, Regime::B).unwrap();
        assert!((predict(a).beta.unwrap() + 0.7).abs() < 1e-14);
        assert!(invert_beta(1.0, Regime::C).is_err());
    }

    #[test]
    fn origin_datum() {
        assert_eq!(q21_origin(0.0).unwrap().value, Complex64::new(0.0, 0.0));
        let v = q21_origin(FRAC_1_PI).unwrap().value;
        assert!((v - Complex64::new(0.0, 2f64.powf(-0.75))).norm() < 1e-15);
        assert!(q21_origin(-0.1).is_err());
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn reduction() {
        for &x in &[-7.0, -1.5707963, 0.0, 1.5707964, 3.0, 100.0] {
            let r = reduce_mod_pi(x);
            assert!(r > -FRAC_PI_2 && r <= FRAC_PI_2);
            assert!(((x - r) / PI - ((x - r) / PI).round()).abs() < 1e-12);
        }
    }
}
