//! Complex log-gamma.
//!
//! The branch is the one continuous on the plane cut along the non-positive
//! real axis and real on the positive axis (the usual `loggamma`), so
//! `ln Γ(z + 1) = ln Γ(z) + Log z` holds with the principal `Log`. On the cut
//! itself the value is the limit from above.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// `B_{2k} / (2k (2k − 1))` for `k = 1..=10`.
const STIRLING: [f64; 10] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
    -3617.0 / 122400.0,
    43867.0 / 244188.0,
    -174611.0 / 125400.0,
];

const SHIFT_TO: f64 = 10.0;

fn is_pole(z: Complex64) -> bool {
    z.im == 0.0 && z.re <= 0.0 && z.re == z.re.round()
}

fn stirling(w: Complex64) -> Complex64 {
    let half_ln_2pi = 0.5 * (2.0 * PI).ln();
    let inv = w.inv();
    let inv2 = inv * inv;
    let mut corr = Complex64::new(0.0, 0.0);
    let mut p = inv;
    for c in STIRLING {
        corr += p * c;
        p *= inv2;
    }
    (w - 0.5) * w.ln() - w + half_ln_2pi + corr
}

pub fn log_gamma(z: Complex64) -> Result<Complex64> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::InvalidArgument(format!("non-finite argument {z}")));
    }
    if is_pole(z) {
        return Err(Error::Pole(z));
    }
    // −0.0 in the imaginary part would select the lower side of the cut
    let z = Complex64::new(z.re, if z.im == 0.0 { 0.0 } else { z.im });
    let mut w = z;
    let mut shift = Complex64::new(0.0, 0.0);
    while w.re < SHIFT_TO {
        shift += w.ln();
        w += 1.0;
    }
    Ok(stirling(w) - shift)
}

/// Imaginary part of [`log_gamma`], i.e. the continuous argument of `Γ(z)`
/// (not reduced to `(−π, π]`).
pub fn arg_gamma(z: Complex64) -> Result<f64> {
    log_gamma(z).map(|v| v.im)
}

pub fn gamma(z: Complex64) -> Result<Complex64> {
    log_gamma(z).map(|v| v.exp())
}

/// `1/Γ(z)`, entire: zero at the poles of `Γ`.
pub fn rgamma(z: Complex64) -> Complex64 {
    if is_pole(z) {
        return Complex64::new(0.0, 0.0);
    }
    match log_gamma(z) {
        Ok(v) => (-v).exp(),
        Err(_) => Complex64::new(f64::NAN, f64::NAN),
    }
}
