//! Oracles shared by the integration tests.
#![allow(dead_code)]

use num_complex::Complex64;

pub const EULER: f64 = 0.577_215_664_901_532_9;

fn ln_1p(w: Complex64) -> Complex64 {
    if w.norm() < 1e-3 {
        let mut t = w;
        let mut s = Complex64::new(0.0, 0.0);
        for j in 1..8 {
            s += t / j as f64;
            t *= -w;
        }
        s
    } else {
        (1.0 + w).ln()
    }
}

/// `ln Γ(z) = −γz − ln z + Σ_{k≤N} [z/k − ln(1 + z/k)]` plus the tail
/// `−Σ_{k>N} Σ_{j≥2} (−z/k)^j / j`, using `Σ_{k>N} k^{−j} ≈ N^{1−j}/(j−1) − N^{−j}/2`.
/// The imaginary part is the branch continuous from the positive axis.
pub fn weierstrass_log_gamma(z: Complex64, n: usize) -> Complex64 {
    let mut s = -EULER * z - z.ln();
    for k in 1..=n {
        let kf = k as f64;
        s += z / kf - ln_1p(z / kf);
    }
    let nf = n as f64;
    let mut tail = Complex64::new(0.0, 0.0);
    let mut zj = z;
    for j in 2..6 {
        zj *= -z;
        let zeta_tail = nf.powi(1 - j) / (j as f64 - 1.0) - 0.5 * nf.powi(-j);
        tail -= zj / j as f64 * zeta_tail;
    }
    s + tail
}
