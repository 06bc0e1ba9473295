//! Isomonodromy check for the Lax pair
//! `Ψ_λ = (−iτσ₃ + A₁/λ + A₂/λ²) Ψ`, `A₁ = [[1/4, u], [v, −1/4]]`,
//! `A₂ = [[z, q], [q, −z]]`, with coefficients built from `h(τ)`.
//!
//! `Ψ^(∞)` is fixed at large `λ` by `E d^{σ₃}(I + Σ m_k λ^{−k}) λ^{σ₃/4} e^{−iτλσ₃}`,
//! `Ψ^(0)` at small `λ` by `H d̃^{σ₃}(I + Σ n_k λ^k) λ^{σ₃/4} e^{(i/8λ)σ₃}`, where
//! `d = τ^{1/8} e^{J}`, `d̃ = τ^{1/8} e^{−J}` and `H = (iσ₃√h + σ₁)/√(h−1)`.
//! Both columns are carried along the positive real axis and
//! `Q = Ψ^(0)(λ)⁻¹ Ψ^(∞)(λ)` is read off at `λ_min`.

use std::f64::consts::PI;

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::SolutionTrajectory;
use crate::ode::{integrate, Settings};
use crate::transforms::{h_jet_on, HJet};

type M2 = Matrix2<Complex64>;

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Number of correction terms kept in each canonical expansion.
pub const SERIES_TERMS: usize = 4;
/// Relative and absolute tolerance for the `λ` integration.
pub const LAMBDA_TOL: f64 = 1e-12;
/// Step cap `0.1/(|τ| + |z|/λ²)` in `λ`.
pub const STEP_FACTOR: f64 = 0.1;
const COEFF_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaxCoefficients {
    pub tau: f64,
    pub h: f64,
    pub h_tau: f64,
    pub z: Complex64,
    pub q: Complex64,
    pub u: Complex64,
    pub v: Complex64,
    pub g: Complex64,
    /// `√h` and `√(h−1)` on the branches continued along the trajectory.
    pub sqrt_h: Complex64,
    pub sqrt_h1: Complex64,
}

impl LaxCoefficients {
    /// `|z² + q² + 1/64|` and `|q(u+v) − i/(8(h−1))|`.
    pub fn identity_defects(&self) -> (f64, f64) {
        let first = (self.z * self.z + self.q * self.q + 1.0 / 64.0).norm();
        let second = (self.q * (self.u + self.v) - I / (8.0 * (self.h - 1.0))).norm();
        (first, second)
    }

    fn a1(&self) -> M2 {
        M2::new(Complex64::new(0.25, 0.0), self.u, self.v, Complex64::new(-0.25, 0.0))
    }

    fn a2(&self) -> M2 {
        M2::new(self.z, self.q, self.q, -self.z)
    }

    fn a0(&self) -> M2 {
        sigma3() * Complex64::new(0.0, -self.tau)
    }

    /// `A(λ)`.
    pub fn matrix(&self, lambda: f64) -> M2 {
        self.a0() + self.a1() / Complex64::from(lambda) + self.a2() / Complex64::from(lambda * lambda)
    }
}

fn sigma3() -> M2 {
    M2::new(ONE, ZERO, ZERO, -ONE)
}

fn diag(a: Complex64, b: Complex64) -> M2 {
    M2::new(a, ZERO, ZERO, b)
}

fn diag_part(m: &M2) -> M2 {
    diag(m[(0, 0)], m[(1, 1)])
}

fn off_part(m: &M2) -> M2 {
    M2::new(ZERO, m[(0, 1)], m[(1, 0)], ZERO)
}

fn max_abs(m: &M2) -> f64 {
    m.iter().fold(0.0, |acc, c| acc.max(c.norm()))
}

/// Signs relating the continued `√h`, `√(h−1)` at `x` to the principal roots.
///
/// Every crossing `Φ = kπ` is a double zero of `Φ' ∓ 1`. For odd `k` it is a
/// double pole (`Φ' = 1`) or double zero (`Φ' = −1`) of `h`; for even `k` with
/// `Φ' = −1` it is a double zero of `h − 1`. The analytic roots change sign
/// there while the principal ones do not.
pub fn branch_signs(traj: &SolutionTrajectory, x: f64) -> (f64, f64) {
    let (mut sh, mut sh1) = (1.0, 1.0);
    for c in traj.crossings.iter().filter(|c| c.x_star < x) {
        let odd = c.k.rem_euclid(2) == 1;
        if odd {
            sh = -sh;
        }
        if odd == (c.eps > 0) {
            sh1 = -sh1;
        }
    }
    (sh, sh1)
}

/// Coefficients at `τ = −x²/8` from an `h` jet, with `√h = s_h·principal`,
/// `√(h−1) = s_{h−1}·principal`.
pub fn lax_coeffs_from(x: f64, jet: &HJet, signs: (f64, f64)) -> Result<LaxCoefficients> {
    let (h, ht) = (jet.h, jet.h_tau);
    if !h.is_finite() || !ht.is_finite() || h.abs() < COEFF_MARGIN || (h - 1.0).abs() < COEFF_MARGIN {
        return Err(Error::Singular(format!("Lax coefficients degenerate at x = {x}, h = {h}")));
    }
    let tau = -x * x / 8.0;
    let sh = Complex64::new(h, 0.0).sqrt() * signs.0;
    let sh1 = Complex64::new(h - 1.0, 0.0).sqrt() * signs.1;
    let z = -I / 8.0 * (h + 1.0) / (h - 1.0);
    let q = -0.25 * sh / (h - 1.0);
    let upv = -I / (2.0 * sh);
    let umv = I * tau * ht / ((1.0 - h) * sh);
    Ok(LaxCoefficients {
        tau,
        h,
        h_tau: ht,
        z,
        q,
        u: (upv + umv) / 2.0,
        v: (upv - umv) / 2.0,
        g: Complex64::from((1.0 + 1.0 / h) / (8.0 * tau)),
        sqrt_h: sh,
        sqrt_h1: sh1,
    })
}

pub fn lax_coeffs(traj: &SolutionTrajectory, x: f64) -> Result<LaxCoefficients> {
    let (_, jet) = h_jet_on(traj, x)?;
    lax_coeffs_from(x, &jet, branch_signs(traj, x))
}

/// Sampling step used to screen the `J` path for zeros of `h`.
const PATH_STEP: f64 = 1e-2;

/// `J(τ) = (1/8)∫_{−c}^{τ} dt/(t h(t))`, integrated in `x = √(−8t)` as
/// `(1/4)∫ dx/(x h)` on unit pieces.
pub fn compute_j(traj: &SolutionTrajectory, c: f64, tau: f64, target: f64) -> Result<f64> {
    if !(c > 0.0) || !(tau < 0.0) {
        return Err(Error::InvalidArgument(format!("need c > 0 and tau < 0, got c = {c}, tau = {tau}")));
    }
    let (x0, x1) = ((8.0 * c).sqrt(), (-8.0 * tau).sqrt());
    if x0 == x1 {
        return Ok(0.0);
    }
    let (lo, hi) = (x0.min(x1), x0.max(x1));
    let h_at = |x: f64| h_jet_on(traj, x).map(|(_, j)| j.h);
    let n = ((hi - lo) / PATH_STEP).ceil().max(1.0) as usize;
    let mut prev = h_at(lo)?;
    for i in 1..=n {
        let x = lo + (hi - lo) * i as f64 / n as f64;
        let cur = h_at(x)?;
        let through_zero = prev.signum() != cur.signum() && prev.abs().min(cur.abs()) < 1.0;
        if cur.abs() < COEFF_MARGIN || through_zero {
            return Err(Error::PathSingularity { tau: -x * x / 8.0 });
        }
        prev = cur;
    }
    let pieces = (hi - lo).ceil().max(1.0) as usize;
    let mut total = 0.0;
    for k in 0..pieces {
        let a = lo + (hi - lo) * k as f64 / pieces as f64;
        let b = lo + (hi - lo) * (k + 1) as f64 / pieces as f64;
        let out = quadrature::integrate(
            |x| match h_at(x) {
                Ok(h) => 1.0 / (4.0 * x * h),
                Err(_) => f64::NAN,
            },
            a,
            b,
            target / pieces as f64,
        );
        total += out.integral;
    }
    Ok(if x1 >= x0 { total } else { -total })
}

/// `d = τ^{1/8} e^{sign·J}` with `arg τ = π`.
fn tau_eighth(tau: f64, j: f64, sign: f64) -> Result<Complex64> {
    let e = sign * j;
    if e.abs() > 700.0 {
        return Err(Error::Overflow(format!("exp({e}) in the normalisation")));
    }
    Ok(Complex64::from_polar(tau.abs().powf(0.125) * e.exp(), PI / 8.0))
}

/// `m_0 = I, m_1, …, m_k` of the expansion at infinity for `B_j = E⁻¹A_jE`.
fn infinity_series(b1: &M2, b2: &M2, tau: f64, k_max: usize) -> Vec<M2> {
    let s3 = sigma3();
    let mut ms = vec![M2::identity()];
    for k in 1..=k_max {
        let m1 = ms[k - 1];
        let m2 = if k >= 2 { ms[k - 2] } else { M2::zeros() };
        let r = b1 * m1 + b2 * m2 + m1 * Complex64::from((k - 1) as f64) - m1 * s3 / Complex64::from(4.0);
        let it = Complex64::new(0.0, -tau);
        let mut m = M2::zeros();
        m[(0, 1)] = r[(0, 1)] / (it * -2.0);
        m[(1, 0)] = r[(1, 0)] / (it * 2.0);
        let d = diag_part(&(off_part(b1) * m + b2 * m1));
        m -= d / Complex64::from(k as f64);
        ms.push(m);
    }
    ms
}

/// `n_0 = I, n_1, …, n_k` of the expansion at zero for `Â_j = G⁻¹A_jG`.
fn zero_series(a0: &M2, a1: &M2, k_max: usize) -> Vec<M2> {
    let s3 = sigma3();
    let mut ns = vec![M2::identity()];
    for k in 1..=k_max {
        let n1 = ns[k - 1];
        let n2 = if k >= 2 { ns[k - 2] } else { M2::zeros() };
        let r = a0 * n2 + a1 * n1 - n1 * Complex64::from((k - 1) as f64) - n1 * s3 / Complex64::from(4.0);
        let mut n = M2::zeros();
        n[(0, 1)] = r[(0, 1)] / (I / 8.0 * 2.0);
        n[(1, 0)] = r[(1, 0)] / (I / 8.0 * -2.0);
        let d = diag_part(&(off_part(a1) * n + a0 * n1));
        n += d / Complex64::from(k as f64);
        ns.push(n);
    }
    ns
}

fn eval_series(terms: &[M2], t: f64) -> M2 {
    terms.iter().rev().fold(M2::zeros(), |acc, m| acc * Complex64::from(t) + m)
}

/// `Ψ^(∞)` at `λ` from the truncated expansion, with the size of the first
/// omitted term.
pub fn psi_infinity(c: &LaxCoefficients, j: f64, lambda: f64) -> Result<(M2, f64)> {
    let d = tau_eighth(c.tau, j, 1.0)?;
    let e = diag(d, 1.0 / d);
    let ei = diag(1.0 / d, d);
    let (b1, b2) = (ei * c.a1() * e, ei * c.a2() * e);
    let ms = infinity_series(&b1, &b2, c.tau, SERIES_TERMS + 1);
    let m = eval_series(&ms[..=SERIES_TERMS], 1.0 / lambda);
    let trunc = max_abs(&ms[SERIES_TERMS + 1]) * lambda.powi(-(SERIES_TERMS as i32 + 1));
    let l4 = lambda.powf(0.25);
    let ph = Complex64::from_polar(1.0, -c.tau * lambda);
    Ok((e * m * diag(Complex64::from(l4), Complex64::from(1.0 / l4)) * diag(ph, ph.conj()), trunc))
}

/// `H d̃^{σ₃}`.
pub fn gauge_zero(c: &LaxCoefficients, j: f64) -> Result<M2> {
    let s1 = M2::new(ZERO, ONE, ONE, ZERO);
    let hm = (sigma3() * (I * c.sqrt_h) + s1) / c.sqrt_h1;
    let dt = tau_eighth(c.tau, j, -1.0)?;
    Ok(hm * diag(dt, 1.0 / dt))
}

/// `Ψ^(0)` at `λ` from the truncated expansion, with the size of the first
/// omitted term.
pub fn psi_zero(c: &LaxCoefficients, j: f64, lambda: f64) -> Result<(M2, f64)> {
    let g = gauge_zero(c, j)?;
    let gi = g
        .try_inverse()
        .ok_or_else(|| Error::Conditioning("singular gauge at zero".into()))?;
    let (a0, a1) = (gi * c.a0() * g, gi * c.a1() * g);
    let ns = zero_series(&a0, &a1, SERIES_TERMS + 1);
    let n = eval_series(&ns[..=SERIES_TERMS], lambda);
    let trunc = max_abs(&ns[SERIES_TERMS + 1]) * lambda.powi(SERIES_TERMS as i32 + 1);
    let l4 = lambda.powf(0.25);
    let ph = Complex64::from_polar(1.0, 1.0 / (8.0 * lambda));
    Ok((g * n * diag(Complex64::from(l4), Complex64::from(1.0 / l4)) * diag(ph, ph.conj()), trunc))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaRun {
    /// `Ψ^(∞)` carried to `λ_min`.
    pub psi: M2,
    /// Largest `|det Ψ − det Ψ(λ_max)| / |det Ψ(λ_max)|` over accepted steps.
    pub wronskian_drift: f64,
    /// First omitted term of the expansion at `λ_max`.
    pub truncation: f64,
    pub steps: usize,
}

fn pack(m: &M2) -> [f64; 8] {
    [m[(0, 0)].re, m[(0, 1)].re, m[(1, 0)].re, m[(1, 1)].re, m[(0, 0)].im, m[(0, 1)].im, m[(1, 0)].im, m[(1, 1)].im]
}

fn unpack(y: &[f64; 8]) -> M2 {
    M2::new(
        Complex64::new(y[0], y[4]),
        Complex64::new(y[1], y[5]),
        Complex64::new(y[2], y[6]),
        Complex64::new(y[3], y[7]),
    )
}

/// Carries `Ψ^(∞)` from `λ_max` down to `λ_min` in `ln λ`. `step_scale`
/// multiplies the phase-resolving step cap.
pub fn integrate_lambda(c: &LaxCoefficients, j: f64, lambda_max: f64, lambda_min: f64, step_scale: f64) -> Result<LambdaRun> {
    if !(lambda_min > 0.0 && lambda_min < lambda_max) {
        return Err(Error::InvalidArgument(format!("need 0 < lambda_min < lambda_max, got {lambda_min}, {lambda_max}")));
    }
    if c.tau.abs() * lambda_max < 50.0 * (1.0 - 1e-12) || lambda_min > 1e-2 {
        return Err(Error::InvalidArgument(format!(
            "need |tau| lambda_max >= 50 and lambda_min <= 1e-2, got {} and {lambda_min}",
            c.tau.abs() * lambda_max
        )));
    }
    let (psi0, truncation) = psi_infinity(c, j, lambda_max)?;
    let det0 = psi0.determinant();
    let mut f = |s: f64, y: &[f64; 8]| {
        let l = s.exp();
        pack(&(c.matrix(l) * unpack(y) * Complex64::from(l)))
    };
    let zn = c.z.norm();
    let tau = c.tau.abs();
    let cap = |s: f64| {
        let l = s.exp();
        step_scale * STEP_FACTOR / (tau * l + zn / l)
    };
    let set = Settings { rtol: LAMBDA_TOL, atol: LAMBDA_TOL, h_max: 1.0, max_steps: 10_000_000 };
    let mut drift: f64 = 0.0;
    let mut steps = 0;
    let y = integrate(&mut f, lambda_max.ln(), pack(&psi0), lambda_min.ln(), set, cap, |_, y, _| {
        steps += 1;
        drift = drift.max((unpack(y).determinant() - det0).norm() / det0.norm());
    })
    .map_err(|e| match e {
        Error::IntegrationFailure { x, reason } => Error::IntegrationFailure { x: x.exp(), reason },
        other => other,
    })?;
    let psi = unpack(&y);
    if psi.iter().any(|v| !v.is_finite()) {
        return Err(Error::Overflow("non-finite fundamental matrix".into()));
    }
    Ok(LambdaRun { psi, wronskian_drift: drift, truncation, steps })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonodromyRecord {
    pub a: f64,
    pub x: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Row-major `Q`.
    pub q: [[Complex64; 2]; 2],
    pub truncation_estimate: f64,
    /// The constant `c` in `J`.
    pub c_norm: f64,
    pub j: f64,
    pub wronskian_drift: f64,
    /// `|Q₂₁| / (2^{−3/4} √(aπ))`.
    pub q21_ratio: f64,
    pub identity_defects: (f64, f64),
}

impl MonodromyRecord {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("record serializes")
    }

    /// Largest entrywise `|Q_ij − Q'_ij| / max(|Q_ij|, |Q'_ij|)`; the scale is
    /// floored at `10⁻⁸ max|Q|` so vanishing entries do not dominate.
    pub fn relative_difference(&self, other: &MonodromyRecord) -> f64 {
        let floor = 1e-8 * self.q.iter().flatten().chain(other.q.iter().flatten()).fold(0.0f64, |m, c| m.max(c.norm()));
        let mut worst: f64 = 0.0;
        for i in 0..2 {
            for k in 0..2 {
                let (p, q) = (self.q[i][k], other.q[i][k]);
                let scale = p.norm().max(q.norm()).max(floor);
                if scale > 0.0 {
                    worst = worst.max((p - q).norm() / scale);
                }
            }
        }
        worst
    }
}

/// Default `λ_max` with `|τ| λ_max = 50`.
pub fn default_lambda_max(x: f64) -> f64 {
    400.0 / (x * x)
}

/// Default `λ_min`.
pub fn default_lambda_min(x: f64) -> f64 {
    1e-3 / x
}

/// Conditioning limit for `Ψ^(0)`.
pub const MAX_CONDITION: f64 = 1e12;

pub fn extract_q(traj: &SolutionTrajectory, x: f64, c: f64, lambda_max: f64, lambda_min: f64) -> Result<MonodromyRecord> {
    extract_q_with(traj, x, c, lambda_max, lambda_min, 1.0)
}

pub fn extract_q_with(
    traj: &SolutionTrajectory,
    x: f64,
    c: f64,
    lambda_max: f64,
    lambda_min: f64,
    step_scale: f64,
) -> Result<MonodromyRecord> {
    let coeffs = lax_coeffs(traj, x)?;
    let j = compute_j(traj, c, coeffs.tau, 1e-13)?;
    let run = integrate_lambda(&coeffs, j, lambda_max, lambda_min, step_scale)?;
    let (p0, trunc0) = psi_zero(&coeffs, j, lambda_min)?;
    let inv = p0
        .try_inverse()
        .ok_or_else(|| Error::Conditioning("singular canonical solution at zero".into()))?;
    let cond = max_abs(&p0) * max_abs(&inv) * 2.0;
    if !(cond < MAX_CONDITION) {
        return Err(Error::Conditioning(format!("canonical solution at zero has condition {cond:e}")));
    }
    let q = inv * run.psi;
    let target = 2f64.powf(-0.75) * (traj.a * PI).sqrt();
    Ok(MonodromyRecord {
        a: traj.a,
        x,
        lambda_min,
        lambda_max,
        q: [[q[(0, 0)], q[(0, 1)]], [q[(1, 0)], q[(1, 1)]]],
        truncation_estimate: run.truncation + trunc0,
        c_norm: c,
        j,
        wronskian_drift: run.wronskian_drift,
        q21_ratio: q[(1, 0)].norm() / target,
        identity_defects: coeffs.identity_defects(),
    })
}
