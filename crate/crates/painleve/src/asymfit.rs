//! Large-x parameter extraction: least squares of `Φ − σx` against
//! `β ln x + γ` (optionally `+ δ/x`) on doubling windows.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::connection::{dist_mod_pi, predict, ConnectionPrediction, GammaMod, Regime};
use crate::error::{Error, Result};
use crate::integrator::SolutionTrajectory;

/// Samples per window, equally spaced in `ln x`.
pub const SAMPLES_PER_WINDOW: usize = 200;
/// Allowed distance of the last-window mean slope from `±1`.
pub const SLOPE_TOL: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitWindow {
    pub x_lo: f64,
    pub x_hi: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Coefficient of `1/x` in the refined model.
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticFit {
    pub sigma: i32,
    pub beta_fit: f64,
    pub gamma_fit: f64,
    pub windows: Vec<FitWindow>,
    pub drift: f64,
    pub refined: bool,
}

/// `n` points equally spaced in `ln x` on `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    let mut g: Vec<f64> = (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect();
    g[0] = lo;
    g[n - 1] = hi;
    g
}

fn design(xs: &[f64], xc: f64, refined: bool, centered: bool) -> DMatrix<f64> {
    let cols = if refined { 3 } else { 2 };
    DMatrix::from_fn(xs.len(), cols, |i, j| match j {
        0 if centered => (xs[i] / xc).ln(),
        0 => xs[i].ln(),
        1 => 1.0,
        _ => xc / xs[i],
    })
}

/// Condition number of the normal matrix for `[ln x, 1]` on the log grid of
/// `[x_lo, x_hi]`; `centered` replaces `ln x` by `ln(x/X_c)` with `X_c` the
/// geometric midpoint.
pub fn normal_condition(x_lo: f64, x_hi: f64, centered: bool) -> f64 {
    let xs = log_grid(x_lo, x_hi, SAMPLES_PER_WINDOW);
    let a = design(&xs, (x_lo * x_hi).sqrt(), false, centered);
    let n = a.transpose() * &a;
    let ev = n.symmetric_eigenvalues();
    ev.max() / ev.min()
}

/// Householder least squares.
fn least_squares(a: DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let qr = a.qr();
    let qtb = qr.q().transpose() * b;
    qr.r()
        .solve_upper_triangular(&qtb)
        .ok_or_else(|| Error::Conditioning("rank-deficient design matrix".into()))
}

fn fit_window(traj: &SolutionTrajectory, lo: f64, hi: f64, sigma: f64, refined: bool) -> Result<FitWindow> {
    let xs = log_grid(lo, hi, SAMPLES_PER_WINDOW);
    let xc = (lo * hi).sqrt();
    let mut rhs = DVector::zeros(xs.len());
    for (i, &x) in xs.iter().enumerate() {
        rhs[i] = traj.dense_eval(x)?.0 - sigma * x;
    }
    let sol = least_squares(design(&xs, xc, refined, true), &rhs)?;
    let beta = sol[0];
    Ok(FitWindow {
        x_lo: lo,
        x_hi: hi,
        beta,
        gamma: sol[1] - beta * xc.ln(),
        delta: refined.then(|| sol[2] * xc),
    })
}

fn mean_slope(traj: &SolutionTrajectory, lo: f64, hi: f64) -> Result<f64> {
    let xs = log_grid(lo, hi, SAMPLES_PER_WINDOW);
    let mut sum = 0.0;
    for &x in &xs {
        sum += traj.dense_eval(x)?.1;
    }
    Ok(sum / xs.len() as f64)
}

pub fn fit(traj: &SolutionTrajectory, x_lo: f64, n_windows: usize) -> Result<AsymptoticFit> {
    fit_with(traj, x_lo, n_windows, false)
}

pub fn fit_with(traj: &SolutionTrajectory, x_lo: f64, n_windows: usize, refined: bool) -> Result<AsymptoticFit> {
    if n_windows < 2 || !(x_lo > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need x_lo > 0 and at least two windows, got x_lo = {x_lo}, n = {n_windows}"
        )));
    }
    let top = x_lo * 2f64.powi(n_windows as i32);
    if top > traj.x_max() * (1.0 + 1e-12) {
        return Err(Error::OutOfRange(format!("windows reach {top}, trajectory ends at {}", traj.x_max())));
    }
    let top = top.min(traj.x_max());
    let last_lo = top / 2.0;
    let m = mean_slope(traj, last_lo, top)?;
    let sigma = if (m - 1.0).abs() <= SLOPE_TOL {
        1
    } else if (m + 1.0).abs() <= SLOPE_TOL {
        -1
    } else {
        return Err(Error::NotAsymptotic { mean_slope: m });
    };
    let mut windows = Vec::with_capacity(n_windows);
    for i in 0..n_windows {
        let lo = x_lo * 2f64.powi(i as i32);
        let hi = if i + 1 == n_windows { top } else { 2.0 * lo };
        windows.push(fit_window(traj, lo, hi, sigma as f64, refined)?);
    }
    let (p, q) = (&windows[n_windows - 2], &windows[n_windows - 1]);
    let drift = (q.beta - p.beta).abs().max((q.gamma - p.gamma).abs());
    Ok(AsymptoticFit {
        sigma,
        beta_fit: q.beta,
        gamma_fit: q.gamma,
        windows,
        drift,
        refined,
    })
}

/// `|Φ'(X) − σ − c(X)/X|` with `c = sin 2Φ + 2β sin²Φ` in regime A and
/// `c = 2β sin²Φ` in regime B, `β` from the connection formulas.
pub fn refined_slope_check(traj: &SolutionTrajectory, x: f64) -> Result<f64> {
    let pred = predict(traj.a);
    let beta = match (pred.regime, pred.beta) {
        (Regime::C, _) | (_, None) => {
            return Err(Error::Unsupported("no refined slope in the critical regime".into()))
        }
        (_, Some(b)) => b,
    };
    let (phi, dphi, _) = traj.dense_eval(x)?;
    let s2 = phi.sin().powi(2);
    let (sigma, corr) = match pred.regime {
        Regime::A => (-1.0, (2.0 * phi).sin() + 2.0 * beta * s2),
        _ => (1.0, 2.0 * beta * s2),
    };
    Ok((dphi - sigma - corr / x).abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Discrepancy {
    pub beta: f64,
    /// Modulo π when `gamma_mod` is `ModPi`.
    pub gamma: f64,
    pub gamma_mod: GammaMod,
}

impl Discrepancy {
    pub fn passes(&self, beta_tol: f64, gamma_tol: f64) -> bool {
        self.beta <= beta_tol && self.gamma <= gamma_tol
    }
}

/// Distance of `gamma_fit` from `gamma` under the given convention.
pub fn gamma_distance(gamma_fit: f64, gamma: f64, m: GammaMod) -> f64 {
    match m {
        GammaMod::Exact => (gamma_fit - gamma).abs(),
        GammaMod::ModPi => dist_mod_pi(gamma_fit, gamma),
    }
}

pub fn compare(fit: &AsymptoticFit, pred: &ConnectionPrediction) -> Result<Discrepancy> {
    let expected = match pred.regime {
        Regime::A => -1,
        Regime::B => 1,
        Regime::C => 0,
    };
    let (Some(beta), Some(gamma)) = (pred.beta, pred.gamma) else {
        return Err(Error::ClassificationConflict(format!(
            "fit has slope {} but a = {} is critical",
            fit.sigma, pred.a
        )));
    };
    if fit.sigma != expected {
        return Err(Error::ClassificationConflict(format!(
            "fit has slope {} but a = {} predicts {:?}",
            fit.sigma, pred.a, pred.regime
        )));
    }
    Ok(Discrepancy {
        beta: (fit.beta_fit - beta).abs(),
        gamma: gamma_distance(fit.gamma_fit, gamma, pred.gamma_mod),
        gamma_mod: pred.gamma_mod,
    })
}

/// JSON summary of a fit.
pub fn to_json(fit: &AsymptoticFit) -> String {
    serde_json::to_string_pretty(fit).expect("fit serializes")
}
