//! The separatrix `a = 1/π`: regime classification, bisection for the
//! critical parameter, and the bounded solution approaching `π/2`.

use std::f64::consts::{FRAC_1_PI, FRAC_PI_2};
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{rhs, solve_ivp};
use crate::ode::{integrate, Settings};
use crate::seriesseed::{eval_seed, series_coefficients, DEFAULT_ORDER, DEFAULT_X0};

/// `|Φ'|` threshold separating the two families from the separatrix.
pub const SLOPE_THRESHOLD: f64 = 0.5;
/// Upper limit for the escalated horizon.
pub const X_CAP: f64 = 3200.0;
/// Largest tolerated shift of the departure point between the two
/// tolerance runs.
pub const DEPARTURE_TOL: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    SubcriticalB,
    SupercriticalA,
    Undecided,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::SubcriticalB => "subcritical_B",
            Label::SupercriticalA => "supercritical_A",
            Label::Undecided => "undecided",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeClassification {
    pub a: f64,
    pub label: Label,
    pub x_used: f64,
    /// `(Φ(X), Φ'(X))`.
    pub witness: (f64, f64),
}

struct Probe {
    label: Label,
    witness: (f64, f64),
    departure: f64,
}

fn probe(a: f64, x: f64, tol: f64) -> Result<Probe> {
    let tr = solve_ivp(a, x, tol)?;
    let n = tr.xs.len() - 1;
    let (phi, dphi) = (tr.phis[n], tr.dphis[n]);
    let label = if dphi > SLOPE_THRESHOLD && phi > FRAC_PI_2 {
        Label::SubcriticalB
    } else if dphi < -SLOPE_THRESHOLD {
        Label::SupercriticalA
    } else {
        Label::Undecided
    };
    let departure = match tr.dphis.iter().rposition(|d| d.abs() <= SLOPE_THRESHOLD) {
        Some(i) if i < n => {
            let excess = |x: f64| tr.interpolate(x).map(|v| v.1.abs() - SLOPE_THRESHOLD);
            let (mut lo, mut hi) = (tr.xs[i], tr.xs[i + 1]);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if excess(mid)? <= 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        }
        Some(i) => tr.xs[i],
        None => tr.xs[0],
    };
    Ok(Probe { label, witness: (phi, dphi), departure })
}

/// Labels the solution by its slope at `X`. The run is repeated at `tol/100`;
/// if the two disagree in label or in where `Φ'` leaves `[−0.5, 0.5]`, the
/// departure is driven by integration error and the label is `Undecided`.
/// Runs still inside the band at `X` are retried with `X` doubled up to
/// [`X_CAP`].
pub fn classify(a: f64, x: f64, tol: f64) -> Result<RegimeClassification> {
    if !(x >= 50.0) {
        return Err(Error::InvalidArgument(format!("classification horizon must be >= 50, got {x}")));
    }
    let fine = (tol / 100.0).max(1e-14);
    let mut xu = x;
    loop {
        let p = probe(a, xu, tol)?;
        let q = probe(a, xu, fine)?;
        let agree = p.label == q.label && (p.departure - q.departure).abs() <= DEPARTURE_TOL;
        let label = if agree { q.label } else { Label::Undecided };
        let inside = p.label == Label::Undecided && q.label == Label::Undecided;
        if label != Label::Undecided || !inside || xu >= X_CAP {
            return Ok(RegimeClassification { a, label, x_used: xu, witness: q.witness });
        }
        xu = (2.0 * xu).min(X_CAP);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BisectionStep {
    pub iter: usize,
    pub a_lo: f64,
    pub a_hi: f64,
    pub label: Label,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalSearch {
    pub a_star: f64,
    pub x_max_used: f64,
    pub trace: Vec<BisectionStep>,
}

impl CriticalSearch {
    /// CSV `iter,a_lo,a_hi,label`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "iter,a_lo,a_hi,label")?;
        for s in &self.trace {
            writeln!(w, "{},{:.16e},{:.16e},{}", s.iter, s.a_lo, s.a_hi, s.label.as_str())?;
        }
        Ok(())
    }
}

/// Integration tolerance used by the bisection.
pub const BISECTION_TOL: f64 = 1e-10;

/// Bisection on the label. An undecided midpoint is indistinguishable from
/// the separatrix at working precision and is returned as the result.
pub fn locate_critical(a_lo: f64, a_hi: f64, x: f64, bisection_tol: f64) -> Result<CriticalSearch> {
    if !(a_lo < a_hi) || !(bisection_tol > 0.0) {
        return Err(Error::InvalidArgument(format!("bad bracket ({a_lo}, {a_hi}) or tolerance {bisection_tol}")));
    }
    let lo = classify(a_lo, x, BISECTION_TOL)?;
    let hi = classify(a_hi, x, BISECTION_TOL)?;
    if lo.label != Label::SubcriticalB || hi.label != Label::SupercriticalA {
        return Err(Error::Bracketing(format!(
            "({a_lo}, {a_hi}) classify as ({}, {})",
            lo.label.as_str(),
            hi.label.as_str()
        )));
    }
    let (mut a, mut b) = (a_lo, a_hi);
    let mut x_max_used = lo.x_used.max(hi.x_used);
    let mut trace = vec![BisectionStep { iter: 0, a_lo: a, a_hi: b, label: Label::Undecided }];
    let mut iter = 0;
    while b - a > bisection_tol {
        iter += 1;
        let mid = 0.5 * (a + b);
        let c = classify(mid, x, BISECTION_TOL)?;
        x_max_used = x_max_used.max(c.x_used);
        match c.label {
            Label::SubcriticalB => a = mid,
            Label::SupercriticalA => b = mid,
            Label::Undecided => {
                trace.push(BisectionStep { iter, a_lo: mid, a_hi: mid, label: c.label });
                return Ok(CriticalSearch { a_star: mid, x_max_used, trace });
            }
        }
        trace.push(BisectionStep { iter, a_lo: a, a_hi: b, label: c.label });
    }
    Ok(CriticalSearch { a_star: 0.5 * (a + b), x_max_used, trace })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitReport {
    /// Parameter of the bounded solution found by the boundary-value solve.
    pub a: f64,
    /// `|a − 1/π|`.
    pub a_defect: f64,
    pub x: f64,
    pub phi_x: f64,
    /// `|Φ(X) − π/2|`.
    pub limit_defect: f64,
    /// Smallest `Φ'` seen on `[1, X]`.
    pub min_dphi: f64,
    pub newton_iters: usize,
    /// Infinity norm of the final shooting residual.
    pub residual: f64,
}

const SHOOT_TOL: f64 = 1e-13;

fn settings() -> Settings {
    Settings { rtol: SHOOT_TOL, atol: SHOOT_TOL, h_max: 0.25, max_steps: 1_000_000 }
}

/// Flow of the ODE from `x0` to `x1` with its 2×2 sensitivity matrix.
fn flow(x0: f64, s: [f64; 2], x1: f64, mut observe: impl FnMut(f64, f64)) -> Result<([f64; 2], [[f64; 2]; 2])> {
    let mut f = |x: f64, y: &[f64; 6]| {
        let (p, dp) = (y[0], y[1]);
        let (sn, cs) = p.sin_cos();
        let fp = -(dp * dp - 1.0) / (sn * sn);
        let fd = 2.0 * dp * cs / sn - 1.0 / x;
        [
            dp,
            rhs(x, p, dp),
            y[4],
            y[5],
            fp * y[2] + fd * y[4],
            fp * y[3] + fd * y[5],
        ]
    };
    let y0 = [s[0], s[1], 1.0, 0.0, 0.0, 1.0];
    let y = integrate(&mut f, x0, y0, x1, settings(), |_| f64::INFINITY, |x, y, _| observe(x, y[1]))?;
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::IntegrationFailure { x: x1, reason: "non-finite shooting state".into() });
    }
    Ok(([y[0], y[1]], [[y[2], y[3]], [y[4], y[5]]]))
}

fn seed(a: f64) -> Result<[f64; 2]> {
    let s = eval_seed(&series_coefficients(a, DEFAULT_ORDER)?, DEFAULT_X0)?;
    Ok([s.phi, s.dphi])
}

/// Bounded solution on `[x0, X]` by multiple shooting with unit segments.
/// Unknowns are `a` and the nodal states; the right boundary removes the
/// growing mode about `π/2` through `(Φ − π/2) + Φ' = −1/X + 1/X²`. The
/// returned `a` is compared with `1/π`.
pub fn limit_check(x_end: f64) -> Result<LimitReport> {
    if !(x_end >= 100.0) || x_end.fract() != 0.0 {
        return Err(Error::InvalidArgument(format!("horizon must be an integer >= 100, got {x_end}")));
    }
    let m = x_end as usize;
    let nodes: Vec<f64> = (1..=m).map(|j| j as f64).collect();
    let n = 2 * m + 1;
    let mut z = DVector::zeros(n);
    z[0] = FRAC_1_PI;
    let guide = solve_ivp(FRAC_1_PI, 20.0, 1e-12)?;
    for (j, &x) in nodes.iter().enumerate() {
        let (p, dp) = if x <= 20.0 {
            let (p, dp, _) = guide.dense_eval(x)?;
            (p, dp)
        } else {
            (FRAC_PI_2 - 1.0 / x - 2.0 / x.powi(3), 1.0 / (x * x) + 6.0 / x.powi(4))
        };
        z[1 + 2 * j] = p;
        z[2 + 2 * j] = dp;
    }
    let bc = -1.0 / x_end + 1.0 / (x_end * x_end);
    let mut iters = 0;
    let (res_norm, min_dphi) = loop {
        iters += 1;
        let mut r = DVector::zeros(n);
        let mut jac = DMatrix::zeros(n, n);
        let mut md = f64::INFINITY;
        let a = z[0];
        let da = 1e-7;
        let (sp, sm) = (seed(a + da)?, seed(a - da)?);
        let ds = [(sp[0] - sm[0]) / (2.0 * da), (sp[1] - sm[1]) / (2.0 * da)];
        for j in 0..m {
            let (x0, s0) = if j == 0 { (DEFAULT_X0, seed(a)?) } else { (nodes[j - 1], [z[2 * j - 1], z[2 * j]]) };
            let (end, mat) = flow(x0, s0, nodes[j], |x, dp| {
                if x >= 1.0 {
                    md = md.min(dp);
                }
            })?;
            let row = 2 * j;
            for i in 0..2 {
                r[row + i] = end[i] - z[1 + 2 * j + i];
                jac[(row + i, 1 + 2 * j + i)] = -1.0;
                if j == 0 {
                    jac[(row + i, 0)] = mat[i][0] * ds[0] + mat[i][1] * ds[1];
                } else {
                    jac[(row + i, 2 * j - 1)] = mat[i][0];
                    jac[(row + i, 2 * j)] = mat[i][1];
                }
            }
        }
        r[n - 1] = (z[n - 2] - FRAC_PI_2) + z[n - 1] - bc;
        jac[(n - 1, n - 2)] = 1.0;
        jac[(n - 1, n - 1)] = 1.0;
        let res_norm = r.amax();
        if res_norm < 1e-12 || iters > 30 {
            break (res_norm, md);
        }
        let step = jac
            .lu()
            .solve(&(-&r))
            .ok_or_else(|| Error::Singular("shooting Jacobian".into()))?;
        z += &step;
        if step.amax() < 1e-15 {
            break (res_norm, md);
        }
    };
    if !(res_norm < 1e-9) {
        return Err(Error::IntegrationFailure { x: x_end, reason: format!("shooting did not converge, residual {res_norm:e}") });
    }
    let phi_x = z[n - 2];
    Ok(LimitReport {
        a: z[0],
        a_defect: (z[0] - FRAC_1_PI).abs(),
        x: x_end,
        phi_x,
        limit_defect: (phi_x - FRAC_PI_2).abs(),
        min_dphi,
        newton_iters: iters,
        residual: res_norm,
    })
}
