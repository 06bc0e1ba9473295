//! Integration of `Φ'' = (Φ'² − 1) cot Φ + (1 − Φ')/x` from the series seed.
//!
//! Away from `Φ = kπ` the state is `(Φ, Φ')`. Close to a crossing the
//! right-hand side is singular although the solution is smooth, so the
//! integrator switches to a regular chart:
//!
//! * slope `+1`: `G = (Φ' − 1)/sin²Φ`, with
//!   `G' = −(G²/2) sin 2Φ − G/x`;
//! * slope `−1`: `K = (Φ' + 1 − sin 2Φ/x)/sin²Φ`, with
//!   `K' = −(K²/2) sin 2Φ − (2K cos 2Φ + K)/x + 2 sin 2Φ/x²`.
//!
//! Both are analytic through `sin Φ = 0`. The crossing point itself is made a
//! node with `Φ = kπ` exactly, and the local Taylor series there is stored.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{dopri_step, Controller};
use crate::powser;
use crate::seriesseed::{self, solve_linear_coeff};

/// `|sin Φ|` below which `Φ''` is taken from the crossing series.
pub const DELTA_SING: f64 = 1e-3;
/// Number of Taylor coefficients kept in a crossing expansion (through `h^8`).
pub const VAULT_ORDER: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub seed_x0: f64,
    pub series_order: usize,
    /// `|sin Φ|` at which the chart takes over when approaching a crossing.
    pub chart_band: f64,
    pub max_dphi: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            seed_x0: seriesseed::DEFAULT_X0,
            series_order: seriesseed::DEFAULT_ORDER,
            chart_band: 0.1,
            max_dphi: 1e3,
            h_max: 0.5,
            max_steps: 5_000_000,
        }
    }
}

/// Local series of `ψ = Φ − kπ` about a crossing `x*`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VaultExpansion {
    pub x_star: f64,
    pub k: i64,
    pub eps: i32,
    /// `taylor[j]` multiplies `(x − x*)^j`; `taylor[0] = 0`, `taylor[1] = eps`.
    pub taylor: Vec<f64>,
}

impl VaultExpansion {
    pub fn phi(&self, x: f64) -> f64 {
        self.k as f64 * PI + powser::eval(&self.taylor, x - self.x_star)
    }

    pub fn dphi(&self, x: f64) -> f64 {
        powser::eval_deriv(&self.taylor, x - self.x_star)
    }

    pub fn ddphi(&self, x: f64) -> f64 {
        powser::eval_deriv2(&self.taylor, x - self.x_star)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionTrajectory {
    pub a: f64,
    pub xs: Vec<f64>,
    pub phis: Vec<f64>,
    pub dphis: Vec<f64>,
    /// `Φ''` at the nodes (from the ODE, or from the chart near crossings).
    pub ddphis: Vec<f64>,
    pub crossings: Vec<VaultExpansion>,
    pub tol: f64,
    pub seed_x0: f64,
}

/// Right-hand side of the ODE in the factored form.
pub fn rhs(x: f64, phi: f64, dphi: f64) -> f64 {
    let (s, c) = phi.sin_cos();
    (dphi - 1.0) * (dphi + 1.0) * c / s + (1.0 - dphi) / x
}

pub fn ode_residual(x: f64, phi: f64, dphi: f64, ddphi: f64) -> f64 {
    ddphi - rhs(x, phi, dphi)
}

/// Third derivative obtained by differentiating the ODE.
pub fn third_derivative(x: f64, phi: f64, dphi: f64, ddphi: f64) -> f64 {
    let (s, c) = phi.sin_cos();
    let cot = c / s;
    2.0 * dphi * ddphi * cot - (dphi * dphi - 1.0) * dphi / (s * s) - ddphi / x
        - (1.0 - dphi) / (x * x)
}

fn chart_rhs(eps: i32, x: f64, y: &[f64; 2]) -> [f64; 2] {
    let (phi, w) = (y[0], y[1]);
    let (s, c) = phi.sin_cos();
    let s2 = 2.0 * s * c;
    if eps > 0 {
        [1.0 + w * s * s, -0.5 * w * w * s2 - w / x]
    } else {
        let c2 = c * c - s * s;
        [
            -1.0 + s2 / x + w * s * s,
            -0.5 * w * w * s2 - (2.0 * w * c2 + w) / x + 2.0 * s2 / (x * x),
        ]
    }
}

fn to_chart(eps: i32, x: f64, phi: f64, dphi: f64) -> f64 {
    let s = phi.sin();
    if eps > 0 {
        (dphi - 1.0) / (s * s)
    } else {
        (dphi + 1.0 - (2.0 * phi).sin() / x) / (s * s)
    }
}

/// `(Φ', Φ'')` from a chart state.
fn from_chart(eps: i32, x: f64, y: &[f64; 2]) -> (f64, f64) {
    let (phi, w) = (y[0], y[1]);
    let (s, c) = phi.sin_cos();
    let s2 = 2.0 * s * c;
    let d = chart_rhs(eps, x, y);
    let dphi = d[0];
    let ddphi = if eps > 0 {
        d[1] * s * s + w * s2 * dphi
    } else {
        let c2 = c * c - s * s;
        2.0 * c2 * dphi / x - s2 / (x * x) + d[1] * s * s + w * s2 * dphi
    };
    (dphi, ddphi)
}

/// Taylor coefficients of `ψ = Φ − kπ` about a crossing at `x_star` with
/// slope `eps`. The cubic coefficient is free (it equals one third of the
/// chart variable at the crossing); all others follow from power matching.
pub fn crossing_coefficients(x_star: f64, eps: i32, c3: f64, order: usize) -> Vec<f64> {
    let mut c = vec![0.0; order.max(3) + 1];
    c[1] = eps as f64;
    solve_linear_coeff(&mut c, 2, x_star, 1);
    c[3] = c3;
    for n in 4..=order {
        solve_linear_coeff(&mut c, n, x_star, n - 1);
    }
    c.truncate(order + 1);
    c
}

/// Builds the crossing expansion from a state close to `Φ = kπ`: the chart
/// system is integrated to the crossing and the free cubic coefficient is read
/// off there.
pub fn vault(x: f64, phi: f64, dphi: f64, tol: f64) -> Result<VaultExpansion> {
    let s = phi.sin();
    if s.abs() >= DELTA_SING || (dphi.abs() - 1.0).abs() > 1e-2 {
        return Err(Error::InvalidArgument(format!(
            "vault needs |sin phi| < {DELTA_SING} and |phi'| within 1e-2 of 1 (got sin = {s}, phi' = {dphi})"
        )));
    }
    let eps = if dphi > 0.0 { 1 } else { -1 };
    let k = (phi / PI).round() as i64;
    let target = k as f64 * PI;
    let mut f = |xx: f64, y: &[f64; 2]| chart_rhs(eps, xx, y);
    let mut xc = x;
    let mut y = [phi, to_chart(eps, x, phi, dphi)];
    for _ in 0..4 {
        let d = f(xc, &y);
        let h = -(y[0] - target) / d[0];
        if h == 0.0 {
            break;
        }
        let k1 = d;
        y = dopri_step(&mut f, xc, &y, &k1, h).y;
        xc += h;
    }
    let (dphi_star, _) = from_chart(eps, xc, &[target, y[1]]);
    if (dphi_star - eps as f64).abs() > 1e-3 || !y[1].is_finite() {
        return Err(Error::InconsistentCrossing { x: xc, dphi: dphi_star });
    }
    let _ = tol;
    Ok(VaultExpansion {
        x_star: xc,
        k,
        eps,
        taylor: crossing_coefficients(xc, eps, y[1] / 3.0, VAULT_ORDER),
    })
}

#[derive(Clone, Copy, PartialEq)]
enum Mode {
    Direct,
    Chart { eps: i32, k: i64, crossed: bool },
}

fn mode_rhs(mode: Mode, x: f64, y: &[f64; 2]) -> [f64; 2] {
    match mode {
        Mode::Direct => [y[1], rhs(x, y[0], y[1])],
        Mode::Chart { eps, .. } => chart_rhs(eps, x, y),
    }
}

fn physical(mode: Mode, x: f64, y: &[f64; 2]) -> (f64, f64, f64) {
    match mode {
        Mode::Direct => (y[0], y[1], rhs(x, y[0], y[1])),
        Mode::Chart { eps, .. } => {
            let (d, dd) = from_chart(eps, x, y);
            (y[0], d, dd)
        }
    }
}

/// Quintic Hermite interpolation on one interval; returns `(p, p', p'')`.
fn hermite5(x0: f64, n0: (f64, f64, f64), x1: f64, n1: (f64, f64, f64), x: f64) -> (f64, f64, f64) {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let (p0, m0, a0) = (n0.0, h * n0.1, h * h * n0.2);
    let (p1, m1, a1) = (n1.0, h * n1.1, h * h * n1.2);
    let big_a = p1 - p0 - m0 - 0.5 * a0;
    let big_b = m1 - m0 - a0;
    let big_c = a1 - a0;
    let c3 = 10.0 * big_a - 4.0 * big_b + 0.5 * big_c;
    let c4 = -15.0 * big_a + 7.0 * big_b - big_c;
    let c5 = 6.0 * big_a - 3.0 * big_b + 0.5 * big_c;
    let p = p0 + t * (m0 + t * (0.5 * a0 + t * (c3 + t * (c4 + t * c5))));
    let dp = m0 + t * (a0 + t * (3.0 * c3 + t * (4.0 * c4 + t * 5.0 * c5)));
    let ddp = a0 + t * (6.0 * c3 + t * (12.0 * c4 + t * 20.0 * c5));
    (p, dp / h, ddp / (h * h))
}

struct Builder {
    tr: SolutionTrajectory,
}

impl Builder {
    fn push(&mut self, x: f64, n: (f64, f64, f64)) {
        self.tr.xs.push(x);
        self.tr.phis.push(n.0);
        self.tr.dphis.push(n.1);
        self.tr.ddphis.push(n.2);
    }
}

pub fn solve_ivp(a: f64, x_max: f64, tol: f64) -> Result<SolutionTrajectory> {
    solve_ivp_with(a, x_max, tol, &SolveOptions::default())
}

pub fn solve_ivp_with(a: f64, x_max: f64, tol: f64, opts: &SolveOptions) -> Result<SolutionTrajectory> {
    if !a.is_finite() {
        return Err(Error::InvalidArgument(format!("a must be finite, got {a}")));
    }
    if !(1e-14..=1e-6).contains(&tol) {
        return Err(Error::InvalidArgument(format!("tol must lie in [1e-14, 1e-6], got {tol}")));
    }
    let x0 = opts.seed_x0;
    if !(x_max > x0) || !x_max.is_finite() {
        return Err(Error::InvalidArgument(format!("x_max = {x_max} must exceed the seed point {x0}")));
    }
    let series = seriesseed::series_coefficients(a, opts.series_order)?;
    let seed = seriesseed::eval_seed(&series, x0)?;

    let mut b = Builder {
        tr: SolutionTrajectory {
            a,
            xs: Vec::new(),
            phis: Vec::new(),
            dphis: Vec::new(),
            ddphis: Vec::new(),
            crossings: Vec::new(),
            tol,
            seed_x0: x0,
        },
    };
    let mut mode = Mode::Direct;
    let mut x = x0;
    let mut y = [seed.phi, seed.dphi];
    let mut node = physical(mode, x, &y);
    b.push(x, node);
    let mut k1 = mode_rhs(mode, x, &y);
    let mut ctl = Controller::new(tol, tol);
    let mut h = 0.1 * x0;
    let mut steps = 0usize;

    while x < x_max {
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::IntegrationFailure { x, reason: "step budget exhausted".into() });
        }
        h = h.min(opts.h_max);
        let last = x + h >= x_max;
        let ht = if last { x_max - x } else { h };
        if ht <= 1e-14 * x.max(1.0) {
            return Err(Error::IntegrationFailure { x, reason: "step size underflow".into() });
        }
        let mut f = |xx: f64, yy: &[f64; 2]| mode_rhs(mode, xx, yy);
        let st = dopri_step(&mut f, x, &y, &k1, ht);
        let en = ctl.norm(&y, &st.y, &st.err);
        if !(en <= 1.0) {
            h = ctl.reject(ht, en);
            continue;
        }
        if mode == Mode::Direct {
            let (k0, k1_) = ((y[0] / PI).floor(), (st.y[0] / PI).floor());
            if k0 != k1_ {
                // the step jumps over Φ = kπ; shorten it to land in the chart band
                let level = if st.y[0] > y[0] { k1_ } else { k0 } * PI;
                let frac = ((level - y[0]).abs() - 0.5 * opts.chart_band) / (st.y[0] - y[0]).abs();
                h = ht * frac.clamp(0.01, 0.9);
                continue;
            }
        }
        let xn = if last { x_max } else { x + ht };
        let nn = physical(mode, xn, &st.y);

        if let Mode::Chart { eps, k, crossed: false } = mode {
            let target = k as f64 * PI;
            let psi0 = y[0] - target;
            let psi1 = st.y[0] - target;
            if psi1 == 0.0 || psi0.signum() != psi1.signum() {
                // crossing inside (x, xn): locate it on the interpolant, then
                // step there exactly
                let (mut lo, mut hi) = (x, xn);
                let mut xs_ = x - psi0 / node.1;
                for _ in 0..60 {
                    if !(xs_ > lo && xs_ < hi) {
                        xs_ = 0.5 * (lo + hi);
                    }
                    let (p, dp, _) = hermite5(x, node, xn, nn, xs_);
                    let r = p - target;
                    if r == 0.0 || hi - lo < 1e-15 * xs_ {
                        break;
                    }
                    if r.signum() == psi0.signum() {
                        lo = xs_;
                    } else {
                        hi = xs_;
                    }
                    xs_ -= r / dp;
                }
                let mut hs = xs_ - x;
                let mut yc = y;
                for _ in 0..3 {
                    yc = dopri_step(&mut f, x, &y, &k1, hs).y;
                    let d = chart_rhs(eps, x + hs, &yc)[0];
                    let corr = -(yc[0] - target) / d;
                    if corr.abs() < 1e-16 * (x + hs) {
                        break;
                    }
                    hs += corr;
                }
                let x_star = x + hs;
                yc[0] = target;
                let cn = physical(mode, x_star, &yc);
                if (cn.1 - eps as f64).abs() > 1e-6 || !yc[1].is_finite() {
                    return Err(Error::InconsistentCrossing { x: x_star, dphi: cn.1 });
                }
                b.tr.crossings.push(VaultExpansion {
                    x_star,
                    k,
                    eps,
                    taylor: crossing_coefficients(x_star, eps, yc[1] / 3.0, VAULT_ORDER),
                });
                mode = Mode::Chart { eps, k, crossed: true };
                x = x_star;
                y = yc;
                node = cn;
                b.push(x, node);
                k1 = mode_rhs(mode, x, &y);
                continue;
            }
        }

        x = xn;
        y = st.y;
        k1 = st.dy;
        node = nn;
        b.push(x, node);
        h = ctl.accept(ht, en);
        if !node.1.is_finite() || node.1.abs() > opts.max_dphi {
            return Err(Error::BlowUp { x, dphi: node.1 });
        }

        let (s, c) = node.0.sin_cos();
        let approaching = s * c * node.1 < 0.0;
        match mode {
            Mode::Direct => {
                if s.abs() < opts.chart_band && approaching {
                    let eps = if node.1 > 0.0 { 1 } else { -1 };
                    if (node.1 - eps as f64).abs() > 0.5 {
                        return Err(Error::InconsistentCrossing { x, dphi: node.1 });
                    }
                    mode = Mode::Chart { eps, k: (node.0 / PI).round() as i64, crossed: false };
                    y = [node.0, to_chart(eps, x, node.0, node.1)];
                    k1 = mode_rhs(mode, x, &y);
                }
            }
            Mode::Chart { crossed, .. } => {
                if s.abs() > opts.chart_band && (crossed || !approaching) {
                    mode = Mode::Direct;
                    y = [node.0, node.1];
                    k1 = mode_rhs(mode, x, &y);
                }
            }
        }
    }
    Ok(b.tr)
}

impl SolutionTrajectory {
    pub fn x_max(&self) -> f64 {
        *self.xs.last().expect("trajectory has nodes")
    }

    fn segment(&self, x: f64) -> Result<usize> {
        let (lo, hi) = (self.seed_x0, self.x_max());
        if !(x >= lo && x <= hi) {
            return Err(Error::OutOfRange(format!("x = {x} outside trajectory range [{lo}, {hi}]")));
        }
        let i = self.xs.partition_point(|&v| v <= x);
        Ok(i.saturating_sub(1).min(self.xs.len() - 2))
    }

    fn node(&self, i: usize) -> (f64, f64, f64) {
        (self.phis[i], self.dphis[i], self.ddphis[i])
    }

    /// Raw Hermite interpolant `(Φ, Φ', Φ'')`.
    pub fn interpolate(&self, x: f64) -> Result<(f64, f64, f64)> {
        let i = self.segment(x)?;
        if x == self.xs[i] {
            return Ok(self.node(i));
        }
        if x == self.xs[i + 1] {
            return Ok(self.node(i + 1));
        }
        Ok(hermite5(self.xs[i], self.node(i), self.xs[i + 1], self.node(i + 1), x))
    }

    /// `(Φ, Φ', Φ'')` at `x`; `Φ''` is recomputed from the ODE unless
    /// `|sin Φ| < DELTA_SING`, where the crossing series supplies it.
    pub fn dense_eval(&self, x: f64) -> Result<(f64, f64, f64)> {
        let i = self.segment(x)?;
        for j in [i, i + 1] {
            if x == self.xs[j] {
                return Ok(self.node(j));
            }
        }
        let (p, dp, _) = hermite5(self.xs[i], self.node(i), self.xs[i + 1], self.node(i + 1), x);
        if p.sin().abs() >= DELTA_SING {
            return Ok((p, dp, rhs(x, p, dp)));
        }
        let near = self
            .crossings
            .iter()
            .min_by(|u, v| (u.x_star - x).abs().total_cmp(&(v.x_star - x).abs()));
        match near {
            Some(v) => Ok((p, dp, v.ddphi(x))),
            None => Ok((p, dp, rhs(x, p, dp))),
        }
    }

    /// CSV with header `x,phi,dphi`, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "x,phi,dphi")?;
        for i in 0..self.xs.len() {
            writeln!(w, "{:.16e},{:.16e},{:.16e}", self.xs[i], self.phis[i], self.dphis[i])?;
        }
        Ok(())
    }
}
