//! The chain `Φ → y(s) → w(t) → h(τ)` with pointwise residuals of the
//! fifth and third Painlevé equations.
//!
//! Conventions: `s = x/2`, `t = −is`, `τ = t²/2 = −x²/8`, `y = e^{−2iΦ}`,
//! `√y = e^{−iΦ}`, `p = (√y+1)/(√y−1) = i cot(Φ/2)`, `w = −p` and
//! `h = 1 + 2 sin²(Φ/2)/(Φ'−1)`.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{crossing_coefficients, third_derivative, SolutionTrajectory, VaultExpansion};
use crate::powser;

/// Points with `|sin Φ|` (or `|sin(Φ/2)|`, `|cos(Φ/2)|`) below this are excluded.
pub const EXCLUSION_MARGIN: f64 = 1e-3;
/// `|Φ'−1|` below this makes `h` singular.
pub const H_SINGULAR_TOL: f64 = 1e-8;
const H_MARGIN: f64 = 1e-6;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Jet `(x, Φ, Φ', Φ'', Φ''')` at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State {
    pub x: f64,
    pub phi: f64,
    pub dphi: f64,
    pub ddphi: f64,
    pub dddphi: f64,
}

impl State {
    /// State on a trajectory with `Φ'''` from the differentiated ODE.
    pub fn on(traj: &SolutionTrajectory, x: f64) -> Result<State> {
        let (phi, dphi, ddphi) = traj.dense_eval(x)?;
        let dddphi = third_derivative(x, phi, dphi, ddphi);
        Ok(State { x, phi, dphi, ddphi, dddphi })
    }

    /// `Φ + ε sin x` with matching derivatives.
    pub fn perturbed(self, eps: f64) -> State {
        let (s, c) = self.x.sin_cos();
        State {
            phi: self.phi + eps * s,
            dphi: self.dphi + eps * c,
            ddphi: self.ddphi - eps * s,
            dddphi: self.dddphi - eps * c,
            ..self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransformPoint {
    pub x: f64,
    pub phi: f64,
    pub dphi: f64,
    pub ddphi: f64,
    pub y: Complex64,
    pub w: Complex64,
    pub h: f64,
    pub tau: f64,
    pub s: f64,
}

pub fn chain_point(traj: &SolutionTrajectory, x: f64) -> Result<TransformPoint> {
    point_from_state(&State::on(traj, x)?)
}

pub fn point_from_state(st: &State) -> Result<TransformPoint> {
    if (st.dphi - 1.0).abs() <= H_SINGULAR_TOL {
        return Err(Error::HSingular { x: st.x });
    }
    let half = st.phi / 2.0;
    Ok(TransformPoint {
        x: st.x,
        phi: st.phi,
        dphi: st.dphi,
        ddphi: st.ddphi,
        y: Complex64::from_polar(1.0, -2.0 * st.phi),
        w: -p_of(st.phi),
        h: 1.0 + 2.0 * half.sin().powi(2) / (st.dphi - 1.0),
        tau: -st.x * st.x / 8.0,
        s: st.x / 2.0,
    })
}

/// `(√y+1)/(√y−1)` with `√y = e^{−iΦ}`.
pub fn p_of(phi: f64) -> Complex64 {
    let r = Complex64::from_polar(1.0, -phi);
    (r + 1.0) / (r - 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Equation {
    PV4,
    PIII6,
    PV8,
    Pair7,
}

/// Absolute and relative size of a defect; the relative value divides by
/// the largest term of the equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Defect {
    pub abs: f64,
    pub rel: f64,
}

/// Pointwise defects on a grid; `None` marks an excluded point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub equation: Equation,
    pub grid: Vec<f64>,
    /// `|defect|`.
    pub residuals: Vec<Option<f64>>,
    pub relative: Vec<Option<f64>>,
    pub norm: f64,
    pub rel_norm: f64,
}

impl ResidualReport {
    fn build(equation: Equation, grid: &[f64], defects: Vec<Option<Defect>>) -> ResidualReport {
        let residuals: Vec<Option<f64>> = defects.iter().map(|d| d.map(|d| d.abs)).collect();
        let relative: Vec<Option<f64>> = defects.iter().map(|d| d.map(|d| d.rel)).collect();
        let max = |v: &[Option<f64>]| v.iter().flatten().fold(0.0, |m: f64, &r| m.max(r));
        ResidualReport {
            equation,
            grid: grid.to_vec(),
            norm: max(&residuals),
            rel_norm: max(&relative),
            residuals,
            relative,
        }
    }

    pub fn excluded(&self) -> usize {
        self.residuals.iter().filter(|r| r.is_none()).count()
    }

    /// CSV `x,residual` of absolute defects, excluded points written as `nan`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "x,residual")?;
        for (x, r) in self.grid.iter().zip(&self.residuals) {
            match r {
                Some(r) => writeln!(w, "{x:.16e},{r:.16e}")?,
                None => writeln!(w, "{x:.16e},nan")?,
            }
        }
        Ok(())
    }
}

fn rel(defect: Complex64, terms: &[Complex64]) -> Defect {
    let scale = terms.iter().fold(0.0, |m: f64, t| m.max(t.norm()));
    Defect { abs: defect.norm(), rel: defect.norm() / scale.max(f64::MIN_POSITIVE) }
}

/// Relative defect of `y'' = (1/(2y)+1/(y−1))y'² − y'/s − 4iy/s + 8y(y+1)/(y−1)`
/// in the variable `s`.
pub fn pv4_defect(st: &State) -> Option<Defect> {
    if st.phi.sin().abs() < EXCLUSION_MARGIN {
        return None;
    }
    let y = Complex64::from_polar(1.0, -2.0 * st.phi);
    let s = st.x / 2.0;
    let ys = 2.0 * (-2.0 * I * st.dphi) * y;
    let yss = 4.0 * (-2.0 * I * st.ddphi - 4.0 * st.dphi * st.dphi) * y;
    let terms = [
        yss,
        (1.0 / (2.0 * y) + 1.0 / (y - 1.0)) * ys * ys,
        -ys / s,
        -4.0 * I * y / s,
        8.0 * y * (y + 1.0) / (y - 1.0),
    ];
    let defect = terms[0] - terms[1..].iter().sum::<Complex64>();
    Some(rel(defect, &terms))
}

/// `(w, dw/dt, d²w/dt²)` along `t = −ix/2` for `w = −i cot(Φ/2)`.
fn w_jet(st: &State) -> (Complex64, Complex64, Complex64) {
    let (sh, ch) = (st.phi / 2.0).sin_cos();
    let csc2 = 1.0 / (sh * sh);
    let w = Complex64::new(0.0, -ch / sh);
    let wx = 0.5 * I * csc2 * st.dphi;
    let wxx = 0.5 * I * csc2 * (st.ddphi - ch / sh * st.dphi * st.dphi);
    (w, 2.0 * I * wx, -4.0 * wxx)
}

fn piii_terms(w: Complex64, wt: Complex64, wtt: Complex64, t: Complex64, sign: f64) -> [Complex64; 6] {
    [wtt, wt * wt / w, -wt / t, sign * (w * w - 1.0) / t, w * w * w, -1.0 / w]
}

fn piii_excluded(st: &State) -> bool {
    let (sh, ch) = (st.phi / 2.0).sin_cos();
    sh.abs() < EXCLUSION_MARGIN || ch.abs() < EXCLUSION_MARGIN
}

/// Relative defect of `w'' = w'²/w − w'/t + (w²−1)/t + w³ − 1/w`.
pub fn piii6_defect(st: &State) -> Option<Defect> {
    if piii_excluded(st) {
        return None;
    }
    let (w, wt, wtt) = w_jet(st);
    let terms = piii_terms(w, wt, wtt, Complex64::new(0.0, -st.x / 2.0), 1.0);
    Some(rel(terms[0] - terms[1..].iter().sum::<Complex64>(), &terms))
}

/// Complex defect of `p'' = p'²/p − p'/t − (p²−1)/t + p³ − 1/p` for `p = −w`.
pub fn piii5_raw(st: &State) -> Complex64 {
    let (w, wt, wtt) = w_jet(st);
    let t = piii_terms(-w, -wt, -wtt, Complex64::new(0.0, -st.x / 2.0), -1.0);
    t[0] - t[1..].iter().sum::<Complex64>()
}

/// Complex defect of the `w` equation, unscaled.
pub fn piii6_raw(st: &State) -> Complex64 {
    let (w, wt, wtt) = w_jet(st);
    let t = piii_terms(w, wt, wtt, Complex64::new(0.0, -st.x / 2.0), 1.0);
    t[0] - t[1..].iter().sum::<Complex64>()
}

/// `h` with its first two `τ` derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HJet {
    pub h: f64,
    pub h_tau: f64,
    pub h_tautau: f64,
}

impl HJet {
    fn from_x(x: f64, h: f64, hx: f64, hxx: f64) -> HJet {
        HJet { h, h_tau: -4.0 * hx / x, h_tautau: 16.0 * hxx / (x * x) - 16.0 * hx / (x * x * x) }
    }
}

/// `h` jet in closed form from `(Φ, Φ', Φ'', Φ''')`.
pub fn h_jet(st: &State) -> HJet {
    let (s, c) = st.phi.sin_cos();
    let n = 1.0 - c;
    let d = st.dphi - 1.0;
    let num = s * st.dphi * d - n * st.ddphi;
    let hx = num / (d * d);
    let dnum = c * st.dphi * st.dphi * d + s * st.ddphi * d - n * st.dddphi;
    let hxx = dnum / (d * d) - 2.0 * num * st.ddphi / (d * d * d);
    HJet::from_x(st.x, 1.0 + n / d, hx, hxx)
}

/// Half-width in `Φ` of the band around `Φ ≡ 0 mod 2π` with `Φ' = 1`, where
/// `h − 1 = (1 − cos Φ)/(Φ' − 1)` is a removable `0/0`.
pub const H_SERIES_BAND: f64 = 0.04;
const H_SERIES_ORDER: usize = 18;

/// `h` jet from the local series at an upward crossing of an even multiple of π.
pub fn h_jet_series(v: &VaultExpansion, x: f64) -> Option<HJet> {
    if v.eps != 1 || v.k % 2 != 0 || v.taylor.len() < 4 {
        return None;
    }
    let n = H_SERIES_ORDER;
    let psi = crossing_coefficients(v.x_star, 1, v.taylor[3], n);
    let (_, cos) = powser::sin_cos(&psi, n + 1);
    let num: Vec<f64> = cos.iter().enumerate().map(|(j, &c)| if j == 0 { 1.0 - c } else { -c }).collect();
    let mut den = powser::deriv(&psi, n);
    den[0] -= 1.0;
    let (num, den) = (&num[2..], &den[2..]);
    if den[0] == 0.0 {
        return None;
    }
    let q = powser::div(num, den, den.len());
    let u = x - v.x_star;
    Some(HJet::from_x(x, 1.0 + powser::eval(&q, u), powser::eval_deriv(&q, u), powser::eval_deriv2(&q, u)))
}

/// State and `h` jet on a trajectory; the series route replaces the closed
/// form inside [`H_SERIES_BAND`].
pub fn h_jet_on(traj: &SolutionTrajectory, x: f64) -> Result<(State, HJet)> {
    let st = State::on(traj, x)?;
    let k = (st.phi / (2.0 * PI)).round();
    if (st.phi - 2.0 * PI * k).abs() < H_SERIES_BAND {
        let near = traj
            .crossings
            .iter()
            .filter(|v| v.k == 2 * k as i64)
            .min_by(|u, v| (u.x_star - x).abs().total_cmp(&(v.x_star - x).abs()));
        if let Some(jet) = near.and_then(|v| h_jet_series(v, x)) {
            return Ok((st, jet));
        }
    }
    Ok((st, h_jet(&st)))
}

/// Relative defect of
/// `h'' = (1/(2h)+1/(h−1))h'² − h'/τ − (h−1)²/(8τ²h) − h/τ`.
pub fn pv8_defect(st: &State) -> Option<Defect> {
    if (st.dphi - 1.0).abs() <= H_MARGIN {
        return None;
    }
    pv8_defect_jet(st.x, &h_jet(st))
}

pub fn pv8_defect_jet(x: f64, jet: &HJet) -> Option<Defect> {
    let HJet { h, h_tau: ht, h_tautau: htt } = *jet;
    if !h.is_finite() || h.abs() < EXCLUSION_MARGIN || (h - 1.0).abs() < EXCLUSION_MARGIN {
        return None;
    }
    let tau = -x * x / 8.0;
    let terms = [
        htt,
        (1.0 / (2.0 * h) + 1.0 / (h - 1.0)) * ht * ht,
        -ht / tau,
        -(h - 1.0).powi(2) / (8.0 * tau * tau * h),
        -h / tau,
    ];
    let defect = terms[0] - terms[1..].iter().sum::<f64>();
    let c: Vec<Complex64> = terms.iter().map(|&v| v.into()).collect();
    Some(rel(defect.into(), &c))
}

/// Pair values at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairCheck {
    /// `h = (w'−w²−1)/(w'−w²+1)`.
    pub h_from_w: Complex64,
    /// `h` from the direct relation.
    pub h_direct: f64,
    /// `2t h / (2τ h_τ − h + 1)`.
    pub w_rebuilt: Complex64,
    /// `2τ h / (τ h_τ − h + 1)`, as the pair is usually displayed.
    pub w_rebuilt_displayed: Complex64,
    pub w: Complex64,
}

pub fn pair_check(st: &State) -> Option<PairCheck> {
    if (st.dphi - 1.0).abs() <= H_MARGIN {
        return None;
    }
    pair_check_jet(st, &h_jet(st))
}

pub fn pair_check_jet(st: &State, jet: &HJet) -> Option<PairCheck> {
    if piii_excluded(st) {
        return None;
    }
    let (w, wt, _) = w_jet(st);
    let den = wt - w * w + 1.0;
    if den.norm() < H_MARGIN {
        return None;
    }
    let h_from_w = (wt - w * w - 1.0) / den;
    let (h_direct, ht) = (jet.h, jet.h_tau);
    let t = Complex64::new(0.0, -st.x / 2.0);
    let tau = t * t / 2.0;
    let d1 = 2.0 * tau * ht - h_from_w + 1.0;
    let d2 = tau * ht - h_from_w + 1.0;
    if d1.norm() < H_MARGIN || d2.norm() < H_MARGIN {
        return None;
    }
    Some(PairCheck {
        h_from_w,
        h_direct,
        w_rebuilt: 2.0 * t * h_from_w / d1,
        w_rebuilt_displayed: 2.0 * tau * h_from_w / d2,
        w,
    })
}

fn report<F>(traj: &SolutionTrajectory, grid: &[f64], eq: Equation, f: F) -> Result<ResidualReport>
where
    F: Fn(&State) -> Option<Defect>,
{
    let mut out = Vec::with_capacity(grid.len());
    for &x in grid {
        out.push(f(&State::on(traj, x)?));
    }
    Ok(ResidualReport::build(eq, grid, out))
}

fn report_jet<F>(traj: &SolutionTrajectory, grid: &[f64], eq: Equation, f: F) -> Result<ResidualReport>
where
    F: Fn(&State, &HJet) -> Option<Defect>,
{
    let mut out = Vec::with_capacity(grid.len());
    for &x in grid {
        let (st, jet) = h_jet_on(traj, x)?;
        out.push(f(&st, &jet));
    }
    Ok(ResidualReport::build(eq, grid, out))
}

/// Residual report over arbitrary states, used for controls.
pub fn report_states<F>(states: &[State], eq: Equation, f: F) -> ResidualReport
where
    F: Fn(&State) -> Option<Defect>,
{
    let grid: Vec<f64> = states.iter().map(|s| s.x).collect();
    ResidualReport::build(eq, &grid, states.iter().map(f).collect())
}

pub fn residual_pv4(traj: &SolutionTrajectory, grid: &[f64]) -> Result<ResidualReport> {
    report(traj, grid, Equation::PV4, pv4_defect)
}

pub fn residual_piii6(traj: &SolutionTrajectory, grid: &[f64]) -> Result<ResidualReport> {
    report(traj, grid, Equation::PIII6, piii6_defect)
}

pub fn residual_pv8(traj: &SolutionTrajectory, grid: &[f64]) -> Result<ResidualReport> {
    report_jet(traj, grid, Equation::PV8, |st, jet| {
        if (st.dphi - 1.0).abs() <= H_MARGIN {
            return None;
        }
        pv8_defect_jet(st.x, jet)
    })
}

/// `|w_rebuilt − w|`, relative to `max(1, |w|)`.
pub fn pair_defect(st: &State) -> Option<Defect> {
    pair_check(st).map(|c| {
        let abs = (c.w_rebuilt - c.w).norm();
        Defect { abs, rel: abs / c.w.norm().max(1.0) }
    })
}

/// Round trip on a trajectory. Points inside [`H_SERIES_BAND`] are excluded:
/// there `w` has a pole and the first relation is a `0/0` that the stored
/// `Φ'` cannot resolve.
pub fn pair_roundtrip(traj: &SolutionTrajectory, grid: &[f64]) -> Result<ResidualReport> {
    report(traj, grid, Equation::Pair7, |st| {
        let k = (st.phi / (2.0 * PI)).round();
        if (st.phi - 2.0 * PI * k).abs() < H_SERIES_BAND {
            return None;
        }
        pair_defect(st)
    })
}

/// Uniform grid with `n` points on `[lo, hi]`.
pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn st(x: f64, phi: f64, dphi: f64) -> State {
        let ddphi = crate::integrator::rhs(x, phi, dphi);
        State { x, phi, dphi, ddphi, dddphi: third_derivative(x, phi, dphi, ddphi) }
    }

    #[test]
    fn quarter_turn_values() {
        let p = p_of(FRAC_PI_2);
        assert!((p - I).norm() < 1e-15);
        let pt = point_from_state(&st(1.0, FRAC_PI_2, 0.3)).unwrap();
        assert!((pt.y + 1.0).norm() < 1e-15);
        assert!((pt.w + I).norm() < 1e-15);
        assert_eq!((pt.tau, pt.s), (-0.125, 0.5));
    }

    #[test]
    fn h_singular_on_unit_slope() {
        let s = State { x: 2.0, phi: 2.0, dphi: 1.0, ddphi: 0.0, dddphi: 0.0 };
        assert_eq!(point_from_state(&s), Err(Error::HSingular { x: 2.0 }));
    }

    #[test]
    fn identities_at_generic_states() {
        for &(x, phi, dphi) in &[(1.7, 0.7, 0.3), (3.3, 2.1, -0.6), (7.3, 5.1, 1.6)] {
            let s = st(x, phi, dphi);
            assert!(pv4_defect(&s).unwrap().rel < 1e-14);
            assert!(piii6_defect(&s).unwrap().rel < 1e-14);
            assert!(pv8_defect(&s).unwrap().rel < 1e-13);
            let c = pair_check(&s).unwrap();
            assert!((c.h_from_w - c.h_direct).norm() < 1e-13);
            assert!((c.w_rebuilt - c.w).norm() < 1e-13 * c.w.norm().max(1.0));
        }
    }

    #[test]
    fn sign_map_between_p_and_w() {
        let s = st(2.2, 1.1, 0.4).perturbed(1e-2);
        let (r5, r6) = (piii5_raw(&s), piii6_raw(&s));
        assert!(r6.norm() > 1e-4);
        assert!((r5 + r6).norm() < 1e-13 * r6.norm());
    }

    #[test]
    fn exclusions() {
        assert!(pv4_defect(&st(2.0, 1e-4, 0.5)).is_none());
        assert!(piii6_defect(&st(2.0, std::f64::consts::PI, 0.5)).is_none());
    }
}
