//! Dormand–Prince 5(4) stepping with Hairer's PI step-size controller.

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

pub(crate) struct Step<const N: usize> {
    pub y: [f64; N],
    /// `f(x + h, y)`, reusable as the next first stage.
    pub dy: [f64; N],
    pub err: [f64; N],
}

fn comb<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        out[i] += h * acc;
    }
    out
}

/// One Dormand–Prince step from `(x, y)` with first stage `k1 = f(x, y)`.
pub(crate) fn dopri_step<const N: usize, F>(
    f: &mut F,
    x: f64,
    y: &[f64; N],
    k1: &[f64; N],
    h: f64,
) -> Step<N>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let k2 = f(x + C2 * h, &comb(y, h, &[(A21, k1)]));
    let k3 = f(x + C3 * h, &comb(y, h, &[(A31, k1), (A32, &k2)]));
    let k4 = f(x + C4 * h, &comb(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]));
    let k5 = f(
        x + C5 * h,
        &comb(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
    );
    let k6 = f(
        x + h,
        &comb(y, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
    );
    let y5 = comb(y, h, &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
    let k7 = f(x + h, &y5);
    let mut err = [0.0; N];
    for i in 0..N {
        err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
    }
    Step { y: y5, dy: k7, err }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Controller {
    pub rtol: f64,
    pub atol: f64,
    fac_old: f64,
}

impl Controller {
    pub fn new(rtol: f64, atol: f64) -> Self {
        Controller { rtol, atol, fac_old: 1e-4 }
    }

    pub fn norm<const N: usize>(&self, y: &[f64; N], y_new: &[f64; N], err: &[f64; N]) -> f64 {
        let mut acc = 0.0;
        for i in 0..N {
            let sc = self.atol + self.rtol * y[i].abs().max(y_new[i].abs());
            acc += (err[i] / sc).powi(2);
        }
        (acc / N as f64).sqrt()
    }

    /// Next step after acceptance.
    pub fn accept(&mut self, h: f64, err: f64) -> f64 {
        let fac11 = err.max(1e-300).powf(0.17);
        let fac = (fac11 / self.fac_old.powf(0.04) / 0.9).clamp(0.2, 10.0);
        self.fac_old = err.max(1e-4);
        h / fac
    }

    pub fn reject(&self, h: f64, err: f64) -> f64 {
        if !err.is_finite() {
            return h * 0.1;
        }
        let fac11 = err.powf(0.17);
        h / (fac11 / 0.9).min(5.0)
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Settings {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

/// Integrates `y' = f(x, y)` from `x0` to `x1` (either direction). `cap(x)`
/// bounds the step magnitude locally; `observe` sees every accepted node.
pub(crate) fn integrate<const N: usize, F, C, O>(
    f: &mut F,
    x0: f64,
    y0: [f64; N],
    x1: f64,
    set: Settings,
    cap: C,
    mut observe: O,
) -> Result<[f64; N]>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
    C: Fn(f64) -> f64,
    O: FnMut(f64, &[f64; N], &[f64; N]),
{
    let dir = if x1 >= x0 { 1.0 } else { -1.0 };
    let span = (x1 - x0).abs();
    let mut ctl = Controller::new(set.rtol, set.atol);
    let mut x = x0;
    let mut y = y0;
    let mut k1 = f(x, &y);
    observe(x, &y, &k1);
    if span == 0.0 {
        return Ok(y);
    }
    let mut h = (1e-2 * span).min(set.h_max).min(cap(x));
    let mut steps = 0usize;
    while dir * (x1 - x) > 0.0 {
        steps += 1;
        if steps > set.max_steps {
            return Err(Error::IntegrationFailure { x, reason: "step budget exhausted".into() });
        }
        h = h.min(set.h_max).min(cap(x));
        let remaining = (x1 - x).abs();
        let last = h >= remaining * (1.0 - 1e-12);
        let ht = if last { remaining } else { h };
        if ht <= 1e-14 * x.abs().max(1.0) {
            return Err(Error::IntegrationFailure { x, reason: "step size underflow".into() });
        }
        let st = dopri_step(f, x, &y, &k1, dir * ht);
        let en = ctl.norm(&y, &st.y, &st.err);
        if !(en <= 1.0) {
            h = ctl.reject(ht, en);
            continue;
        }
        x = if last { x1 } else { x + dir * ht };
        y = st.y;
        k1 = st.dy;
        observe(x, &y, &k1);
        h = ctl.accept(ht, en);
    }
    Ok(y)
}
