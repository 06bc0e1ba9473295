//! Power series of the boundary-value solution about the origin, used to seed
//! the integrator away from the singular point x = 0.

use num_traits::Num;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::powser;

pub const DEFAULT_ORDER: usize = 12;
pub const DEFAULT_X0: f64 = 1e-2;

/// Trust radius: the last retained term stays below this fraction of the
/// leading term.
const RADIUS_RATIO: f64 = 1e-14;

/// `Φ(x) = Σ coeffs[k] x^k` with `coeffs[0] = 0`, `coeffs[1] = 1`, `coeffs[2] = -a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesExpansion {
    pub a: f64,
    pub coeffs: Vec<f64>,
    pub order: usize,
    pub radius_hint: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Seed {
    pub phi: f64,
    pub dphi: f64,
    /// Magnitude of the last retained term.
    pub tail: f64,
}

/// Coefficient of `h^m` in
/// `X ψ'' sin ψ − X (ψ'² − 1) cos ψ − (1 − ψ') sin ψ` with `X = x_star + h`,
/// which is the ODE multiplied through by `x sin Φ` (the sign of `sin` at a
/// multiple of π drops out). `c` is the local series of `ψ` and must have
/// `c[0] = 0`.
pub fn matching_defect<T: Clone + Num>(c: &[T], x_star: T, m: usize) -> T {
    let n = m + 1;
    let d1 = powser::deriv(c, n + 1);
    let d2 = powser::deriv(&d1, n);
    let (s, co) = powser::sin_cos(c, n);
    let xs = [x_star, T::one()];
    let t1 = powser::mul(&xs, &powser::mul(&d2, &s, n), n);
    let mut d1sq = powser::mul(&d1, &d1, n);
    d1sq[0] = d1sq[0].clone() - T::one();
    let t2 = powser::mul(&xs, &powser::mul(&d1sq, &co, n), n);
    let om: Vec<T> = d1
        .iter()
        .enumerate()
        .map(|(k, v)| if k == 0 { T::one() - v.clone() } else { T::zero() - v.clone() })
        .collect();
    let t3 = powser::mul(&om, &s, n);
    t1[m].clone() - t2[m].clone() - t3[m].clone()
}

/// Solves for `c[k]`, which enters the defect of order `m` linearly.
pub(crate) fn solve_linear_coeff<T: Clone + Num>(c: &mut [T], k: usize, x_star: T, m: usize) {
    c[k] = T::zero();
    let r0 = matching_defect(c, x_star.clone(), m);
    c[k] = T::one();
    let r1 = matching_defect(c, x_star, m);
    c[k] = T::zero() - r0.clone() / (r1 - r0);
}

/// Origin coefficients `c_0..=c_order` over any field (exact rationals work).
pub fn origin_coefficients<T: Clone + Num>(a: T, order: usize) -> Vec<T> {
    let mut c = vec![T::zero(); order + 1];
    if order >= 1 {
        c[1] = T::one();
    }
    if order >= 2 {
        c[2] = T::zero() - a;
    }
    for k in 3..=order {
        solve_linear_coeff(&mut c, k, T::zero(), k);
    }
    c
}

pub fn series_coefficients(a: f64, order: usize) -> Result<SeriesExpansion> {
    if order < 3 {
        return Err(Error::InvalidArgument(format!(
            "series order must be at least 3, got {order}"
        )));
    }
    if !a.is_finite() {
        return Err(Error::InvalidArgument(format!("a must be finite, got {a}")));
    }
    let coeffs = origin_coefficients(a, order);
    let radius_hint = (order - 1..=order)
        .filter(|&k| coeffs[k] != 0.0)
        .map(|k| (RADIUS_RATIO / coeffs[k].abs()).powf(1.0 / (k - 1) as f64))
        .fold(1.0_f64, f64::min);
    Ok(SeriesExpansion { a, coeffs, order, radius_hint })
}

impl SeriesExpansion {
    pub fn value(&self, x: f64) -> f64 {
        powser::eval(&self.coeffs, x)
    }

    pub fn derivative(&self, x: f64) -> f64 {
        powser::eval_deriv(&self.coeffs, x)
    }

    pub fn second_derivative(&self, x: f64) -> f64 {
        powser::eval_deriv2(&self.coeffs, x)
    }
}

pub fn eval_seed(series: &SeriesExpansion, x0: f64) -> Result<Seed> {
    if !(x0 > 0.0 && x0 <= series.radius_hint) {
        return Err(Error::OutOfRange(format!(
            "seed point x0 = {x0} outside (0, {}] (trust radius of the order-{} series)",
            series.radius_hint, series.order
        )));
    }
    Ok(Seed {
        phi: series.value(x0),
        dphi: series.derivative(x0),
        tail: (series.coeffs[series.order] * x0.powi(series.order as i32)).abs(),
    })
}

/// Series of the ODE residual `Φ'' − (Φ'² − 1) cot Φ − (1 − Φ')/x` for the
/// polynomial `Φ = Σ c_k x^k` (with `c_0 = 0`, `c_1 ≠ 0`), through `x^{n-1}`.
/// In exact arithmetic the leading nonzero power gives the truncation order.
pub fn residual_series<T: Clone + Num>(c: &[T], n: usize) -> Vec<T> {
    let m = n + 1;
    let d1 = powser::deriv(c, m + 1);
    let d2 = powser::deriv(&d1, m);
    let (s, co) = powser::sin_cos(c, m + 1);
    // sin Φ = x σ(x), σ(0) = c_1
    let sigma = powser::shift_down(&s, m);
    let om: Vec<T> = d1
        .iter()
        .enumerate()
        .map(|(k, v)| if k == 0 { T::one() - v.clone() } else { T::zero() - v.clone() })
        .collect();
    let om_x = powser::shift_down(&om, m);
    let mut d1sq = powser::mul(&d1, &d1, m + 1);
    d1sq[0] = d1sq[0].clone() - T::one();
    let d1sq_x = powser::shift_down(&d1sq, m);
    let cot_part = powser::div(&powser::mul(&d1sq_x, &co, m), &sigma, m);
    (0..n)
        .map(|k| d2[k].clone() - om_x[k].clone() - cot_part[k].clone())
        .collect()
}

/// Index of the first nonzero coefficient: the order of the residual.
pub fn residual_order<T: Num>(residual: &[T]) -> Option<usize> {
    residual.iter().position(|v| !v.is_zero())
}

/// Least-squares slope of `ln|R(x)|` against `ln x` on `points` log-spaced
/// nodes of `[lo, hi]`, `R` given by its power series.
pub fn residual_slope(residual: &[f64], lo: f64, hi: f64, points: usize) -> Result<f64> {
    if !(lo > 0.0 && hi > lo) || points < 2 {
        return Err(Error::InvalidArgument(format!("bad grid [{lo}, {hi}] with {points} points")));
    }
    let (mut lx, mut ly) = (Vec::with_capacity(points), Vec::with_capacity(points));
    for i in 0..points {
        let x = lo * (hi / lo).powf(i as f64 / (points - 1) as f64);
        let r = powser::eval(residual, x).abs();
        if !(r > 0.0) {
            return Err(Error::InvalidArgument(format!("residual vanishes at x = {x}")));
        }
        lx.push(x.ln());
        ly.push(r.ln());
    }
    let n = points as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}
