//! Truncated power series over any numeric field.
//!
//! A series is a coefficient vector `c` with `c[k]` multiplying `h^k`. All
//! routines truncate their result to `n` terms.

use num_traits::Num;

fn coeff<T: Clone + Num>(a: &[T], k: usize) -> T {
    a.get(k).cloned().unwrap_or_else(T::zero)
}

pub fn from_usize<T: Num>(k: usize) -> T {
    let mut out = T::zero();
    for _ in 0..k {
        out = out + T::one();
    }
    out
}

pub fn mul<T: Clone + Num>(a: &[T], b: &[T], n: usize) -> Vec<T> {
    (0..n)
        .map(|k| {
            (0..=k).fold(T::zero(), |acc, i| {
                acc + coeff(a, i) * coeff(b, k - i)
            })
        })
        .collect()
}

pub fn deriv<T: Clone + Num>(a: &[T], n: usize) -> Vec<T> {
    (0..n)
        .map(|k| from_usize::<T>(k + 1) * coeff(a, k + 1))
        .collect()
}

/// Series of `sin u` and `cos u` for `u` with zero constant term.
pub fn sin_cos<T: Clone + Num>(u: &[T], n: usize) -> (Vec<T>, Vec<T>) {
    debug_assert!(u.is_empty() || u[0] == T::zero());
    let mut s = vec![T::zero(); n];
    let mut c = vec![T::zero(); n];
    if n > 0 {
        c[0] = T::one();
    }
    for m in 1..n {
        let mut ds = T::zero();
        let mut dc = T::zero();
        for k in 1..=m {
            let ku = from_usize::<T>(k) * coeff(u, k);
            ds = ds + ku.clone() * c[m - k].clone();
            dc = dc + ku * s[m - k].clone();
        }
        s[m] = ds / from_usize(m);
        c[m] = T::zero() - dc / from_usize(m);
    }
    (s, c)
}

/// `a / b`, requires `b[0] != 0`.
pub fn div<T: Clone + Num>(a: &[T], b: &[T], n: usize) -> Vec<T> {
    let mut q: Vec<T> = Vec::with_capacity(n);
    for k in 0..n {
        let mut acc = coeff(a, k);
        for (i, qi) in q.iter().enumerate() {
            acc = acc - qi.clone() * coeff(b, k - i);
        }
        q.push(acc / b[0].clone());
    }
    q
}

/// Drops the constant term and shifts down by one power.
pub fn shift_down<T: Clone + Num>(a: &[T], n: usize) -> Vec<T> {
    (0..n).map(|k| coeff(a, k + 1)).collect()
}

pub fn eval(c: &[f64], h: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ck| acc * h + ck)
}

pub fn eval_deriv(c: &[f64], h: f64) -> f64 {
    c.iter()
        .enumerate()
        .skip(1)
        .rev()
        .fold(0.0, |acc, (k, &ck)| acc * h + k as f64 * ck)
}

pub fn eval_deriv2(c: &[f64], h: f64) -> f64 {
    c.iter()
        .enumerate()
        .skip(2)
        .rev()
        .fold(0.0, |acc, (k, &ck)| acc * h + (k * (k - 1)) as f64 * ck)
}
