//! Random test points inside a domain.

use crate::domain::Interval;
use crate::rng::CounterRng;

/// Range used for log-uniform draws on the positive half-line.
pub const POSITIVE_RANGE: (f64, f64) = (1e-2, 1e2);
/// Range used on unbounded intervals that admit negative values.
pub const SYMMETRIC_RANGE: (f64, f64) = (-10.0, 10.0);

/// One point strictly inside `domain`.
pub fn sample_point(rng: &mut CounterRng, domain: &Interval) -> f64 {
    let (lo, hi) = (domain.lo(), domain.hi());
    if lo >= 0.0 && hi == f64::INFINITY {
        let (a, b) = POSITIVE_RANGE;
        return lo + rng.log_uniform(a, b);
    }
    let a = if lo.is_finite() {
        lo
    } else {
        SYMMETRIC_RANGE.0.min(hi - 20.0)
    };
    let b = if hi.is_finite() {
        hi
    } else {
        SYMMETRIC_RANGE.1.max(lo + 20.0)
    };
    loop {
        let v = rng.uniform(a, b);
        if domain.contains(v) && v != a {
            return v;
        }
    }
}

pub fn sample_vector(rng: &mut CounterRng, domain: &Interval, n: usize) -> Vec<f64> {
    (0..n).map(|_| sample_point(rng, domain)).collect()
}

/// A positive vector, log-uniform on `[lo, hi]` in every coordinate.
pub fn positive_vector(rng: &mut CounterRng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.log_uniform(lo, hi)).collect()
}

/// A vector that is not constant.
pub fn non_constant_vector(rng: &mut CounterRng, domain: &Interval, n: usize) -> Vec<f64> {
    loop {
        let x = sample_vector(rng, domain, n);
        if x.iter().any(|&v| v != x[0]) {
            return x;
        }
    }
}

/// A random permutation of `x`.
pub fn permuted(rng: &mut CounterRng, x: &[f64]) -> Vec<f64> {
    let mut y = x.to_vec();
    rng.shuffle(&mut y);
    y
}

/// A point `y` with `x ≺ y` inside `domain`: every coordinate moved up by a
/// random non-negative amount, one of them strictly.
pub fn dominating(rng: &mut CounterRng, domain: &Interval, x: &[f64]) -> Vec<f64> {
    let strict = rng.below(x.len());
    x.iter()
        .enumerate()
        .map(|(i, &v)| {
            if i != strict && rng.unit() < 0.5 {
                return v;
            }
            let room = if domain.hi().is_finite() {
                domain.hi() - v
            } else {
                v.abs().max(1.0) * 3.0
            };
            let y = v + room * rng.unit();
            if domain.contains(y) {
                y
            } else {
                v
            }
        })
        .collect()
}
