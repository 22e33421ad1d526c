//! Interval domains and point vectors.

use std::fmt;
use std::ops::Deref;

use crate::error::{Error, Result};

/// A real interval with possibly infinite endpoints.
///
/// When `requires_positive` is set and `lo == 0`, the left endpoint is open:
/// the positive half-line `(0, ∞)` is written `Interval::positive()`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
    requires_positive: bool,
}

impl Interval {
    pub fn new(lo: f64, hi: f64, requires_positive: bool) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() {
            return Err(Error::InvalidInterval {
                lo,
                hi,
                reason: "NaN endpoint",
            });
        }
        if lo >= hi {
            return Err(Error::InvalidInterval {
                lo,
                hi,
                reason: "lo must be strictly below hi",
            });
        }
        if requires_positive && lo < 0.0 {
            return Err(Error::InvalidInterval {
                lo,
                hi,
                reason: "positive interval must have lo >= 0",
            });
        }
        Ok(Self {
            lo,
            hi,
            requires_positive,
        })
    }

    /// `(0, ∞)`, the domain of every homogeneous family.
    pub const fn positive() -> Self {
        Self {
            lo: 0.0,
            hi: f64::INFINITY,
            requires_positive: true,
        }
    }

    pub const fn real_line() -> Self {
        Self {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
            requires_positive: false,
        }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn requires_positive(&self) -> bool {
        self.requires_positive
    }

    pub fn contains(&self, x: f64) -> bool {
        if !x.is_finite() {
            return false;
        }
        let above = if self.requires_positive && self.lo == 0.0 {
            x > 0.0
        } else {
            x >= self.lo
        };
        above && x <= self.hi
    }

    /// Whether `λ·x` stays inside for every `x` inside and every `λ > 0`.
    pub fn is_cone(&self) -> bool {
        (self.lo == 0.0 || self.lo == f64::NEG_INFINITY)
            && (self.hi == 0.0 || self.hi == f64::INFINITY)
    }

    /// Intersection of two intervals, `None` when empty.
    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        Interval::new(lo, hi, self.requires_positive || other.requires_positive).ok()
    }

    pub fn check(&self, x: &[f64]) -> Result<()> {
        match x.iter().position(|&v| !self.contains(v)) {
            Some(index) => Err(Error::Domain {
                index,
                value: x[index],
                domain: self.to_string(),
            }),
            None => Ok(()),
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let open_lo = self.lo == f64::NEG_INFINITY || (self.requires_positive && self.lo == 0.0);
        let open_hi = self.hi == f64::INFINITY;
        write!(
            f,
            "{}{}, {}{}",
            if open_lo { '(' } else { '[' },
            self.lo,
            self.hi,
            if open_hi { ')' } else { ']' }
        )
    }
}

/// A non-empty vector of finite reals, the argument of a mean.
#[derive(Debug, Clone, PartialEq)]
pub struct PointVector(Vec<f64>);

impl PointVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Arity {
                expected: "at least 1".into(),
                got: 0,
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!(
                "entry {i} is not finite: {}",
                values[i]
            )));
        }
        Ok(Self(values))
    }

    /// Builds a point vector and checks it against `domain`.
    pub fn within(values: Vec<f64>, domain: &Interval) -> Result<Self> {
        let pv = Self::new(values)?;
        domain.check(&pv)?;
        Ok(pv)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// The vector with coordinate `j` (0-based) removed.
    pub fn without(&self, j: usize) -> Result<PointVector> {
        if j >= self.0.len() {
            return Err(Error::Index {
                index: j + 1,
                p: self.0.len(),
            });
        }
        if self.0.len() == 1 {
            return Err(Error::Arity {
                expected: "at least 2 to drop a coordinate".into(),
                got: 1,
            });
        }
        let mut v = self.0.clone();
        v.remove(j);
        Ok(PointVector(v))
    }
}

impl Deref for PointVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for PointVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        PointVector::new(v)
    }
}

/// `(min, max)` of a non-empty slice.
pub(crate) fn min_max(x: &[f64]) -> (f64, f64) {
    x.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        })
}

pub(crate) fn is_constant(x: &[f64]) -> bool {
    x.iter().all(|&v| v == x[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_degenerate_intervals() {
        assert!(Interval::new(1.0, 1.0, false).is_err());
        assert!(Interval::new(2.0, 1.0, false).is_err());
        assert!(Interval::new(-1.0, 1.0, true).is_err());
        assert!(Interval::new(f64::NAN, 1.0, false).is_err());
    }

    #[test]
    fn positive_half_line_is_open_at_zero() {
        let i = Interval::positive();
        assert!(!i.contains(0.0));
        assert!(i.contains(1e-300));
        assert!(!i.contains(f64::INFINITY));
        assert_eq!(i.to_string(), "(0, inf)");
        let closed = Interval::new(0.0, 1.0, false).unwrap();
        assert!(closed.contains(0.0));
        assert_eq!(closed.to_string(), "[0, 1]");
    }

    #[test]
    fn domain_error_reports_first_offender() {
        let err = Interval::positive().check(&[1.0, -2.0, 0.0]).unwrap_err();
        assert!(matches!(err, Error::Domain { index: 1, .. }));
    }

    #[test]
    fn without_drops_a_coordinate() {
        let x = PointVector::new(vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(x.without(0).unwrap().values(), &[2.0, 3.0]);
        assert_eq!(x.without(2).unwrap().values(), &[1.0, 2.0]);
        assert!(x.without(3).is_err());
        assert!(PointVector::new(vec![]).is_err());
        assert!(PointVector::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn intersection() {
        let a = Interval::real_line();
        let b = Interval::positive();
        assert_eq!(a.intersect(&b), Some(b));
        let c = Interval::new(-3.0, -1.0, false).unwrap();
        assert_eq!(b.intersect(&c), None);
    }
}
