//! Generators of quasiarithmetic and conjugated means.

use std::fmt;
use std::sync::Arc;

use crate::domain::Interval;
use crate::error::{Error, Result};

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A continuous, strictly monotone function together with its inverse.
#[derive(Clone)]
pub enum GeneratorDescriptor {
    /// `t ↦ t^r` for `r ≠ 0` and `t ↦ ln t` for `r = 0`, on `(0, ∞)`.
    Power(f64),
    /// `t ↦ e^{a t}` on the real line, `a ≠ 0`.
    Exp(f64),
    Custom(CustomGenerator),
}

#[derive(Clone)]
pub struct CustomGenerator {
    name: String,
    forward: ScalarFn,
    inverse: ScalarFn,
    domain: Interval,
    increasing: bool,
}

impl CustomGenerator {
    pub fn name(&self) -> &str {
        &self.name
    }
}

const INVERSE_CHECK_POINTS: usize = 33;
const INVERSE_CHECK_TOL: f64 = 1e-8;

impl GeneratorDescriptor {
    pub fn power(r: f64) -> Result<Self> {
        if !r.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "power exponent {r} is not finite"
            )));
        }
        Ok(Self::Power(r))
    }

    pub fn log() -> Self {
        Self::Power(0.0)
    }

    pub fn exp(a: f64) -> Result<Self> {
        if !a.is_finite() || a == 0.0 {
            return Err(Error::InvalidConfig(format!(
                "exponential generator needs a finite nonzero rate, got {a}"
            )));
        }
        Ok(Self::Exp(a))
    }

    /// A user-supplied generator.
    ///
    /// Strict monotonicity in the declared direction and `inverse ∘ forward = id`
    /// are spot-checked on a grid of the domain.
    pub fn custom(
        name: impl Into<String>,
        forward: impl Fn(f64) -> f64 + Send + Sync + 'static,
        inverse: impl Fn(f64) -> f64 + Send + Sync + 'static,
        domain: Interval,
        increasing: bool,
    ) -> Result<Self> {
        let g = CustomGenerator {
            name: name.into(),
            forward: Arc::new(forward),
            inverse: Arc::new(inverse),
            domain,
            increasing,
        };
        let pts = probe_points(&domain, INVERSE_CHECK_POINTS);
        let mut prev: Option<f64> = None;
        for &t in &pts {
            let u = (g.forward)(t);
            if !u.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "generator {} is not finite at {t}",
                    g.name
                )));
            }
            if let Some(p) = prev {
                if (increasing && u <= p) || (!increasing && u >= p) {
                    return Err(Error::InvalidConfig(format!(
                        "generator {} is not strictly {} near {t}",
                        g.name,
                        if increasing {
                            "increasing"
                        } else {
                            "decreasing"
                        }
                    )));
                }
            }
            prev = Some(u);
            let back = (g.inverse)(u);
            if (back - t).abs() > INVERSE_CHECK_TOL * t.abs().max(1.0) {
                return Err(Error::InvalidConfig(format!(
                    "inverse of generator {} is inconsistent at {t}: got {back}",
                    g.name
                )));
            }
        }
        Ok(Self::Custom(g))
    }

    pub fn domain(&self) -> Interval {
        match self {
            Self::Power(_) => Interval::positive(),
            Self::Exp(_) => Interval::real_line(),
            Self::Custom(g) => g.domain,
        }
    }

    pub fn is_increasing(&self) -> bool {
        match self {
            Self::Power(r) => *r >= 0.0,
            Self::Exp(a) => *a > 0.0,
            Self::Custom(g) => g.increasing,
        }
    }

    #[inline]
    pub fn forward(&self, t: f64) -> f64 {
        match self {
            Self::Power(r) => {
                if *r == 0.0 {
                    t.ln()
                } else {
                    pow_fast(t, *r)
                }
            }
            Self::Exp(a) => (a * t).exp(),
            Self::Custom(g) => (g.forward)(t),
        }
    }

    #[inline]
    pub fn inverse(&self, u: f64) -> f64 {
        match self {
            Self::Power(r) => {
                if *r == 0.0 {
                    u.exp()
                } else {
                    root_fast(u, *r)
                }
            }
            Self::Exp(a) => u.ln() / a,
            Self::Custom(g) => (g.inverse)(u),
        }
    }
}

impl PartialEq for GeneratorDescriptor {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Self::Power(a), Self::Power(b)) => a == b,
            (Self::Exp(a), Self::Exp(b)) => a == b,
            (Self::Custom(a), Self::Custom(b)) => {
                a.name == b.name && a.domain == b.domain && a.increasing == b.increasing
            }
            _ => false,
        }
    }
}

impl fmt::Debug for GeneratorDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GeneratorDescriptor({self})")
    }
}

impl fmt::Display for GeneratorDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Power(r) => write!(f, "power:{r}"),
            Self::Exp(a) => write!(f, "exp:{a}"),
            Self::Custom(g) => write!(f, "{}", g.name),
        }
    }
}

/// `t^r` with exact shortcuts for the common small exponents.
#[inline]
pub(crate) fn pow_fast(t: f64, r: f64) -> f64 {
    if r == 1.0 {
        t
    } else if r == 2.0 {
        t * t
    } else if r == -1.0 {
        1.0 / t
    } else if r == 0.5 {
        t.sqrt()
    } else if r == 3.0 {
        t * t * t
    } else if r == -2.0 {
        1.0 / (t * t)
    } else if r == -0.5 {
        1.0 / t.sqrt()
    } else {
        t.powf(r)
    }
}

/// `u^{1/r}`, the inverse of [`pow_fast`] on the positive half-line.
#[inline]
pub(crate) fn root_fast(u: f64, r: f64) -> f64 {
    if r == 1.0 {
        u
    } else if r == 2.0 {
        u.sqrt()
    } else if r == -1.0 {
        1.0 / u
    } else if r == 0.5 {
        u * u
    } else if r == 3.0 {
        u.cbrt()
    } else if r == -2.0 {
        1.0 / u.sqrt()
    } else if r == -0.5 {
        1.0 / (u * u)
    } else {
        u.powf(1.0 / r)
    }
}

/// Interior probe points of an interval, log-spaced on positive half-lines.
fn probe_points(domain: &Interval, n: usize) -> Vec<f64> {
    let (lo, hi) = (domain.lo(), domain.hi());
    if lo >= 0.0 && hi == f64::INFINITY {
        let a = if lo > 0.0 { lo * 1.001 } else { 1e-3 };
        let (la, lb) = (a.ln(), (a * 1e6).ln());
        return (0..n)
            .map(|i| (la + (lb - la) * i as f64 / (n - 1) as f64).exp())
            .collect();
    }
    let a = if lo.is_finite() {
        lo
    } else {
        hi.min(10.0) - 20.0
    };
    let b = if hi.is_finite() {
        hi
    } else {
        a.max(-10.0) + 20.0
    };
    (1..=n)
        .map(|i| a + (b - a) * i as f64 / (n + 1) as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_generator_round_trips() {
        for r in [-3.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0, 3.0, 1.7] {
            let g = GeneratorDescriptor::power(r).unwrap();
            for t in [0.01, 0.5, 1.0, 3.0, 250.0] {
                let back = g.inverse(g.forward(t));
                assert!((back - t).abs() <= 1e-13 * t, "r={r} t={t} back={back}");
            }
        }
    }

    #[test]
    fn directions() {
        assert!(GeneratorDescriptor::log().is_increasing());
        assert!(!GeneratorDescriptor::power(-1.0).unwrap().is_increasing());
        assert!(!GeneratorDescriptor::exp(-2.0).unwrap().is_increasing());
        assert!(GeneratorDescriptor::exp(0.0).is_err());
    }

    #[test]
    fn custom_generator_validation() {
        let ok = GeneratorDescriptor::custom(
            "cube",
            |t| t * t * t,
            |u: f64| u.cbrt(),
            Interval::real_line(),
            true,
        );
        assert!(ok.is_ok());
        let bad_inverse =
            GeneratorDescriptor::custom("bad", |t| 2.0 * t, |u| u, Interval::real_line(), true);
        assert!(bad_inverse.is_err());
        let not_monotone = GeneratorDescriptor::custom(
            "square",
            |t| t * t,
            |u: f64| u.sqrt(),
            Interval::real_line(),
            true,
        );
        assert!(not_monotone.is_err());
    }
}
