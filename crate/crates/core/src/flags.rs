//! Randomized spot checks of the flags a mean declares.

use serde::Serialize;

use crate::domain::min_max;
use crate::means::{Arity, MeanDescriptor};
use crate::rng::CounterRng;
use crate::sampling::{dominating, non_constant_vector, permuted};

/// Relative slack for comparisons between two evaluations.
const FLAG_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Counterexample {
    pub x: Vec<f64>,
    /// Second point of a pair check (permutation, dominating point, scaling).
    pub y: Option<Vec<f64>>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlagCheck {
    pub flag: &'static str,
    pub declared: bool,
    /// Samples actually evaluated; zero when the flag is not declared.
    pub samples: usize,
    pub counterexample: Option<Counterexample>,
}

impl FlagCheck {
    pub fn passed(&self) -> bool {
        self.counterexample.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlagReport {
    pub mean: String,
    pub checks: Vec<FlagCheck>,
    pub passed: bool,
}

impl FlagReport {
    pub fn check(&self, flag: &str) -> Option<&FlagCheck> {
        self.checks.iter().find(|c| c.flag == flag)
    }
}

fn tol(v: f64) -> f64 {
    FLAG_TOL * v.abs().max(1.0)
}

/// Arity used for sample `i`.
fn arity_for(m: &MeanDescriptor, i: usize) -> usize {
    match m.arity() {
        Arity::Fixed(k) => k,
        Arity::Variadic => 2 + i % 3,
    }
}

/// Samples every declared flag `samples` times and reports the first
/// counterexample for each. Flags that are not declared are not checked.
pub fn verify_flags(m: &MeanDescriptor, samples: usize, seed: u64) -> FlagReport {
    let samples = samples.max(1);
    let flags = m.flags();
    let root = CounterRng::new(seed);
    let checks = vec![
        run_check(
            "symmetric",
            flags.symmetric,
            samples,
            root.split_named("symmetric"),
            |rng, i| symmetric_case(m, rng, i),
        ),
        run_check(
            "strict",
            flags.strict,
            samples,
            root.split_named("strict"),
            |rng, i| strict_case(m, rng, i),
        ),
        run_check(
            "monotone",
            flags.monotone,
            samples,
            root.split_named("monotone"),
            |rng, i| monotone_case(m, rng, i),
        ),
        run_check(
            "homogeneous",
            flags.homogeneous,
            samples,
            root.split_named("homogeneous"),
            |rng, i| homogeneous_case(m, rng, i),
        ),
    ];
    let passed = checks.iter().all(FlagCheck::passed);
    FlagReport {
        mean: m.to_string(),
        checks,
        passed,
    }
}

fn run_check(
    flag: &'static str,
    declared: bool,
    samples: usize,
    mut rng: CounterRng,
    mut case: impl FnMut(&mut CounterRng, usize) -> Option<Counterexample>,
) -> FlagCheck {
    if !declared {
        return FlagCheck {
            flag,
            declared,
            samples: 0,
            counterexample: None,
        };
    }
    for i in 0..samples {
        if let Some(c) = case(&mut rng, i) {
            return FlagCheck {
                flag,
                declared,
                samples: i + 1,
                counterexample: Some(c),
            };
        }
    }
    FlagCheck {
        flag,
        declared,
        samples,
        counterexample: None,
    }
}

fn eval_or_report(m: &MeanDescriptor, x: &[f64]) -> Result<f64, Counterexample> {
    m.eval(x).map_err(|e| Counterexample {
        x: x.to_vec(),
        y: None,
        detail: format!("evaluation failed: {e}"),
    })
}

fn symmetric_case(m: &MeanDescriptor, rng: &mut CounterRng, i: usize) -> Option<Counterexample> {
    let x = non_constant_vector(rng, &m.domain(), arity_for(m, i));
    let y = permuted(rng, &x);
    let run = || -> Result<Option<Counterexample>, Counterexample> {
        let (a, b) = (eval_or_report(m, &x)?, eval_or_report(m, &y)?);
        Ok(((a - b).abs() > tol(a)).then(|| Counterexample {
            x: x.clone(),
            y: Some(y.clone()),
            detail: format!("M(x) = {a} but M(permuted x) = {b}"),
        }))
    };
    run().unwrap_or_else(Some)
}

fn strict_case(m: &MeanDescriptor, rng: &mut CounterRng, i: usize) -> Option<Counterexample> {
    let x = non_constant_vector(rng, &m.domain(), arity_for(m, i));
    let (lo, hi) = min_max(&x);
    match eval_or_report(m, &x) {
        Err(c) => Some(c),
        Ok(v) if v <= lo || v >= hi => Some(Counterexample {
            x,
            y: None,
            detail: format!("M(x) = {v} is not strictly inside [{lo}, {hi}]"),
        }),
        Ok(_) => None,
    }
}

fn monotone_case(m: &MeanDescriptor, rng: &mut CounterRng, i: usize) -> Option<Counterexample> {
    let domain = m.domain();
    let x = non_constant_vector(rng, &domain, arity_for(m, i));
    let y = dominating(rng, &domain, &x);
    let run = || -> Result<Option<Counterexample>, Counterexample> {
        let (a, b) = (eval_or_report(m, &x)?, eval_or_report(m, &y)?);
        Ok((a > b + tol(b)).then(|| Counterexample {
            x: x.clone(),
            y: Some(y.clone()),
            detail: format!("x ≺ y but M(x) = {a} > M(y) = {b}"),
        }))
    };
    run().unwrap_or_else(Some)
}

fn homogeneous_case(m: &MeanDescriptor, rng: &mut CounterRng, i: usize) -> Option<Counterexample> {
    let domain = m.domain();
    if !domain.is_cone() {
        return Some(Counterexample {
            x: vec![],
            y: None,
            detail: format!("domain {domain} is not closed under positive scaling"),
        });
    }
    let x = non_constant_vector(rng, &domain, arity_for(m, i));
    let lambda = rng.log_uniform(0.1, 10.0);
    let y: Vec<f64> = x.iter().map(|v| lambda * v).collect();
    let run = || -> Result<Option<Counterexample>, Counterexample> {
        let (a, b) = (eval_or_report(m, &x)?, eval_or_report(m, &y)?);
        Ok(((b - lambda * a).abs() > tol(b)).then(|| Counterexample {
            x: x.clone(),
            y: Some(y.clone()),
            detail: format!("M({lambda}·x) = {b} but {lambda}·M(x) = {}", lambda * a),
        }))
    };
    run().unwrap_or_else(Some)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Interval;
    use crate::means::MeanFlags;

    #[test]
    fn power_mean_passes_every_flag() {
        let r = verify_flags(&MeanDescriptor::power(2.0).unwrap(), 100, 1);
        assert!(r.passed, "{r:?}");
        assert!(r.checks.iter().all(|c| c.samples == 100));
    }

    #[test]
    fn min_declared_strict_is_caught() {
        let m = MeanDescriptor::min().with_flags(MeanFlags::ALL);
        let r = verify_flags(&m, 50, 2);
        assert!(!r.passed);
        assert!(r.check("strict").unwrap().counterexample.is_some());
        assert!(r.check("symmetric").unwrap().passed());
        assert!(r.check("monotone").unwrap().passed());
    }

    #[test]
    fn non_monotone_gini_is_caught() {
        let m = MeanDescriptor::gini(2.0, 1.0)
            .unwrap()
            .with_flags(MeanFlags::ALL);
        let r = verify_flags(&m, 200, 3);
        let c = r.check("monotone").unwrap();
        let ce = c.counterexample.as_ref().expect("no counterexample");
        let (x, y) = (&ce.x, ce.y.as_ref().unwrap());
        assert!(x.iter().zip(y).all(|(a, b)| a <= b));
        assert!(m.eval(x).unwrap() > m.eval(y).unwrap());
        assert!(r.check("strict").unwrap().passed());
    }

    #[test]
    fn undeclared_flags_are_skipped() {
        let m = MeanDescriptor::gini(2.0, 1.0).unwrap();
        let r = verify_flags(&m, 20, 4);
        assert!(r.passed);
        assert_eq!(r.check("monotone").unwrap().samples, 0);
    }

    #[test]
    fn asymmetric_custom_is_caught() {
        let m = MeanDescriptor::custom(
            "w",
            Arity::Fixed(2),
            Interval::real_line(),
            MeanFlags::ALL,
            |v| 0.25 * v[0] + 0.75 * v[1],
        );
        let r = verify_flags(&m, 50, 5);
        assert!(r.check("symmetric").unwrap().counterexample.is_some());
        assert!(r.check("homogeneous").unwrap().passed());
    }

    #[test]
    fn reports_are_deterministic() {
        let m = MeanDescriptor::min().with_flags(MeanFlags::ALL);
        assert_eq!(verify_flags(&m, 30, 11), verify_flags(&m, 30, 11));
    }
}
