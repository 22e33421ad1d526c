//! Named property suites run against a mean with a fixed seed.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::domain::{min_max, Interval};
use crate::envelope::{ordering_with_estimator, EnvelopeEstimator, EnvelopeKind, FamilyWindow};
use crate::error::{Error, Result};
use crate::extension::{
    barycentric_apply, extension_conjugacy_check, iterative_extension_eval,
    iterative_extension_traced, quasiarithmetic_generator, IterationConfig,
};
use crate::flags::verify_flags;
use crate::generator::GeneratorDescriptor;
use crate::means::{eval_quasiarithmetic, Arity, MeanDescriptor, MeanKind};
use crate::rng::CounterRng;
use crate::sampling::{dominating, non_constant_vector, permuted, positive_vector};

/// Relative tolerance for comparisons between engine evaluations.
pub const SUITE_TOL: f64 = 1e-9;
/// Relative tolerance for the invariance residual `|K(β(x)) − K(x)|`.
pub const INVARIANCE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Flags,
    Extension,
    Conjugacy,
    Envelope,
}

impl Suite {
    pub const ALL: [Suite; 4] = [
        Suite::Flags,
        Suite::Extension,
        Suite::Conjugacy,
        Suite::Envelope,
    ];
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::Flags => "flags",
            Suite::Extension => "extension",
            Suite::Conjugacy => "conjugacy",
            Suite::Envelope => "envelope",
        })
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|k| k.to_string() == s)
            .ok_or_else(|| Error::Parse {
                input: s.to_string(),
                pos: 0,
                msg: "expected flags, extension, conjugacy or envelope".into(),
            })
    }
}

#[derive(Debug, Clone)]
pub struct SuiteOptions {
    /// Random points per property.
    pub samples: usize,
    /// Generators for the conjugacy suite.
    pub generators: Vec<GeneratorDescriptor>,
    pub window: FamilyWindow,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            samples: 50,
            generators: vec![
                GeneratorDescriptor::Power(2.0),
                GeneratorDescriptor::Power(-1.0),
            ],
            window: FamilyWindow::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyResult {
    pub name: String,
    pub samples: usize,
    pub max_residual: f64,
    pub tolerance: f64,
    pub passed: bool,
    /// First failing point.
    pub witness: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub mean: String,
    pub suite: Suite,
    pub seed: u64,
    pub properties: Vec<PropertyResult>,
    pub passed: bool,
}

impl SuiteReport {
    pub fn property(&self, name: &str) -> Option<&PropertyResult> {
        self.properties.iter().find(|p| p.name == name)
    }
}

/// The descriptors shipped as defaults by the command-line tool.
pub fn shipped_means() -> Vec<MeanDescriptor> {
    [
        "power:-1",
        "power:0",
        "power:1",
        "power:2",
        "qa:exp:0.5",
        "gini:1,-1",
        "gini:2,-1",
        "gini:-0.5,1.5",
        "conj(power:2,gini:1,-1)",
    ]
    .iter()
    .map(|s| crate::descriptor::parse_mean(s).expect("shipped descriptors parse"))
    .collect()
}

pub fn verify_suite(
    m: &MeanDescriptor,
    suite: Suite,
    seed: u64,
    cfg: &IterationConfig,
) -> Result<SuiteReport> {
    verify_suite_with(m, suite, seed, cfg, &SuiteOptions::default())
}

pub fn verify_suite_with(
    m: &MeanDescriptor,
    suite: Suite,
    seed: u64,
    cfg: &IterationConfig,
    opts: &SuiteOptions,
) -> Result<SuiteReport> {
    cfg.validate()?;
    let rng = CounterRng::new(seed).split_named(&suite.to_string());
    let properties = match suite {
        Suite::Flags => flag_properties(m, opts.samples, seed),
        Suite::Extension => extension_properties(m, &rng, cfg, opts)?,
        Suite::Conjugacy => conjugacy_properties(m, &rng, cfg, opts)?,
        Suite::Envelope => envelope_properties(m, seed, &rng, cfg, opts)?,
    };
    Ok(SuiteReport {
        mean: m.to_string(),
        suite,
        seed,
        passed: properties.iter().all(|p| p.passed),
        properties,
    })
}

/// Runs `case` on `samples` independent streams. `case` returns the residual
/// and whether the sample passed, plus the point to report on failure.
fn property(
    name: impl Into<String>,
    samples: usize,
    tolerance: f64,
    rng: &CounterRng,
    case: impl Fn(&mut CounterRng, usize) -> Result<(f64, bool, Vec<f64>)> + Sync,
) -> Result<PropertyResult> {
    let name = name.into();
    let stream = rng.split_named(&name);
    let outcomes = (0..samples)
        .into_par_iter()
        .map(|i| case(&mut stream.split(i as u64), i))
        .collect::<Result<Vec<_>>>()?;
    let max_residual = outcomes.iter().map(|o| o.0).fold(0.0, f64::max);
    let witness = outcomes.iter().find(|o| !o.1).map(|o| o.2.clone());
    Ok(PropertyResult {
        name,
        samples,
        max_residual,
        tolerance,
        passed: witness.is_none(),
        witness,
    })
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

fn flag_properties(m: &MeanDescriptor, samples: usize, seed: u64) -> Vec<PropertyResult> {
    verify_flags(m, samples, seed)
        .checks
        .into_iter()
        .filter(|c| c.declared)
        .map(|c| PropertyResult {
            name: format!("flag:{}", c.flag),
            samples: c.samples,
            max_residual: 0.0,
            tolerance: 0.0,
            passed: c.counterexample.is_none(),
            witness: c.counterexample.map(|ce| ce.x),
        })
        .collect()
}

fn bivariate(m: &MeanDescriptor) -> Result<MeanDescriptor> {
    let base = m.bivariate_base();
    if !base.arity().accepts(2) {
        return Err(Error::Precondition(format!(
            "{base} does not accept two arguments, so it has no extension"
        )));
    }
    Ok(base.clone())
}

fn extension_properties(
    m: &MeanDescriptor,
    rng: &CounterRng,
    cfg: &IterationConfig,
    opts: &SuiteOptions,
) -> Result<Vec<PropertyResult>> {
    let base = bivariate(m)?;
    let flags = base.flags();
    let domain = base.domain();
    let n = opts.samples;
    let arity = |i: usize| 3 + i % 2;
    let ext = |x: &[f64]| iterative_extension_eval(&base, x, cfg).map(|r| r.value);
    let mut out = Vec::new();

    out.push(property("symmetry", n, SUITE_TOL, rng, |r, i| {
        let x = non_constant_vector(r, &domain, arity(i));
        let y = permuted(r, &x);
        let (a, b) = (ext(&x)?, ext(&y)?);
        let e = rel(a, b);
        Ok((e, e <= SUITE_TOL, x))
    })?);
    out.push(property("strictness", n, 0.0, rng, |r, i| {
        let x = non_constant_vector(r, &domain, arity(i));
        let v = ext(&x)?;
        let (lo, hi) = min_max(&x);
        Ok((0.0, lo < v && v < hi, x))
    })?);
    out.push(property("bounds", n, 0.0, rng, |r, i| {
        let x = non_constant_vector(r, &domain, arity(i));
        let v = ext(&x)?;
        let (lo, hi) = min_max(&x);
        let e = (lo - v).max(v - hi).max(0.0);
        Ok((e, lo <= v && v <= hi, x))
    })?);
    if flags.monotone {
        out.push(property("monotonicity", n, SUITE_TOL, rng, |r, i| {
            let x = non_constant_vector(r, &domain, arity(i));
            let y = dominating(r, &domain, &x);
            let (a, b) = (ext(&x)?, ext(&y)?);
            let e = ((a - b) / b.abs().max(1.0)).max(0.0);
            Ok((e, e <= SUITE_TOL, x))
        })?);
    }
    if flags.homogeneous && domain.is_cone() {
        out.push(property("homogeneity", n, SUITE_TOL, rng, |r, i| {
            let x = non_constant_vector(r, &domain, arity(i));
            let lambda = r.log_uniform(0.1, 10.0);
            let y: Vec<f64> = x.iter().map(|v| lambda * v).collect();
            let e = rel(lambda * ext(&x)?, ext(&y)?);
            Ok((e, e <= SUITE_TOL, x))
        })?);
    }
    if let MeanKind::Power(p) = base.kind() {
        if *p >= 1.0 {
            out.push(property("convexity", n, SUITE_TOL, rng, |r, i| {
                let x = non_constant_vector(r, &domain, arity(i));
                let y = non_constant_vector(r, &domain, arity(i));
                let t = r.unit();
                let z: Vec<f64> = x
                    .iter()
                    .zip(&y)
                    .map(|(a, b)| t * a + (1.0 - t) * b)
                    .collect();
                let rhs = t * ext(&x)? + (1.0 - t) * ext(&y)?;
                let e = ((ext(&z)? - rhs) / rhs.abs().max(1.0)).max(0.0);
                Ok((e, e <= SUITE_TOL, z))
            })?);
        }
    }
    out.push(property("invariance", n, INVARIANCE_TOL, rng, |r, _| {
        let x = non_constant_vector(r, &domain, 3);
        let bx = barycentric_apply(&base, &x)?;
        let e = rel(ext(&bx)?, ext(&x)?);
        Ok((e, e <= INVARIANCE_TOL, x))
    })?);
    out.push(property("gap_monotonicity", n, 0.0, rng, |r, i| {
        let x = non_constant_vector(r, &domain, arity(i));
        let mut gaps = Vec::new();
        iterative_extension_traced(&base, &x, cfg, &mut |v| {
            let (lo, hi) = min_max(v);
            gaps.push(hi - lo);
        })?;
        let (lo, hi) = min_max(&x);
        gaps.insert(0, hi - lo);
        let worst = gaps.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
        Ok((worst, worst <= 0.0, x))
    })?);
    if let Some(g) = quasiarithmetic_generator(&base) {
        out.push(property(
            "quasiarithmetic_fixed_point",
            n,
            SUITE_TOL,
            rng,
            |r, i| {
                let x = non_constant_vector(r, &g.domain(), arity(i));
                let e = rel(ext(&x)?, eval_quasiarithmetic(&g, &x)?);
                Ok((e, e <= SUITE_TOL, x))
            },
        )?);
    }
    Ok(out)
}

fn conjugacy_properties(
    m: &MeanDescriptor,
    rng: &CounterRng,
    cfg: &IterationConfig,
    opts: &SuiteOptions,
) -> Result<Vec<PropertyResult>> {
    let base = bivariate(m)?;
    let target = base.domain();
    opts.generators
        .iter()
        .map(|g| {
            let domain = conjugation_domain(g, &target)?;
            property(
                format!("conjugacy:{g}"),
                opts.samples,
                SUITE_TOL,
                rng,
                |r, i| {
                    let x = non_constant_vector(r, &domain, 3 + i % 2);
                    let e = extension_conjugacy_check(&base, g, &x, cfg)?;
                    let scale = x.iter().fold(1.0f64, |s, v| s.max(v.abs()));
                    Ok((e / scale, e <= SUITE_TOL * scale, x))
                },
            )
        })
        .collect()
}

/// Points whose image under `g` lands inside `target`.
fn conjugation_domain(g: &GeneratorDescriptor, target: &Interval) -> Result<Interval> {
    let d = g.domain();
    let probe = [d.lo().max(-1e3), d.hi().min(1e3)];
    let ok = [0.5, 2.0, 1e-2, 1e2]
        .into_iter()
        .chain(probe)
        .filter(|t| d.contains(*t))
        .all(|t| target.contains(g.forward(t)));
    if ok {
        Ok(d)
    } else {
        Err(Error::Precondition(format!(
            "generator {g} maps its domain {d} outside {target}"
        )))
    }
}

fn envelope_properties(
    m: &MeanDescriptor,
    seed: u64,
    rng: &CounterRng,
    cfg: &IterationConfig,
    opts: &SuiteOptions,
) -> Result<Vec<PropertyResult>> {
    let est = EnvelopeEstimator::new(m.clone(), opts.window, *cfg)?.seed(seed);
    let arity = |i: usize| match m.arity() {
        Arity::Fixed(k) => k,
        Arity::Variadic => 2 + i % 3,
    };
    let n = opts.samples;
    let mut out = Vec::new();

    out.push(property("sandwich", n, SUITE_TOL, rng, |r, i| {
        let x = positive_vector(r, arity(i), 1e-2, 1e2);
        let v = m.eval_with(&x, cfg)?;
        let lo = est.estimate(&x, EnvelopeKind::LocalLower)?.value;
        let hi = est.estimate(&x, EnvelopeKind::LocalUpper)?.value;
        let e = ((lo - v).max(v - hi) / v.abs().max(1.0)).max(0.0);
        Ok((e, e <= SUITE_TOL, x))
    })?);

    if let Some(GeneratorDescriptor::Power(p)) = quasiarithmetic_generator(m) {
        if opts.window.r_min <= p && p <= opts.window.r_max {
            out.push(property(
                "envelope_fixed_point",
                n,
                SUITE_TOL,
                rng,
                |r, i| {
                    let x = positive_vector(r, arity(i), 1e-2, 1e2);
                    let target = crate::means::power_mean(p, &x);
                    let e = EnvelopeKind::ALL
                        .iter()
                        .map(|&k| est.estimate(&x, k).map(|v| rel(v.value, target)))
                        .collect::<Result<Vec<_>>>()?
                        .into_iter()
                        .fold(0.0, f64::max);
                    Ok((e, e <= SUITE_TOL, x))
                },
            )?);
        }
    }

    if m.bivariate_base().arity().accepts(2) && m.bivariate_base().flags().strict {
        let ext = MeanDescriptor::extended(m.bivariate_base().clone())?;
        let ext_est = EnvelopeEstimator::new(ext, opts.window, *cfg)?.seed(seed);
        let count = n.min(10);
        out.push(property("ordering_chain", count, 0.0, rng, |r, _| {
            let x = positive_vector(r, 3, 1e-2, 1e2);
            let rep = ordering_with_estimator(&ext_est, &x, cfg)?;
            Ok((0.0, rep.holds, x))
        })?);
    }

    // conjugating by t ↦ t² maps P_r to P_{2r}
    let gen = GeneratorDescriptor::Power(2.0);
    let conj = MeanDescriptor::conjugate(m.clone(), gen.clone());
    let conj_est = EnvelopeEstimator::new(conj, opts.window, *cfg)?.seed(seed);
    let arities: Vec<usize> = (2..=4).filter(|&k| m.arity().accepts(k)).collect();
    let mut mapped = BTreeMap::new();
    for &k in &arities {
        let pts = conj_est.sample_points(k)?;
        mapped.insert(
            k,
            pts.iter()
                .map(|x| x.iter().map(|t| t * t).collect())
                .collect(),
        );
    }
    let base_est = EnvelopeEstimator::new(m.clone(), opts.window.scaled(0.5), *cfg)?
        .seed(seed)
        .with_sample_sets(mapped);
    out.push(property(
        "conjugation_transfer",
        n,
        SUITE_TOL,
        rng,
        |r, i| {
            let x = positive_vector(r, arity(i), 1e-2, 1e2);
            let sq: Vec<f64> = x.iter().map(|t| t * t).collect();
            let e = [EnvelopeKind::LocalLower, EnvelopeKind::LocalUpper]
                .iter()
                .map(|&k| -> Result<f64> {
                    let direct = conj_est.estimate(&x, k)?.value;
                    let via = gen.inverse(base_est.estimate(&sq, k)?.value);
                    Ok(rel(direct, via))
                })
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .fold(0.0, f64::max);
            Ok((e, e <= SUITE_TOL, x))
        },
    )?);
    Ok(out)
}
