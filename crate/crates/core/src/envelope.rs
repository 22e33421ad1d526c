//! Quasiarithmetic envelopes of a mean, restricted to power generators.
//!
//! The lower envelope `ℒ_M(x)` is the supremum of `QA_f(x)` over generators
//! with `QA_f ≤ M`; the upper envelope `𝒰_M` is the infimum over `QA_f ≥ M`.
//! Local envelopes compare at one arity, global ones at every arity. Here `f`
//! ranges over `π_r`, `r` in a window, so `QA_f = P_r`. Because `P_r(x)` is
//! non-decreasing in `r`, the admissible exponents form a half-line and the
//! envelope is `P_{r*}(x)` at its end point, found by a grid pass followed by
//! bisection.
//!
//! Restricting the family makes the lower estimate at most the true `ℒ_M`
//! and the upper estimate at least the true `𝒰_M`. Admissibility is sampled:
//! an exponent passes when `P_r` and `M` compare correctly on a fixed,
//! seeded set of points per arity, plus the point being estimated.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{is_constant, min_max, Interval};
use crate::error::{Error, Result};
use crate::extension::{iterative_extension_eval, IterationConfig};
use crate::means::{power_mean, MeanDescriptor};
use crate::rng::CounterRng;
use crate::sampling::positive_vector;

pub const DEFAULT_SAMPLES: usize = 48;
pub const DEFAULT_P_MAX: usize = 4;
/// Membership margins smaller than this (relative) are reported as boundary.
pub const BORDERLINE_MARGIN: f64 = 1e-9;

/// Search window over power exponents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FamilyWindow {
    pub r_min: f64,
    pub r_max: f64,
    pub grid: usize,
    pub refine_tol: f64,
}

impl Default for FamilyWindow {
    fn default() -> Self {
        Self {
            r_min: -20.0,
            r_max: 20.0,
            grid: 81,
            refine_tol: 1e-6,
        }
    }
}

impl FamilyWindow {
    pub fn validate(&self) -> Result<()> {
        if !(self.r_min.is_finite() && self.r_max.is_finite() && self.r_min < self.r_max) {
            return Err(Error::InvalidConfig(format!(
                "window needs finite r_min < r_max, got [{}, {}]",
                self.r_min, self.r_max
            )));
        }
        if self.grid < 3 {
            return Err(Error::InvalidConfig(format!(
                "window grid needs at least 3 points, got {}",
                self.grid
            )));
        }
        if self.refine_tol.is_nan() || self.refine_tol <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "refine_tol must be positive, got {}",
                self.refine_tol
            )));
        }
        Ok(())
    }

    /// Evenly spaced exponents including both ends.
    pub fn grid_points(&self) -> Vec<f64> {
        let span = self.r_max - self.r_min;
        let last = (self.grid - 1) as f64;
        (0..self.grid)
            .map(|i| self.r_min + span * i as f64 / last)
            .collect()
    }

    /// The window scaled by `c > 0`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            r_min: self.r_min * c,
            r_max: self.r_max * c,
            grid: self.grid,
            refine_tol: self.refine_tol * c,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvelopeKind {
    LocalLower,
    LocalUpper,
    GlobalLower,
    GlobalUpper,
}

impl EnvelopeKind {
    pub const ALL: [EnvelopeKind; 4] = [
        EnvelopeKind::LocalLower,
        EnvelopeKind::LocalUpper,
        EnvelopeKind::GlobalLower,
        EnvelopeKind::GlobalUpper,
    ];

    pub fn side(self) -> Side {
        match self {
            EnvelopeKind::LocalLower | EnvelopeKind::GlobalLower => Side::Lower,
            EnvelopeKind::LocalUpper | EnvelopeKind::GlobalUpper => Side::Upper,
        }
    }

    pub fn is_global(self) -> bool {
        matches!(self, EnvelopeKind::GlobalLower | EnvelopeKind::GlobalUpper)
    }
}

impl fmt::Display for EnvelopeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EnvelopeKind::LocalLower => "local_lower",
            EnvelopeKind::LocalUpper => "local_upper",
            EnvelopeKind::GlobalLower => "global_lower",
            EnvelopeKind::GlobalUpper => "global_upper",
        })
    }
}

impl FromStr for EnvelopeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EnvelopeKind::ALL
            .into_iter()
            .find(|k| k.to_string() == s)
            .ok_or_else(|| Error::Parse {
                input: s.to_string(),
                pos: 0,
                msg: "expected local_lower, local_upper, global_lower or global_upper".into(),
            })
    }
}

/// Arities at which membership is sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MembershipScope {
    Arity(usize),
    /// Every arity from 2 to the bound.
    UpTo(usize),
}

impl MembershipScope {
    fn arities(self) -> Vec<usize> {
        match self {
            MembershipScope::Arity(n) => vec![n],
            MembershipScope::UpTo(p) => (2..=p.max(2)).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnvelopeEstimate {
    pub kind: EnvelopeKind,
    pub value: f64,
    /// End point `r*` of the admissible exponents.
    pub witness_r: Option<f64>,
    /// No exponent of the window is admissible; `value` is `min(x)` for
    /// lower kinds and `max(x)` for upper kinds.
    pub family_empty: bool,
    /// `r*` sits at the window edge, so the true end point may lie beyond it.
    pub clamped: bool,
}

/// End point of the admissible exponents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Boundary {
    pub r: Option<f64>,
    pub clamped: bool,
}

struct SampleSet {
    points: Vec<Vec<f64>>,
    values: Vec<f64>,
}

/// Envelope estimation for one mean, caching sample sets and boundaries.
pub struct EnvelopeEstimator {
    mean: MeanDescriptor,
    window: FamilyWindow,
    cfg: IterationConfig,
    samples: usize,
    seed: u64,
    p_max: usize,
    explicit: BTreeMap<usize, Vec<Vec<f64>>>,
    sets: Mutex<HashMap<usize, Arc<SampleSet>>>,
    boundaries: Mutex<HashMap<(Side, MembershipScope), Boundary>>,
}

impl EnvelopeEstimator {
    pub fn new(mean: MeanDescriptor, window: FamilyWindow, cfg: IterationConfig) -> Result<Self> {
        window.validate()?;
        cfg.validate()?;
        let domain = mean.domain();
        if !(domain.contains(1e-3) && domain.contains(1e3)) {
            return Err(Error::Precondition(format!(
                "envelopes need a mean defined on the positive half-line, {mean} lives on {domain}"
            )));
        }
        Ok(Self {
            mean,
            window,
            cfg,
            samples: DEFAULT_SAMPLES,
            seed: 0,
            p_max: DEFAULT_P_MAX,
            explicit: BTreeMap::new(),
            sets: Mutex::new(HashMap::new()),
            boundaries: Mutex::new(HashMap::new()),
        })
    }

    /// Random points per arity (on top of the fixed ratio grid).
    pub fn samples(mut self, samples: usize) -> Self {
        self.samples = samples;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Largest arity sampled by global kinds.
    pub fn p_max(mut self, p_max: usize) -> Self {
        self.p_max = p_max.max(2);
        self
    }

    /// Replaces the generated points at the given arities.
    pub fn with_sample_sets(mut self, sets: BTreeMap<usize, Vec<Vec<f64>>>) -> Self {
        self.explicit = sets;
        self
    }

    pub fn mean(&self) -> &MeanDescriptor {
        &self.mean
    }

    pub fn window(&self) -> &FamilyWindow {
        &self.window
    }

    /// The points sampled at arity `n`.
    pub fn sample_points(&self, n: usize) -> Result<Vec<Vec<f64>>> {
        Ok(self.sample_set(n)?.points.clone())
    }

    fn generate_points(&self, n: usize) -> Vec<Vec<f64>> {
        if let Some(p) = self.explicit.get(&n) {
            return p.clone();
        }
        let mut rng = CounterRng::new(self.seed)
            .split_named("envelope")
            .split(n as u64);
        // (1, …, 1, t) over a log grid probes the extreme ratios
        let mut points: Vec<Vec<f64>> = (-24..=24)
            .filter(|&k| k != 0)
            .map(|k| {
                let mut v = vec![1.0; n];
                v[n - 1] = 10f64.powf(k as f64 / 4.0);
                v
            })
            .collect();
        points.extend((0..self.samples).map(|_| positive_vector(&mut rng, n, 1e-2, 1e2)));
        points.retain(|x| !is_constant(x));
        points
    }

    fn sample_set(&self, n: usize) -> Result<Arc<SampleSet>> {
        if let Some(s) = self.sets.lock().unwrap().get(&n) {
            return Ok(s.clone());
        }
        let points = self.generate_points(n);
        let values = points
            .par_iter()
            .map(|x| self.mean.eval_with(x, &self.cfg))
            .collect::<Result<Vec<_>>>()?;
        let set = Arc::new(SampleSet { points, values });
        self.sets.lock().unwrap().insert(n, set.clone());
        Ok(set)
    }

    fn scope_arities(&self, scope: MembershipScope) -> Vec<usize> {
        scope
            .arities()
            .into_iter()
            .filter(|&n| self.mean.arity().accepts(n))
            .collect()
    }

    fn member_tol(&self) -> f64 {
        100.0 * self.cfg.rel_tol
    }

    /// Worst signed relative slack of `P_r` against the mean over the scope:
    /// non-negative when `P_r` lies on the correct side everywhere sampled.
    pub fn margin(&self, side: Side, r: f64, scope: MembershipScope) -> Result<f64> {
        let mut worst = f64::INFINITY;
        for n in self.scope_arities(scope) {
            let set = self.sample_set(n)?;
            for (x, &m) in set.points.iter().zip(&set.values) {
                worst = worst.min(slack(side, power_mean(r, x), m));
            }
        }
        Ok(worst)
    }

    /// Whether `P_r` is admissible on the sampled points of `scope`.
    pub fn member(&self, side: Side, r: f64, scope: MembershipScope) -> Result<bool> {
        Ok(self.margin(side, r, scope)? >= -self.member_tol())
    }

    /// The end point of the admissible exponents on the sample sets.
    pub fn boundary(&self, side: Side, scope: MembershipScope) -> Result<Boundary> {
        if let Some(b) = self.boundaries.lock().unwrap().get(&(side, scope)) {
            return Ok(*b);
        }
        for n in self.scope_arities(scope) {
            self.sample_set(n)?;
        }
        let tol = self.member_tol();
        let b = search_boundary(&self.window, side, |r| {
            self.margin(side, r, scope).map(|m| m >= -tol)
        })?;
        self.boundaries.lock().unwrap().insert((side, scope), b);
        Ok(b)
    }

    /// The envelope of the mean at `x`.
    pub fn estimate(&self, x: &[f64], kind: EnvelopeKind) -> Result<EnvelopeEstimate> {
        Interval::positive().check(x)?;
        if x.is_empty() {
            return Err(Error::Arity {
                expected: "at least 1".into(),
                got: 0,
            });
        }
        let n = x.len();
        let side = kind.side();
        let scope = if kind.is_global() {
            MembershipScope::UpTo(self.p_max.max(n))
        } else {
            if !self.mean.arity().accepts(n) {
                return Err(Error::Arity {
                    expected: self.mean.arity().to_string(),
                    got: n,
                });
            }
            MembershipScope::Arity(n)
        };
        let sampled = self.boundary(side, scope)?;
        let at_x = if is_constant(x) {
            Boundary {
                r: None,
                clamped: false,
            }
        } else {
            let m = self.mean.eval_with(x, &self.cfg)?;
            let tol = self.member_tol();
            search_boundary(&self.window, side, |r| {
                Ok(slack(side, power_mean(r, x), m) >= -tol)
            })?
        };
        // the admissible set at x alone only matters when x is not constant
        let combined = if is_constant(x) {
            sampled
        } else {
            match (sampled.r, at_x.r) {
                (Some(a), Some(b)) => {
                    let pick_a = match side {
                        Side::Lower => a <= b,
                        Side::Upper => a >= b,
                    };
                    if pick_a {
                        sampled
                    } else {
                        at_x
                    }
                }
                _ => Boundary {
                    r: None,
                    clamped: false,
                },
            }
        };
        let (lo, hi) = min_max(x);
        let value = if is_constant(x) {
            x[0]
        } else {
            match (combined.r, side) {
                (Some(r), _) => power_mean(r, x),
                (None, Side::Lower) => lo,
                (None, Side::Upper) => hi,
            }
        };
        Ok(EnvelopeEstimate {
            kind,
            value,
            witness_r: combined.r,
            family_empty: combined.r.is_none(),
            clamped: combined.clamped,
        })
    }
}

/// `(M − P)` for lower, `(P − M)` for upper, relative to `max(1, |M|)`.
fn slack(side: Side, p: f64, m: f64) -> f64 {
    let d = match side {
        Side::Lower => m - p,
        Side::Upper => p - m,
    };
    d / m.abs().max(1.0)
}

/// Grid pass then bisection for the end point of a half-line of admissible
/// exponents: `(-∞, r*]` for lower, `[r*, ∞)` for upper.
fn search_boundary(
    window: &FamilyWindow,
    side: Side,
    member: impl Fn(f64) -> Result<bool> + Sync,
) -> Result<Boundary> {
    let grid = window.grid_points();
    let pass = grid
        .par_iter()
        .map(|&r| member(r))
        .collect::<Result<Vec<bool>>>()?;
    let last = grid.len() - 1;
    let (mut ok, mut bad, clamped) = match side {
        Side::Lower => match pass.iter().rposition(|&p| p) {
            None => {
                return Ok(Boundary {
                    r: None,
                    clamped: false,
                })
            }
            Some(i) if i == last => {
                return Ok(Boundary {
                    r: Some(grid[i]),
                    clamped: true,
                })
            }
            Some(i) => (grid[i], grid[i + 1], false),
        },
        Side::Upper => match pass.iter().position(|&p| p) {
            None => {
                return Ok(Boundary {
                    r: None,
                    clamped: false,
                })
            }
            Some(0) => {
                return Ok(Boundary {
                    r: Some(grid[0]),
                    clamped: true,
                })
            }
            Some(i) => (grid[i], grid[i - 1], false),
        },
    };
    while (bad - ok).abs() > window.refine_tol {
        let mid = 0.5 * (ok + bad);
        if member(mid)? {
            ok = mid;
        } else {
            bad = mid;
        }
    }
    Ok(Boundary {
        r: Some(ok),
        clamped,
    })
}

/// Whether `P_r` lies below (`Lower`) or above (`Upper`) `m` on sampled points.
pub fn power_family_membership(
    m: &MeanDescriptor,
    side: Side,
    r: f64,
    scope: MembershipScope,
    samples: usize,
    seed: u64,
) -> Result<bool> {
    EnvelopeEstimator::new(
        m.clone(),
        FamilyWindow::default(),
        IterationConfig::default(),
    )?
    .samples(samples)
    .seed(seed)
    .member(side, r, scope)
}

/// Envelope of `m` at `x` with default sampling.
pub fn envelope_estimate(
    m: &MeanDescriptor,
    x: &[f64],
    kind: EnvelopeKind,
    window: &FamilyWindow,
    cfg: &IterationConfig,
) -> Result<EnvelopeEstimate> {
    EnvelopeEstimator::new(m.clone(), *window, *cfg)?.estimate(x, kind)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderingReport {
    pub x: Vec<f64>,
    pub global_lower: f64,
    pub local_lower: f64,
    pub extension: f64,
    pub local_upper: f64,
    pub global_upper: f64,
    pub holds: bool,
    pub violations: Vec<String>,
}

/// Checks `ℒ^G ≤ ℒ ≤ M^e ≤ 𝒰 ≤ 𝒰^G` at `x` for the envelopes of `M^e`.
pub fn envelope_ordering_check(
    m: &MeanDescriptor,
    x: &[f64],
    window: &FamilyWindow,
    cfg: &IterationConfig,
) -> Result<OrderingReport> {
    let ext = MeanDescriptor::extended(m.bivariate_base().clone())?;
    let est = EnvelopeEstimator::new(ext.clone(), *window, *cfg)?;
    ordering_with_estimator(&est, x, cfg)
}

/// As [`envelope_ordering_check`] with a prepared estimator for `M^e`.
pub fn ordering_with_estimator(
    est: &EnvelopeEstimator,
    x: &[f64],
    cfg: &IterationConfig,
) -> Result<OrderingReport> {
    let value = |k| est.estimate(x, k).map(|e| e.value);
    let extension = est.mean().eval_with(x, cfg)?;
    let chain = [
        ("global_lower", value(EnvelopeKind::GlobalLower)?),
        ("local_lower", value(EnvelopeKind::LocalLower)?),
        ("extension", extension),
        ("local_upper", value(EnvelopeKind::LocalUpper)?),
        ("global_upper", value(EnvelopeKind::GlobalUpper)?),
    ];
    let tol = (est.member_tol() + 10.0 * cfg.rel_tol) * extension.abs().max(1.0);
    let violations: Vec<String> = chain
        .windows(2)
        .filter(|w| w[0].1 > w[1].1 + tol)
        .map(|w| format!("{} = {} exceeds {} = {}", w[0].0, w[0].1, w[1].0, w[1].1))
        .collect();
    Ok(OrderingReport {
        x: x.to_vec(),
        global_lower: chain[0].1,
        local_lower: chain[1].1,
        extension,
        local_upper: chain[3].1,
        global_upper: chain[4].1,
        holds: violations.is_empty(),
        violations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Discrepancy {
    pub check: &'static str,
    pub side: Option<Side>,
    pub r: Option<f64>,
    pub x: Option<Vec<f64>>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransferReport {
    pub mean: String,
    /// Exponents compared for `𝒢^±(M^e)` against `ℱ^±(M)`.
    pub grid_points: usize,
    pub agreements: usize,
    /// Exponents whose sampled margin is within `1e-9` of zero on either side.
    pub boundary_cases: usize,
    pub local: (Boundary, Boundary),
    pub global: (Boundary, Boundary),
    pub chain_points: usize,
    pub discrepancies: Vec<Discrepancy>,
    pub passed: bool,
}

/// Checks, within the power family, that extending a bivariate mean leaves
/// its envelopes in place:
///
/// * (a) `P_r ∈ 𝒢^±(M^e)` iff `P_r ∈ ℱ^±(M)` for every grid exponent;
/// * (c) the global envelopes of `M^e` at two arguments equal the local
///   envelopes of `M`;
/// * (d) `ℒ^G_{M^e} ≤ (ℒ_M)^e ≤ M^e` at sampled points of arity 3 and up.
pub fn transfer_theorem_check(
    m: &MeanDescriptor,
    window: &FamilyWindow,
    samples: usize,
    seed: u64,
    cfg: &IterationConfig,
) -> Result<TransferReport> {
    let base = m.bivariate_base().clone();
    let f = base.flags();
    if !(f.symmetric && f.monotone && f.strict) {
        return Err(Error::Precondition(format!(
            "{base} must be declared symmetric, monotone and strict"
        )));
    }
    let ext = MeanDescriptor::extended(base.clone())?;
    let local = EnvelopeEstimator::new(base.clone(), *window, *cfg)?
        .samples(samples)
        .seed(seed);
    let global = EnvelopeEstimator::new(ext.clone(), *window, *cfg)?
        .samples(samples)
        .seed(seed);
    let two = MembershipScope::Arity(2);
    let all = MembershipScope::UpTo(global.p_max);
    let tol = local.member_tol();
    let mut discrepancies = Vec::new();
    let (mut agreements, mut boundary_cases) = (0, 0);
    let grid = window.grid_points();

    for side in [Side::Lower, Side::Upper] {
        for &r in &grid {
            let (ml, mg) = (local.margin(side, r, two)?, global.margin(side, r, all)?);
            let (il, ig) = (ml >= -tol, mg >= -tol);
            if ml.abs() <= BORDERLINE_MARGIN || mg.abs() <= BORDERLINE_MARGIN {
                boundary_cases += 1;
            } else if il == ig {
                agreements += 1;
            } else {
                discrepancies.push(Discrepancy {
                    check: "a",
                    side: Some(side),
                    r: Some(r),
                    x: None,
                    detail: format!(
                        "local member {il} (margin {ml}), global member {ig} (margin {mg})"
                    ),
                });
            }
        }
    }

    let lb = (
        local.boundary(Side::Lower, two)?,
        local.boundary(Side::Upper, two)?,
    );
    let gb = (
        global.boundary(Side::Lower, all)?,
        global.boundary(Side::Upper, all)?,
    );
    for (side, l, g) in [(Side::Lower, lb.0, gb.0), (Side::Upper, lb.1, gb.1)] {
        let agree = match (l.r, g.r) {
            (Some(a), Some(b)) => (a - b).abs() <= 2.0 * window.refine_tol,
            (None, None) => true,
            _ => false,
        };
        if !agree {
            discrepancies.push(Discrepancy {
                check: "c",
                side: Some(side),
                r: l.r.or(g.r),
                x: None,
                detail: format!("local end point {:?}, global end point {:?}", l.r, g.r),
            });
        }
    }

    let root = CounterRng::new(seed).split_named("transfer");
    let points: Vec<Vec<f64>> = (0..samples)
        .map(|i| {
            let n = 3 + i % (global.p_max.max(3) - 2);
            positive_vector(&mut root.split(i as u64), n, 1e-2, 1e2)
        })
        .collect();
    let chain = points
        .par_iter()
        .map(|x| -> Result<Option<Discrepancy>> {
            let (lo, _) = min_max(x);
            let me = ext.eval_with(x, cfg)?;
            let lg = gb.0.r.map_or(lo, |r| power_mean(r, x));
            let le = match lb.0.r {
                Some(r) => iterative_extension_eval(&MeanDescriptor::power(r)?, x, cfg)?.value,
                None => lo,
            };
            let t = (tol + 10.0 * cfg.rel_tol) * me.abs().max(1.0);
            Ok((lg > le + t || le > me + t).then(|| Discrepancy {
                check: "d",
                side: Some(Side::Lower),
                r: lb.0.r,
                x: Some(x.clone()),
                detail: format!("global lower {lg}, extended local lower {le}, extension {me}"),
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    discrepancies.extend(chain.into_iter().flatten());

    Ok(TransferReport {
        mean: base.to_string(),
        grid_points: grid.len(),
        agreements,
        boundary_cases,
        local: lb,
        global: gb,
        chain_points: points.len(),
        passed: discrepancies.is_empty(),
        discrepancies,
    })
}
