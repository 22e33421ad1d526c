//! Comparability regions of Gini means and a numerical check of the
//! comparison of their extensions.
//!
//! For parameter pairs `a = (p, q)` and `b = (r, s)`:
//!
//! * `Δ∞`: `G_a ≤ G_b` for every arity, iff `min a ≤ min b` and `max a ≤ max b`;
//! * `Δ₂`: `G_a ≤ G_b` for two arguments, iff `p + q ≤ r + s`,
//!   `m(p, q) ≤ m(r, s)` and `μ(p, q) ≤ μ(r, s)`;
//! * `Mon_G`: `G_{p,q}` is monotone iff `pq ≤ 0`.
//!
//! For monotone pairs the extensions satisfy `G_a^e ≤ G_b^e` exactly when the
//! parameters lie in `Δ₂`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extension::{iterative_extension_eval, IterationConfig};
use crate::means::{gini_mean, MeanDescriptor};
use crate::rng::CounterRng;
use crate::sampling::positive_vector;

/// Distance to a region boundary below which a verdict is flagged.
pub const BOUNDARY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GiniParams {
    pub r: f64,
    pub s: f64,
}

impl GiniParams {
    pub fn new(r: f64, s: f64) -> Result<Self> {
        if !r.is_finite() || !s.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "Gini parameters ({r}, {s}) must be finite"
            )));
        }
        Ok(Self { r, s })
    }

    /// Parses `R,S`.
    pub fn parse(text: &str) -> Result<Self> {
        let m = crate::descriptor::parse_mean(&format!("gini:{}", text.trim()))?;
        match m.kind() {
            crate::means::MeanKind::Gini(r, s) => Ok(Self { r: *r, s: *s }),
            _ => unreachable!("gini: prefix always yields a Gini mean"),
        }
    }

    pub fn sum(&self) -> f64 {
        self.r + self.s
    }

    pub fn min(&self) -> f64 {
        self.r.min(self.s)
    }

    pub fn max(&self) -> f64 {
        self.r.max(self.s)
    }

    pub fn mean(&self) -> MeanDescriptor {
        MeanDescriptor::gini(self.r, self.s).expect("parameters are finite")
    }

    /// `(s, r)`; every predicate is invariant under this swap.
    pub fn swapped(&self) -> Self {
        Self {
            r: self.s,
            s: self.r,
        }
    }
}

/// `min(p, q)` if both are non-negative, `max(p, q)` if both are
/// non-positive, `0` otherwise.
pub fn m_func(p: f64, q: f64) -> f64 {
    if p >= 0.0 && q >= 0.0 {
        p.min(q)
    } else if p <= 0.0 && q <= 0.0 {
        p.max(q)
    } else {
        0.0
    }
}

/// `(|p| − |q|) / (p − q)`, and `sign(p)` on the diagonal with `sign(0) = 0`.
pub fn mu_func(p: f64, q: f64) -> f64 {
    if p == q {
        if p > 0.0 {
            1.0
        } else if p < 0.0 {
            -1.0
        } else {
            0.0
        }
    } else {
        (p.abs() - q.abs()) / (p - q)
    }
}

pub fn in_delta_inf(a: GiniParams, b: GiniParams) -> bool {
    a.min() <= b.min() && a.max() <= b.max()
}

pub fn in_delta_2(a: GiniParams, b: GiniParams) -> bool {
    a.sum() <= b.sum()
        && m_func(a.r, a.s) <= m_func(b.r, b.s)
        && mu_func(a.r, a.s) <= mu_func(b.r, b.s)
}

/// `pq ≤ 0`.
pub fn in_mon_g(a: GiniParams) -> bool {
    a.r * a.s <= 0.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MonG {
    pub first: bool,
    pub second: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionReport {
    pub in_delta_inf: bool,
    pub in_delta_2: bool,
    pub in_mon_g: MonG,
    pub m_values: (f64, f64),
    pub mu_values: (f64, f64),
    /// Some defining inequality is decided by a margin in `(0, 1e-12]`.
    pub boundary: bool,
}

pub fn region_report(a: GiniParams, b: GiniParams) -> RegionReport {
    let m_values = (m_func(a.r, a.s), m_func(b.r, b.s));
    let mu_values = (mu_func(a.r, a.s), mu_func(b.r, b.s));
    let margins = [
        b.min() - a.min(),
        b.max() - a.max(),
        b.sum() - a.sum(),
        m_values.1 - m_values.0,
        mu_values.1 - mu_values.0,
    ];
    RegionReport {
        in_delta_inf: in_delta_inf(a, b),
        in_delta_2: in_delta_2(a, b),
        in_mon_g: MonG {
            first: in_mon_g(a),
            second: in_mon_g(b),
        },
        m_values,
        mu_values,
        boundary: margins.iter().any(|d| *d != 0.0 && d.abs() <= BOUNDARY_TOL),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// In `Δ₂` and every sampled inequality held.
    Holds,
    /// In `Δ₂` but a sampled point violated the inequality.
    Violated,
    /// Outside `Δ₂` and a strict violation was found, as expected.
    CounterexampleFound,
    /// Outside `Δ₂` and the search budget found no violation.
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub x: Vec<f64>,
    /// `G_a^e(x)`.
    pub lhs: f64,
    /// `G_b^e(x)`.
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerdictReport {
    pub verdict: Verdict,
    pub in_delta_2: bool,
    /// Both pairs are monotone; outside `Mon_G` the check is exploratory.
    pub in_mon_g: bool,
    pub points_checked: usize,
    /// Largest `(lhs − rhs) / max(1, |rhs|)` seen.
    pub max_excess: f64,
    pub witness: Option<Witness>,
    /// In `Δ₂ \ Δ∞`: a three-argument point where the plain (non-extended)
    /// Gini means are out of order.
    pub plain_multivariate_witness: Option<Witness>,
    pub boundary: bool,
}

impl VerdictReport {
    /// False only for a sampled violation inside `Δ₂` at monotone parameters.
    pub fn consistent(&self) -> bool {
        !(self.verdict == Verdict::Violated && self.in_mon_g && !self.boundary)
    }
}

/// Per-coordinate grid size of the bivariate counterexample search.
pub const SEARCH_GRID: usize = 64;
/// Random points tried after the grid, at each of arities 2 and 3.
pub const SEARCH_RANDOM: usize = 1000;
/// Coordinates of search points span `[1/SEARCH_SPAN, SEARCH_SPAN]`.
pub const SEARCH_SPAN: f64 = 1e6;

/// Samples `G_a^e ≤ G_b^e` (inside `Δ₂`) or searches for a strict violation
/// (outside `Δ₂`).
///
/// Inside `Δ₂`, `trials` random points are checked at each arity 2, 3 and 4.
pub fn corollary_check(
    a: GiniParams,
    b: GiniParams,
    trials: usize,
    seed: u64,
    cfg: &IterationConfig,
) -> Result<VerdictReport> {
    cfg.validate()?;
    let region = region_report(a, b);
    let mon = in_mon_g(a) && in_mon_g(b);
    if !mon {
        log::info!("parameters outside Mon_G; the comparison check is exploratory");
    }
    let rng = CounterRng::new(seed);
    let (ma, mb) = (a.mean(), b.mean());
    let tol = 10.0 * cfg.rel_tol;

    if region.in_delta_2 {
        let points: Vec<(usize, usize)> = (2..=4)
            .flat_map(|n| (0..trials).map(move |i| (n, i)))
            .collect();
        let results = points
            .par_iter()
            .map(|&(n, i)| {
                let mut r = rng.split(n as u64).split(i as u64);
                let x = positive_vector(&mut r, n, 1e-2, 1e2);
                let lhs = iterative_extension_eval(&ma, &x, cfg)?.value;
                let rhs = iterative_extension_eval(&mb, &x, cfg)?.value;
                Ok(Witness { x, lhs, rhs })
            })
            .collect::<Result<Vec<_>>>()?;
        let excess = |w: &Witness| (w.lhs - w.rhs) / w.rhs.abs().max(1.0);
        let worst = results
            .iter()
            .max_by(|p, q| excess(p).total_cmp(&excess(q)))
            .cloned();
        let max_excess = worst.as_ref().map_or(f64::NEG_INFINITY, excess);
        let violated = max_excess > tol;
        let plain = if region.in_delta_inf {
            None
        } else {
            plain_three_point_search(a, b, &rng.split_named("plain"))
        };
        return Ok(VerdictReport {
            verdict: if violated {
                Verdict::Violated
            } else {
                Verdict::Holds
            },
            in_delta_2: true,
            in_mon_g: mon,
            points_checked: results.len(),
            max_excess,
            witness: worst.filter(|_| violated),
            plain_multivariate_witness: plain,
            boundary: region.boundary,
        });
    }

    let (found, checked) = bivariate_search(a, b, tol, &rng.split_named("bivariate"));
    let (found, checked) = match found {
        Some(w) => (Some(w), checked),
        None => {
            let (w, more) = ternary_search(&ma, &mb, tol, &rng.split_named("ternary"), cfg)?;
            (w, checked + more)
        }
    };
    let max_excess = found.as_ref().map_or(f64::NEG_INFINITY, |w| {
        (w.lhs - w.rhs) / w.rhs.abs().max(1.0)
    });
    Ok(VerdictReport {
        verdict: if found.is_some() {
            Verdict::CounterexampleFound
        } else {
            Verdict::Inconclusive
        },
        in_delta_2: false,
        in_mon_g: mon,
        points_checked: checked,
        max_excess,
        witness: found,
        plain_multivariate_witness: None,
        boundary: region.boundary,
    })
}

/// The extension of a bivariate mean agrees with the mean at arity 2, so the
/// two-argument search evaluates the Gini means directly.
fn bivariate_search(
    a: GiniParams,
    b: GiniParams,
    tol: f64,
    rng: &CounterRng,
) -> (Option<Witness>, usize) {
    let ln_span = SEARCH_SPAN.ln();
    let grid: Vec<f64> = (0..SEARCH_GRID)
        .map(|i| (-ln_span + 2.0 * ln_span * i as f64 / (SEARCH_GRID - 1) as f64).exp())
        .collect();
    let mut candidates: Vec<[f64; 2]> =
        Vec::with_capacity(SEARCH_GRID * SEARCH_GRID + SEARCH_RANDOM);
    for &u in &grid {
        for &v in &grid {
            if u != v {
                candidates.push([u, v]);
            }
        }
    }
    let mut r = rng.clone();
    for _ in 0..SEARCH_RANDOM {
        candidates.push([
            r.log_uniform(1.0 / SEARCH_SPAN, SEARCH_SPAN),
            r.log_uniform(1.0 / SEARCH_SPAN, SEARCH_SPAN),
        ]);
    }
    let best = candidates
        .par_iter()
        .filter(|x| x[0] != x[1])
        .map(|x| {
            let lhs = gini_mean(a.r, a.s, x);
            let rhs = gini_mean(b.r, b.s, x);
            ((lhs - rhs) / rhs.abs().max(1.0), x, lhs, rhs)
        })
        .max_by(|p, q| {
            p.0.total_cmp(&q.0)
                .then_with(|| q.1.partial_cmp(p.1).unwrap())
        });
    let checked = candidates.len();
    match best {
        Some((e, x, lhs, rhs)) if e > tol && lhs.is_finite() && rhs.is_finite() => (
            Some(Witness {
                x: x.to_vec(),
                lhs,
                rhs,
            }),
            checked,
        ),
        _ => (None, checked),
    }
}

fn ternary_search(
    ma: &MeanDescriptor,
    mb: &MeanDescriptor,
    tol: f64,
    rng: &CounterRng,
    cfg: &IterationConfig,
) -> Result<(Option<Witness>, usize)> {
    let results = (0..SEARCH_RANDOM)
        .into_par_iter()
        .map(|i| {
            let mut r = rng.split(i as u64);
            let x = positive_vector(&mut r, 3, 1e-3, 1e3);
            let lhs = iterative_extension_eval(ma, &x, cfg)?.value;
            let rhs = iterative_extension_eval(mb, &x, cfg)?.value;
            Ok(Witness { x, lhs, rhs })
        })
        .collect::<Result<Vec<_>>>()?;
    let found = results
        .into_iter()
        .find(|w| (w.lhs - w.rhs) / w.rhs.abs().max(1.0) > tol);
    Ok((found, SEARCH_RANDOM))
}

/// Looks for `x ∈ (0, ∞)³` with `G_a(x) > G_b(x)` for the plain means.
fn plain_three_point_search(a: GiniParams, b: GiniParams, rng: &CounterRng) -> Option<Witness> {
    let mut r = rng.clone();
    (0..SEARCH_RANDOM).find_map(|_| {
        let x = positive_vector(&mut r, 3, 1e-3, 1e3);
        let lhs = gini_mean(a.r, a.s, &x);
        let rhs = gini_mean(b.r, b.s, &x);
        ((lhs - rhs) / rhs.abs().max(1.0) > 1e-9).then_some(Witness { x, lhs, rhs })
    })
}
