//! Invariant means of mean-type mappings and the extension of bivariate
//! means to arbitrary arity.
//!
//! A mean-type mapping `𝕄_α` sends `x ∈ I^p` to
//! `(M_1(x_{α_1}), …, M_p(x_{α_p}))`. When every `M_i` is strict and the
//! incidence graph of `α` is ergodic, the iterates `𝕄_α^n(x)` collapse to a
//! constant vector whose value is the unique `𝕄_α`-invariant mean at `x`.
//!
//! The barycentric operator is the special case `α_i = (1..=k+1) \ {i}`
//! with one `k`-ary mean in every slot; its invariant mean is the extension
//! `M̃` of `M` to `k + 1` arguments. Applying that step repeatedly to a
//! bivariate mean gives `M^e` on every arity.

use serde::Serialize;

use crate::domain::{is_constant, min_max, Interval};
use crate::error::{Error, Result};
use crate::generator::GeneratorDescriptor;
use crate::graph::{is_ergodic, IndexFamily};
use crate::means::{eval_quasiarithmetic, gini_mean, power_mean, MeanDescriptor, MeanKind};

/// Largest arity the extension engine can be configured for.
pub const ARITY_LIMIT: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[serde(default)]
pub struct IterationConfig {
    /// Stop once `max − min ≤ rel_tol · max(1, |midpoint|)`.
    pub rel_tol: f64,
    /// Absolute floor for the stopping gap.
    pub abs_tol: f64,
    pub max_iter: usize,
    /// Largest arity accepted by the iterative extension.
    pub max_arity: usize,
    /// Bivariate evaluations allowed for one iterative extension.
    pub call_budget: u64,
}

impl Default for IterationConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-13,
            abs_tol: 1e-300,
            max_iter: 10_000,
            max_arity: 8,
            call_budget: 100_000_000,
        }
    }
}

impl IterationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "rel_tol must be positive, got {}",
                self.rel_tol
            )));
        }
        if !(self.abs_tol >= 0.0 && self.abs_tol.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "abs_tol must be non-negative, got {}",
                self.abs_tol
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("max_iter must be at least 1".into()));
        }
        if self.max_arity < 2 || self.max_arity > ARITY_LIMIT {
            return Err(Error::InvalidConfig(format!(
                "max_arity must lie in 2..={ARITY_LIMIT}, got {}",
                self.max_arity
            )));
        }
        Ok(())
    }

    /// Tolerance on the gap of a vector with midpoint `mid`.
    #[inline]
    pub fn gap_tolerance(&self, mid: f64) -> f64 {
        (self.rel_tol * mid.abs().max(1.0)).max(self.abs_tol)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExtensionResult {
    pub value: f64,
    pub iterations: usize,
    /// `max − min` of the last iterate.
    pub final_gap: f64,
    pub converged: bool,
}

impl ExtensionResult {
    fn exact(value: f64) -> Self {
        Self {
            value,
            iterations: 0,
            final_gap: 0.0,
            converged: true,
        }
    }
}

/// A `d`-averaging mapping: one mean per coordinate plus the index family
/// selecting its arguments.
#[derive(Debug, Clone)]
pub struct AveragingMapping {
    means: Vec<MeanDescriptor>,
    family: IndexFamily,
    domain: Interval,
}

impl AveragingMapping {
    pub fn new(means: Vec<MeanDescriptor>, family: IndexFamily) -> Result<Self> {
        if means.len() != family.p() {
            return Err(Error::InvalidFamily(format!(
                "{} means for a family of dimension {}",
                means.len(),
                family.p()
            )));
        }
        let mut domain = Interval::real_line();
        for (m, a) in means.iter().zip(family.alpha()) {
            if !m.arity().accepts(a.len()) {
                return Err(Error::Arity {
                    expected: m.arity().to_string(),
                    got: a.len(),
                });
            }
            domain = domain
                .intersect(&m.domain())
                .ok_or_else(|| Error::InvalidFamily("the means share no common interval".into()))?;
        }
        Ok(Self {
            means,
            family,
            domain,
        })
    }

    /// `k + 1` copies of `m` on the barycentric family.
    pub fn barycentric(m: &MeanDescriptor, k: usize) -> Result<Self> {
        let family = IndexFamily::barycentric(k + 1)?;
        Self::new(vec![m.clone(); k + 1], family)
    }

    pub fn means(&self) -> &[MeanDescriptor] {
        &self.means
    }

    pub fn family(&self) -> &IndexFamily {
        &self.family
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }
}

/// `M(x_{α_1}, …, x_{α_d})` with 1-based `alpha_i`.
pub fn extended_eval(m: &MeanDescriptor, p: usize, alpha_i: &[usize], x: &[f64]) -> Result<f64> {
    extended_eval_with(m, p, alpha_i, x, &IterationConfig::default())
}

fn extended_eval_with(
    m: &MeanDescriptor,
    p: usize,
    alpha_i: &[usize],
    x: &[f64],
    cfg: &IterationConfig,
) -> Result<f64> {
    if x.len() != p {
        return Err(Error::Arity {
            expected: p.to_string(),
            got: x.len(),
        });
    }
    let picked = alpha_i
        .iter()
        .map(|&j| {
            if j == 0 || j > p {
                Err(Error::Index { index: j, p })
            } else {
                Ok(x[j - 1])
            }
        })
        .collect::<Result<Vec<_>>>()?;
    m.eval_with(&picked, cfg)
}

/// One application of `𝕄_α`.
pub fn apply_mapping(a: &AveragingMapping, x: &[f64]) -> Result<Vec<f64>> {
    apply_mapping_with(a, x, &IterationConfig::default())
}

fn apply_mapping_with(a: &AveragingMapping, x: &[f64], cfg: &IterationConfig) -> Result<Vec<f64>> {
    let p = a.family.p();
    a.means
        .iter()
        .zip(a.family.alpha())
        .map(|(m, alpha_i)| extended_eval_with(m, p, alpha_i, x, cfg))
        .collect()
}

/// `β_M(x) = (M(x^{∨1}), …, M(x^{∨(k+1)}))`.
pub fn barycentric_apply(m: &MeanDescriptor, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() < 2 {
        return Err(Error::Arity {
            expected: "at least 2".into(),
            got: x.len(),
        });
    }
    let a = AveragingMapping::barycentric(m, x.len() - 1)?;
    apply_mapping(&a, x)
}

/// Power-iterates `𝕄_α` from `x` to the invariant mean.
pub fn invariant_mean(
    a: &AveragingMapping,
    x: &[f64],
    cfg: &IterationConfig,
) -> Result<ExtensionResult> {
    invariant_mean_traced(a, x, cfg, &mut |_| {})
}

/// As [`invariant_mean`], calling `trace` with every iterate after the first
/// application of the mapping.
pub fn invariant_mean_traced(
    a: &AveragingMapping,
    x: &[f64],
    cfg: &IterationConfig,
    trace: &mut dyn FnMut(&[f64]),
) -> Result<ExtensionResult> {
    cfg.validate()?;
    let report = is_ergodic(&a.family);
    if !report.ergodic {
        return Err(Error::NotErgodic(report));
    }
    if let Some(i) = a.means.iter().position(|m| !m.flags().strict) {
        return Err(Error::Precondition(format!(
            "mean {} ({}) is not declared strict",
            i + 1,
            a.means[i]
        )));
    }
    if x.len() != a.family.p() {
        return Err(Error::Arity {
            expected: a.family.p().to_string(),
            got: x.len(),
        });
    }
    a.domain.check(x)?;
    if is_constant(x) {
        return Ok(ExtensionResult::exact(x[0]));
    }
    let mut cur = x.to_vec();
    let mut iterations = 0;
    loop {
        let (lo, hi) = min_max(&cur);
        let mid = 0.5 * (lo + hi);
        if hi - lo <= cfg.gap_tolerance(mid) {
            return Ok(ExtensionResult {
                value: mid,
                iterations,
                final_gap: hi - lo,
                converged: true,
            });
        }
        if iterations >= cfg.max_iter {
            return Err(Error::NotConverged {
                level: x.len(),
                iterations,
                lo,
                hi,
            });
        }
        cur = apply_mapping_with(a, &cur, cfg)?;
        iterations += 1;
        trace(&cur);
    }
}

/// The extension `M̃(x)` of a `k`-ary mean to `k + 1` arguments.
pub fn beta_extension_eval(
    m: &MeanDescriptor,
    x: &[f64],
    cfg: &IterationConfig,
) -> Result<ExtensionResult> {
    if x.len() < 2 {
        return Err(Error::Arity {
            expected: "at least 2".into(),
            got: x.len(),
        });
    }
    if !m.flags().symmetric {
        log::warn!("{m} is not declared symmetric; its extension may not be symmetric");
    }
    let a = AveragingMapping::barycentric(m, x.len() - 1)?;
    invariant_mean(&a, x, cfg)
}

/// `M^e(x)`: `x₁` for one argument, `M(x)` for two, and for `n > 2` the
/// invariant mean of the barycentric operator whose slots evaluate the
/// `(n − 1)`-ary extension.
pub fn iterative_extension_eval(
    m: &MeanDescriptor,
    x: &[f64],
    cfg: &IterationConfig,
) -> Result<ExtensionResult> {
    iterative_extension_traced(m, x, cfg, &mut |_| {})
}

/// As [`iterative_extension_eval`], calling `trace` with every top-level
/// iterate.
pub fn iterative_extension_traced(
    m: &MeanDescriptor,
    x: &[f64],
    cfg: &IterationConfig,
    trace: &mut dyn FnMut(&[f64]),
) -> Result<ExtensionResult> {
    cfg.validate()?;
    let base = m.bivariate_base();
    if !base.arity().accepts(2) {
        return Err(Error::Arity {
            expected: base.arity().to_string(),
            got: 2,
        });
    }
    if !base.flags().strict {
        return Err(Error::Precondition(format!(
            "{base} is not declared strict"
        )));
    }
    let symmetric = base.flags().symmetric;
    if !symmetric {
        log::warn!("{base} is not declared symmetric; its extension may not be symmetric");
    }
    let n = x.len();
    if n == 0 {
        return Err(Error::Arity {
            expected: "at least 1".into(),
            got: 0,
        });
    }
    if n > cfg.max_arity {
        return Err(Error::ResourceLimit(format!(
            "arity {n} exceeds the configured cap {}",
            cfg.max_arity
        )));
    }
    base.domain().check(x)?;
    if n == 1 || is_constant(x) {
        return Ok(ExtensionResult::exact(x[0]));
    }
    if n == 2 {
        return Ok(ExtensionResult::exact(base.eval_with(x, cfg)?));
    }
    let mut kernel = Kernel::new(base);
    let mut coords = Coords::Identity;
    let mut u = [0.0; ARITY_LIMIT];
    u[..n].copy_from_slice(x);
    if let Kernel::Power(r) = kernel {
        if let Some(c) = Coords::for_power(r, x) {
            for v in &mut u[..n] {
                *v = c.forward(*v);
            }
            coords = c;
            kernel = Kernel::Arithmetic;
        }
    }
    let mut engine = Engine {
        kernel,
        coords,
        cfg,
        calls: 0,
        share_equal: symmetric,
    };
    let mut back = [0.0; ARITY_LIMIT];
    let mut trace_x = |t: &[f64]| {
        for (b, &v) in back.iter_mut().zip(t) {
            *b = coords.back(v);
        }
        trace(&back[..t.len()]);
    };
    engine.iterate(&u[..n], Some(&mut trace_x))
}

/// Coordinates the engine iterates in. A power base `P_r` is the arithmetic
/// mean of `u = (x/c)^r` (or `u = ln x` at `r = 0`), which turns every
/// bivariate evaluation into an average. Convergence is still judged on `x`.
#[derive(Debug, Clone, Copy)]
enum Coords {
    Identity,
    Power { r: f64, c: f64 },
    Log,
}

impl Coords {
    fn for_power(r: f64, x: &[f64]) -> Option<Self> {
        if r == 1.0 {
            return Some(Coords::Identity);
        }
        if r == 0.0 {
            return Some(Coords::Log);
        }
        // scale so that every u lies in (0, 1]; give up if any underflows
        let (lo, hi) = min_max(x);
        let c = if r > 0.0 { hi } else { lo };
        let ok = x.iter().all(|&t| (t / c).powf(r) >= f64::MIN_POSITIVE);
        ok.then_some(Coords::Power { r, c })
    }

    #[inline]
    fn forward(self, x: f64) -> f64 {
        match self {
            Coords::Identity => x,
            Coords::Power { r, c } => (x / c).powf(r),
            Coords::Log => x.ln(),
        }
    }

    #[inline]
    fn back(self, u: f64) -> f64 {
        match self {
            Coords::Identity => u,
            Coords::Power { r, c } => c * u.powf(1.0 / r),
            Coords::Log => u.exp(),
        }
    }

    /// `(min, max)` in `x` of a vector whose `u`-coordinates span `[lo, hi]`.
    fn bounds(self, lo: f64, hi: f64) -> (f64, f64) {
        let (a, b) = (self.back(lo), self.back(hi));
        if a <= b {
            (a, b)
        } else {
            (b, a)
        }
    }

    /// A `u`-gap above which the `x`-gap cannot meet the tolerance, for
    /// iterates inside `[lo, hi]`: the largest admissible `x`-gap over the
    /// smallest slope of `back` there.
    fn gate(self, lo: f64, hi: f64, cfg: &IterationConfig) -> f64 {
        let slope = |u: f64| match self {
            Coords::Identity => 1.0,
            Coords::Power { r, c } => c / r.abs() * u.powf(1.0 / r - 1.0),
            Coords::Log => u.exp(),
        };
        if let Coords::Identity = self {
            return f64::INFINITY;
        }
        let (a, b) = self.bounds(lo, hi);
        let tol = cfg.gap_tolerance(a.abs().max(b.abs()));
        // slope is monotone, so its minimum sits at an end point
        2.0 * tol / slope(lo).min(slope(hi))
    }
}

/// Specialised bivariate evaluators for the families the engine hits most.
enum Kernel<'a> {
    Arithmetic,
    Power(f64),
    Gini(f64, f64),
    Generic(&'a MeanDescriptor),
}

impl<'a> Kernel<'a> {
    fn new(m: &'a MeanDescriptor) -> Self {
        match m.kind() {
            MeanKind::Power(r) if *r == 1.0 => Kernel::Arithmetic,
            MeanKind::Power(r) => Kernel::Power(*r),
            MeanKind::QuasiArithmetic(GeneratorDescriptor::Power(r)) => Kernel::Power(*r),
            MeanKind::Gini(r, s) => Kernel::Gini(*r, *s),
            _ => Kernel::Generic(m),
        }
    }

    #[inline]
    fn eval(&self, a: f64, b: f64, cfg: &IterationConfig) -> Result<f64> {
        if a == b {
            return Ok(a);
        }
        let v = match self {
            Kernel::Arithmetic => 0.5 * a + 0.5 * b,
            Kernel::Power(r) => power_mean(*r, &[a, b]),
            Kernel::Gini(r, s) => gini_mean(*r, *s, &[a, b]),
            Kernel::Generic(m) => return m.eval_with(&[a, b], cfg),
        };
        if !v.is_finite() {
            return Err(Error::Numerical(format!(
                "bivariate mean of ({a}, {b}) is {v}"
            )));
        }
        Ok(v.clamp(a.min(b), a.max(b)))
    }
}

type Trace<'t> = &'t mut dyn FnMut(&[f64]);

struct Engine<'a> {
    kernel: Kernel<'a>,
    coords: Coords,
    cfg: &'a IterationConfig,
    calls: u64,
    /// Equal coordinates give equal slots; only sound for symmetric bases.
    share_equal: bool,
}

impl Engine<'_> {
    fn charge(&mut self, calls: u64) -> Result<()> {
        self.calls += calls;
        if self.calls > self.cfg.call_budget {
            return Err(Error::ResourceLimit(format!(
                "more than {} bivariate evaluations",
                self.cfg.call_budget
            )));
        }
        Ok(())
    }

    /// Value of the extension on a vector of arity `≥ 2`.
    fn value(&mut self, x: &[f64]) -> Result<f64> {
        if x.len() == 2 {
            self.charge(1)?;
            return self.kernel.eval(x[0], x[1], self.cfg);
        }
        if x.len() == 3 {
            return self.ternary([x[0], x[1], x[2]]);
        }
        // iterate reports in x; the caller works in engine coordinates
        Ok(self.coords.forward(self.iterate(x, None)?.value))
    }

    /// The arity-3 level, where almost all of the work happens, as a tight
    /// loop monomorphised over the kernel.
    fn ternary(&mut self, x: [f64; 3]) -> Result<f64> {
        let (coords, cfg) = (self.coords, self.cfg);
        let (v, iterations) = match self.kernel {
            Kernel::Arithmetic => ternary_loop(|a, b| 0.5 * a + 0.5 * b, x, coords, cfg),
            Kernel::Power(r) => ternary_loop(|a, b| power_mean(r, &[a, b]), x, coords, cfg),
            Kernel::Gini(r, s) => ternary_loop(|a, b| gini_mean(r, s, &[a, b]), x, coords, cfg),
            Kernel::Generic(_) => {
                return Ok(self.coords.forward(self.iterate(&x, None)?.value));
            }
        };
        self.charge(3 * iterations as u64)?;
        let v = v?;
        if !v.is_finite() {
            return Err(Error::Numerical(format!("extension at {x:?} is {v}")));
        }
        Ok(v)
    }

    fn iterate(&mut self, x: &[f64], mut trace: Option<Trace<'_>>) -> Result<ExtensionResult> {
        let n = x.len();
        let mut cur = [0.0; ARITY_LIMIT];
        let mut next = [0.0; ARITY_LIMIT];
        let mut sub = [0.0; ARITY_LIMIT];
        cur[..n].copy_from_slice(x);
        let mut iterations = 0;
        let gate = {
            let (lo, hi) = min_max(&cur[..n]);
            self.coords.gate(lo, hi, self.cfg)
        };
        loop {
            // the x-space test costs two transcendental calls; skip it while
            // the u-gap alone rules convergence out
            let (ulo, uhi) = min_max(&cur[..n]);
            if uhi - ulo <= gate || iterations >= self.cfg.max_iter {
                let (lo, hi) = self.coords.bounds(ulo, uhi);
                let mid = 0.5 * (lo + hi);
                if hi - lo <= self.cfg.gap_tolerance(mid) {
                    return Ok(ExtensionResult {
                        value: mid,
                        iterations,
                        final_gap: hi - lo,
                        converged: true,
                    });
                }
                if iterations >= self.cfg.max_iter {
                    return Err(Error::NotConverged {
                        level: n,
                        iterations,
                        lo,
                        hi,
                    });
                }
            }
            for j in 0..n {
                if self.share_equal {
                    if let Some(k) = (0..j).find(|&k| cur[k] == cur[j]) {
                        next[j] = next[k];
                        continue;
                    }
                }
                sub[..j].copy_from_slice(&cur[..j]);
                sub[j..n - 1].copy_from_slice(&cur[j + 1..n]);
                next[j] = self.value(&sub[..n - 1])?;
            }
            std::mem::swap(&mut cur, &mut next);
            iterations += 1;
            if let Some(t) = trace.as_mut() {
                t(&cur[..n]);
            }
        }
    }
}

/// Barycentric iteration on three coordinates. Returns the limit in engine
/// coordinates and the iteration count.
#[inline]
fn ternary_loop(
    k: impl Fn(f64, f64) -> f64,
    x: [f64; 3],
    coords: Coords,
    cfg: &IterationConfig,
) -> (Result<f64>, usize) {
    let k = |a: f64, b: f64| {
        if a == b {
            a
        } else {
            k(a, b).clamp(a.min(b), a.max(b))
        }
    };
    let [mut a, mut b, mut c] = x;
    let gate = coords.gate(a.min(b).min(c), a.max(b).max(c), cfg);
    let mut iterations = 0;
    loop {
        let (lo, hi) = (a.min(b).min(c), a.max(b).max(c));
        let gap = hi - lo;
        if gap <= gate || gap.is_nan() || iterations >= cfg.max_iter {
            let (xlo, xhi) = coords.bounds(lo, hi);
            let mid = 0.5 * (xlo + xhi);
            if xhi - xlo <= cfg.gap_tolerance(mid) {
                return (Ok(coords.forward(mid)), iterations);
            }
            if iterations >= cfg.max_iter || !(hi - lo).is_finite() {
                let e = Error::NotConverged {
                    level: 3,
                    iterations,
                    lo: xlo,
                    hi: xhi,
                };
                return (Err(e), iterations);
            }
        }
        (a, b, c) = (k(b, c), k(a, c), k(a, b));
        iterations += 1;
    }
}

/// `|(M^e)^{[φ]}(x) − (M^{[φ]})^e(x)|`.
pub fn extension_conjugacy_check(
    m: &MeanDescriptor,
    gen: &GeneratorDescriptor,
    x: &[f64],
    cfg: &IterationConfig,
) -> Result<f64> {
    gen.domain().check(x)?;
    let mapped: Vec<f64> = x.iter().map(|&t| gen.forward(t)).collect();
    let lhs = gen.inverse(iterative_extension_eval(m, &mapped, cfg)?.value);
    let conj = MeanDescriptor::conjugate(m.bivariate_base().clone(), gen.clone());
    let rhs = iterative_extension_eval(&conj, x, cfg)?.value;
    Ok((lhs - rhs).abs())
}

/// The generator of a quasiarithmetic base, if it has one.
pub fn quasiarithmetic_generator(m: &MeanDescriptor) -> Option<GeneratorDescriptor> {
    match m.bivariate_base().kind() {
        MeanKind::Power(r) => Some(GeneratorDescriptor::Power(*r)),
        MeanKind::QuasiArithmetic(g) => Some(g.clone()),
        MeanKind::Gini(r, 0.0) | MeanKind::Gini(0.0, r) => Some(GeneratorDescriptor::Power(*r)),
        _ => None,
    }
}

/// Closed-form `M^e(x)` for quasiarithmetic bases, whose extension is the
/// quasiarithmetic mean with the same generator.
pub fn analytic_extension(m: &MeanDescriptor, x: &[f64]) -> Option<Result<ExtensionResult>> {
    let g = quasiarithmetic_generator(m)?;
    Some(eval_quasiarithmetic(&g, x).map(ExtensionResult::exact))
}
