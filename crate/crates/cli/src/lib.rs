//! The `meanx` command-line tool as a library, so that tests can drive
//! [`run`] without spawning a process.
//!
//! Exit codes: 0 success, 1 a checked property failed, 2 usage, parse or
//! domain error, 3 no convergence, resource limit or numerical failure.

pub mod config;
pub mod output;

use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use meanx_core::{
    analytic_extension, corollary_check, is_ergodic, iterative_extension_traced,
    ordering_with_estimator, parse_generator, parse_mean, region_report, verify_suite_with,
    EnvelopeEstimator, EnvelopeKind, Error, GiniParams, IndexFamily, MeanDescriptor, Suite,
    SuiteOptions, Verdict,
};
use rayon::prelude::*;
use serde::Serialize;

use config::{Overrides, RunConfig, Settings};
use output::{fmt_f64, to_json};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(Error),
    Io(std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(
                Error::NotConverged { .. } | Error::ResourceLimit(_) | Error::Numerical(_),
            ) => EXIT_NUMERICAL,
            _ => EXIT_USAGE,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

#[derive(Debug, Parser)]
#[command(name = "meanx", version, about = "Invariant extensions of means")]
struct Cli {
    /// JSON file with default settings.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every randomised check.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Relative stopping tolerance of the iteration.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true)]
    max_iter: Option<usize>,
    /// Largest arity the iterative extension accepts.
    #[arg(long, global = true)]
    max_arity: Option<usize>,
    /// Write the result here instead of standard output.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate the iterative extension of a mean's bivariate restriction.
    Extend {
        #[arg(long)]
        mean: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        x: String,
        /// Use the closed form for quasiarithmetic bases.
        #[arg(long)]
        analytic_shortcut: bool,
        /// Write every top-level iterate to standard error as a JSON line.
        #[arg(long)]
        trace: bool,
    },
    /// Irreducibility, period and ergodicity of an index family.
    CheckErgodic {
        /// `{"p":..,"alpha":[[..],..]}` inline, or `@path` to read it from a file.
        #[arg(
            long,
            required_unless_present = "barycentric",
            conflicts_with = "barycentric"
        )]
        family: Option<String>,
        /// The barycentric family on this many indices.
        #[arg(long)]
        barycentric: Option<usize>,
    },
    /// Run a property suite against a mean.
    Verify {
        #[arg(long)]
        mean: Option<String>,
        /// flags, extension, conjugacy, envelope or all.
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long)]
        samples: Option<usize>,
        /// Generator for the conjugacy suite; repeatable.
        #[arg(long = "gen")]
        generators: Vec<String>,
    },
    /// Region membership of two Gini parameter pairs and the comparison check.
    GiniRegion {
        #[arg(long, allow_hyphen_values = true)]
        a: String,
        #[arg(long, allow_hyphen_values = true)]
        b: String,
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Region membership of `a` over a square grid against a fixed `b`, as CSV.
    GiniSweep {
        #[arg(long, allow_hyphen_values = true)]
        b: String,
        #[arg(long, default_value_t = -3.0, allow_hyphen_values = true)]
        min: f64,
        #[arg(long, default_value_t = 3.0, allow_hyphen_values = true)]
        max: f64,
        #[arg(long, default_value_t = 25)]
        steps: usize,
        /// Also run the comparison check with this many trials per point.
        #[arg(long, default_value_t = 0)]
        trials: usize,
    },
    /// Estimate envelopes of a mean within the power family.
    Envelope {
        #[arg(long)]
        mean: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        x: String,
        /// local_lower, local_upper, global_lower or global_upper. Without
        /// it, the full ordering chain is reported.
        #[arg(long)]
        kind: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        rmin: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        rmax: Option<f64>,
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long)]
        pmax: Option<usize>,
        #[arg(long)]
        samples: Option<usize>,
    },
}

/// Runs the tool. `env_budget` is the value of `MEANX_BUDGET`, if set.
pub fn run<I, T>(args: I, env_budget: Option<&str>, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let to_out = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let text = e.render().to_string();
            let _ = if to_out {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return if to_out { EXIT_OK } else { EXIT_USAGE };
        }
    };
    match execute(cli, env_budget, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

struct Emitted {
    text: String,
    code: i32,
}

impl Emitted {
    fn json<T: Serialize>(value: &T, passed: bool) -> Self {
        Emitted {
            text: to_json(value) + "\n",
            code: if passed { EXIT_OK } else { EXIT_FAILED },
        }
    }
}

fn execute(
    cli: Cli,
    env_budget: Option<&str>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, CliError> {
    let file = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let flags = Overrides {
        seed: cli.seed,
        tol: cli.tol,
        max_iter: cli.max_iter,
        max_arity: cli.max_arity,
    };
    let settings = config::resolve(file, env_budget, &flags)?;
    let target = cli.output.clone().or_else(|| settings.file.output.clone());
    let emitted = match cli.command {
        Command::Extend {
            mean,
            x,
            analytic_shortcut,
            trace,
        } => extend(&settings, mean, &x, analytic_shortcut, trace, err)?,
        Command::CheckErgodic {
            family,
            barycentric,
        } => check_ergodic(family, barycentric)?,
        Command::Verify {
            mean,
            suite,
            samples,
            generators,
        } => verify(&settings, mean, &suite, samples, generators)?,
        Command::GiniRegion { a, b, trials } => gini_region(&settings, &a, &b, trials)?,
        Command::GiniSweep {
            b,
            min,
            max,
            steps,
            trials,
        } => gini_sweep(&settings, &b, min, max, steps, trials)?,
        Command::Envelope {
            mean,
            x,
            kind,
            rmin,
            rmax,
            grid,
            pmax,
            samples,
        } => envelope(&settings, mean, &x, kind, (rmin, rmax, grid), pmax, samples)?,
    };
    match target {
        Some(path) => std::fs::write(&path, emitted.text.as_bytes())
            .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))?,
        None => out.write_all(emitted.text.as_bytes())?,
    }
    Ok(emitted.code)
}

fn mean_arg(settings: &Settings, mean: Option<String>) -> Result<MeanDescriptor, CliError> {
    let text = mean.or_else(|| settings.file.mean.clone()).ok_or_else(|| {
        CliError::Usage("--mean is required (or set \"mean\" in the config)".into())
    })?;
    Ok(parse_mean(&text)?)
}

fn parse_point(text: &str) -> Result<Vec<f64>, CliError> {
    let x: Result<Vec<f64>, _> = text.split(',').map(|t| t.trim().parse::<f64>()).collect();
    match x {
        Ok(x) if !x.is_empty() && x.iter().all(|v| v.is_finite()) => Ok(x),
        _ => Err(CliError::Usage(format!(
            "--x must be a comma-separated list of finite numbers, got {text:?}"
        ))),
    }
}

#[derive(Serialize)]
struct TraceLine<'a> {
    iteration: usize,
    x: &'a [f64],
}

fn extend(
    settings: &Settings,
    mean: Option<String>,
    x: &str,
    shortcut: bool,
    trace: bool,
    err: &mut dyn Write,
) -> Result<Emitted, CliError> {
    let m = mean_arg(settings, mean)?;
    let x = parse_point(x)?;
    let cfg = &settings.iteration;
    if shortcut {
        match analytic_extension(&m, &x) {
            Some(r) => return Ok(Emitted::json(&r?, true)),
            None => log::warn!("{m} has no closed-form extension; iterating"),
        }
    }
    let mut iteration = 0;
    let mut io_error = None;
    let mut sink = |v: &[f64]| {
        if !trace || io_error.is_some() {
            return;
        }
        iteration += 1;
        let line = to_json(&TraceLine { iteration, x: v }) + "\n";
        if let Err(e) = err.write_all(line.as_bytes()) {
            io_error = Some(e);
        }
    };
    let r = iterative_extension_traced(&m, &x, cfg, &mut sink)?;
    if let Some(e) = io_error {
        return Err(e.into());
    }
    Ok(Emitted::json(&r, true))
}

fn check_ergodic(family: Option<String>, barycentric: Option<usize>) -> Result<Emitted, CliError> {
    let fam = match (family, barycentric) {
        (_, Some(p)) => IndexFamily::barycentric(p)?,
        (Some(text), None) => {
            let text = match text.strip_prefix('@') {
                Some(path) => std::fs::read_to_string(path)
                    .map_err(|e| CliError::Usage(format!("cannot read {path}: {e}")))?,
                None => text,
            };
            serde_json::from_str(&text)
                .map_err(|e| CliError::Usage(format!("invalid family: {e}")))?
        }
        (None, None) => {
            return Err(CliError::Usage(
                "--family or --barycentric is required".into(),
            ))
        }
    };
    Ok(Emitted::json(&is_ergodic(&fam), true))
}

#[derive(Serialize)]
struct AllSuites {
    mean: String,
    seed: u64,
    reports: Vec<meanx_core::SuiteReport>,
    passed: bool,
}

fn verify(
    settings: &Settings,
    mean: Option<String>,
    suite: &str,
    samples: Option<usize>,
    generators: Vec<String>,
) -> Result<Emitted, CliError> {
    let m = mean_arg(settings, mean)?;
    let mut opts = SuiteOptions::default();
    if let Some(n) = samples.or(settings.file.samples) {
        opts.samples = n;
    }
    let gens = if generators.is_empty() {
        settings.file.generators.clone().unwrap_or_default()
    } else {
        generators
    };
    if !gens.is_empty() {
        opts.generators = gens
            .iter()
            .map(|g| parse_generator(g))
            .collect::<Result<_, _>>()?;
    }
    if let Some(w) = settings.file.window {
        opts.window = w;
    }
    let cfg = &settings.iteration;
    if suite == "all" {
        // each suite draws from its own stream, so running them in parallel
        // leaves the output unchanged
        let reports = Suite::ALL
            .par_iter()
            .map(|&s| verify_suite_with(&m, s, settings.seed, cfg, &opts))
            .collect::<Result<Vec<_>, _>>()?;
        let passed = reports.iter().all(|r| r.passed);
        let all = AllSuites {
            mean: m.to_string(),
            seed: settings.seed,
            reports,
            passed,
        };
        return Ok(Emitted::json(&all, passed));
    }
    let s: Suite = suite.parse()?;
    let report = verify_suite_with(&m, s, settings.seed, cfg, &opts)?;
    let passed = report.passed;
    Ok(Emitted::json(&report, passed))
}

#[derive(Serialize)]
struct GiniOutput {
    a: GiniParams,
    b: GiniParams,
    region: meanx_core::RegionReport,
    check: meanx_core::VerdictReport,
}

fn gini_region(
    settings: &Settings,
    a: &str,
    b: &str,
    trials: Option<usize>,
) -> Result<Emitted, CliError> {
    let (a, b) = (GiniParams::parse(a)?, GiniParams::parse(b)?);
    let trials = trials.or(settings.file.trials).unwrap_or(100);
    let check = corollary_check(a, b, trials, settings.seed, &settings.iteration)?;
    let passed = check.verdict != Verdict::Violated;
    let out = GiniOutput {
        a,
        b,
        region: region_report(a, b),
        check,
    };
    Ok(Emitted::json(&out, passed))
}

fn gini_sweep(
    settings: &Settings,
    b: &str,
    min: f64,
    max: f64,
    steps: usize,
    trials: usize,
) -> Result<Emitted, CliError> {
    let b = GiniParams::parse(b)?;
    if !(min.is_finite() && max.is_finite() && min < max) || steps < 2 {
        return Err(CliError::Usage(
            "need finite --min < --max and --steps ≥ 2".into(),
        ));
    }
    let axis: Vec<f64> = (0..steps)
        .map(|i| min + (max - min) * i as f64 / (steps - 1) as f64)
        .collect();
    let points: Vec<(f64, f64)> = axis
        .iter()
        .flat_map(|&r| axis.iter().map(move |&s| (r, s)))
        .collect();
    let cfg = &settings.iteration;
    // par_iter keeps input order when collecting
    let rows = points
        .par_iter()
        .enumerate()
        .map(|(i, &(r, s))| -> Result<String, Error> {
            let a = GiniParams::new(r, s)?;
            let reg = region_report(a, b);
            let mut row = format!(
                "{},{},{},{},{},{}",
                fmt_f64(r),
                fmt_f64(s),
                reg.in_delta_inf,
                reg.in_delta_2,
                reg.in_mon_g.first,
                reg.boundary
            );
            if trials > 0 {
                let v = corollary_check(a, b, trials, settings.seed.wrapping_add(i as u64), cfg)?;
                row.push(',');
                row.push_str(verdict_name(v.verdict));
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut text = String::from("r,s,in_delta_inf,in_delta_2,in_mon_g,boundary");
    if trials > 0 {
        text.push_str(",verdict");
    }
    text.push('\n');
    for row in rows {
        text.push_str(&row);
        text.push('\n');
    }
    Ok(Emitted {
        text,
        code: EXIT_OK,
    })
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Holds => "holds",
        Verdict::Violated => "violated",
        Verdict::CounterexampleFound => "counterexample_found",
        Verdict::Inconclusive => "inconclusive",
    }
}

fn envelope(
    settings: &Settings,
    mean: Option<String>,
    x: &str,
    kind: Option<String>,
    (rmin, rmax, grid): (Option<f64>, Option<f64>, Option<usize>),
    pmax: Option<usize>,
    samples: Option<usize>,
) -> Result<Emitted, CliError> {
    let m = mean_arg(settings, mean)?;
    let x = parse_point(x)?;
    let mut window = settings.file.window.unwrap_or_default();
    if let Some(v) = rmin {
        window.r_min = v;
    }
    if let Some(v) = rmax {
        window.r_max = v;
    }
    if let Some(v) = grid {
        window.grid = v;
    }
    let cfg = settings.iteration;
    // the ordering chain is stated for the extension of the bivariate base
    let m = match kind {
        Some(_) => m,
        None => MeanDescriptor::extended(m.bivariate_base().clone())?,
    };
    let mut est = EnvelopeEstimator::new(m, window, cfg)?.seed(settings.seed);
    if let Some(p) = pmax.or(settings.file.p_max) {
        est = est.p_max(p);
    }
    if let Some(n) = samples.or(settings.file.samples) {
        est = est.samples(n);
    }
    match kind {
        Some(k) => {
            let kind: EnvelopeKind = k.parse()?;
            Ok(Emitted::json(&est.estimate(&x, kind)?, true))
        }
        None => {
            let rep = ordering_with_estimator(&est, &x, &cfg)?;
            let holds = rep.holds;
            Ok(Emitted::json(&rep, holds))
        }
    }
}
