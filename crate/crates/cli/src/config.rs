//! Settings shared by all subcommands. Precedence, lowest first: built-in
//! defaults, `--config` file, `MEANX_BUDGET`, command-line flags.

use std::path::{Path, PathBuf};

use meanx_core::{FamilyWindow, IterationConfig};
use serde::Deserialize;

use crate::CliError;

/// The contents of a `--config` file. Every field is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub max_arity: Option<usize>,
    pub call_budget: Option<u64>,
    /// Default descriptor for subcommands that take `--mean`.
    pub mean: Option<String>,
    pub samples: Option<usize>,
    pub trials: Option<usize>,
    /// Generators for the conjugacy suite.
    pub generators: Option<Vec<String>>,
    pub window: Option<FamilyWindow>,
    pub p_max: Option<usize>,
    pub output: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
    }
}

/// Resolved settings.
#[derive(Debug, Clone)]
pub struct Settings {
    pub seed: u64,
    pub iteration: IterationConfig,
    pub file: RunConfig,
}

/// Flags that override the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub max_arity: Option<usize>,
}

pub fn parse_budget(text: &str) -> Result<u64, CliError> {
    let text = text.trim();
    match text.parse::<u64>() {
        Ok(0) => {}
        Ok(v) => return Ok(v),
        Err(_) => {}
    }
    match text.parse::<f64>() {
        Ok(v) if v >= 1.0 && v.fract() == 0.0 && v < u64::MAX as f64 => Ok(v as u64),
        _ => Err(CliError::Usage(format!(
            "MEANX_BUDGET must be a positive integer, got {text:?}"
        ))),
    }
}

pub fn resolve(
    file: RunConfig,
    env_budget: Option<&str>,
    flags: &Overrides,
) -> Result<Settings, CliError> {
    let mut it = IterationConfig::default();
    if let Some(v) = file.rel_tol {
        it.rel_tol = v;
    }
    if let Some(v) = file.abs_tol {
        it.abs_tol = v;
    }
    if let Some(v) = file.max_iter {
        it.max_iter = v;
    }
    if let Some(v) = file.max_arity {
        it.max_arity = v;
    }
    if let Some(v) = file.call_budget {
        it.call_budget = v;
    }
    if let Some(text) = env_budget {
        it.call_budget = parse_budget(text)?;
        log::debug!("call budget {} from MEANX_BUDGET", it.call_budget);
    }
    if let Some(v) = flags.tol {
        it.rel_tol = v;
    }
    if let Some(v) = flags.max_iter {
        it.max_iter = v;
    }
    if let Some(v) = flags.max_arity {
        it.max_arity = v;
    }
    it.validate().map_err(CliError::Core)?;
    Ok(Settings {
        seed: flags.seed.or(file.seed).unwrap_or(0),
        iteration: it,
        file,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence() {
        let file: RunConfig =
            serde_json::from_str(r#"{"seed":5,"rel_tol":1e-10,"call_budget":7,"max_iter":50}"#)
                .unwrap();
        let flags = Overrides {
            tol: Some(1e-12),
            ..Overrides::default()
        };
        let s = resolve(file.clone(), Some("1e4"), &flags).unwrap();
        assert_eq!(s.seed, 5);
        assert_eq!(s.iteration.rel_tol, 1e-12);
        assert_eq!(s.iteration.call_budget, 10_000);
        assert_eq!(s.iteration.max_iter, 50);
        let s = resolve(
            file,
            None,
            &Overrides {
                seed: Some(9),
                ..flags
            },
        )
        .unwrap();
        assert_eq!((s.seed, s.iteration.call_budget), (9, 7));
    }

    #[test]
    fn rejects_bad_budget_and_unknown_keys() {
        for bad in ["", "-3", "1.5", "lots", "0"] {
            assert!(parse_budget(bad).is_err(), "{bad}");
        }
        assert!(serde_json::from_str::<RunConfig>(r#"{"sed":1}"#).is_err());
    }

    #[test]
    fn window_merges_partially() {
        let file: RunConfig = serde_json::from_str(r#"{"window":{"grid":41}}"#).unwrap();
        let w = file.window.unwrap();
        assert_eq!(w.grid, 41);
        assert_eq!(w.r_min, FamilyWindow::default().r_min);
    }
}
