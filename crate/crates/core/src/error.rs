use thiserror::Error;

use crate::graph::ErgodicityReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("entry {index} = {value} lies outside the domain {domain}")]
    Domain {
        index: usize,
        value: f64,
        domain: String,
    },

    #[error("arity mismatch: expected {expected}, got {got}")]
    Arity { expected: String, got: usize },

    #[error("index {index} is outside 1..={p}")]
    Index { index: usize, p: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("invalid interval [{lo}, {hi}]: {reason}")]
    InvalidInterval {
        lo: f64,
        hi: f64,
        reason: &'static str,
    },

    #[error("invalid index family: {0}")]
    InvalidFamily(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("graph is not irreducible")]
    NotIrreducible,

    #[error("graph has no cycles")]
    NoCycles,

    #[error("incidence graph is not ergodic (irreducible: {}, period: {:?})", .0.irreducible, .0.period)]
    NotErgodic(ErgodicityReport),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error(
        "no convergence at arity {level} after {iterations} iterations; value bracketed in [{lo}, {hi}]"
    )]
    NotConverged {
        level: usize,
        iterations: usize,
        lo: f64,
        hi: f64,
    },

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    #[error("parse error at byte {pos} in {input:?}: {msg}")]
    Parse {
        input: String,
        pos: usize,
        msg: String,
    },
}
