//! Invariant extensions of means.
//!
//! A strict symmetric bivariate mean `M` extends uniquely to every arity by
//! repeatedly taking the invariant mean of the barycentric operator. This
//! crate evaluates those extensions, the classical mean families they are
//! tested against, ergodicity of index-incidence graphs, Gini comparability
//! regions and quasiarithmetic envelopes restricted to power generators.

pub mod descriptor;
pub mod domain;
pub mod envelope;
pub mod error;
pub mod extension;
pub mod flags;
pub mod generator;
pub mod gini;
pub mod graph;
pub mod means;
pub mod rng;
pub mod sampling;
pub mod suite;

pub use descriptor::{parse_generator, parse_mean};
pub use domain::{Interval, PointVector};
pub use envelope::{
    envelope_estimate, envelope_ordering_check, ordering_with_estimator, power_family_membership,
    transfer_theorem_check, Boundary, Discrepancy, EnvelopeEstimate, EnvelopeEstimator,
    EnvelopeKind, FamilyWindow, MembershipScope, OrderingReport, Side, TransferReport,
};
pub use error::{Error, Result};
pub use extension::{
    analytic_extension, apply_mapping, barycentric_apply, beta_extension_eval, extended_eval,
    extension_conjugacy_check, invariant_mean, invariant_mean_traced, iterative_extension_eval,
    iterative_extension_traced, quasiarithmetic_generator, AveragingMapping, ExtensionResult,
    IterationConfig,
};
pub use flags::{verify_flags, Counterexample, FlagCheck, FlagReport};
pub use generator::GeneratorDescriptor;
pub use gini::{
    corollary_check, in_delta_2, in_delta_inf, in_mon_g, m_func, mu_func, region_report,
    GiniParams, MonG, RegionReport, Verdict, VerdictReport, Witness,
};
pub use graph::{
    build_graph, ergodicity, is_ergodic, is_irreducible, period, ErgodicityReport, IncidenceGraph,
    IndexFamily,
};
pub use means::{
    conjugate_eval, eval_mean, eval_quasiarithmetic, Arity, MeanDescriptor, MeanFlags, MeanKind,
};
pub use rng::CounterRng;
pub use suite::{
    shipped_means, verify_suite, verify_suite_with, PropertyResult, Suite, SuiteOptions,
    SuiteReport,
};
