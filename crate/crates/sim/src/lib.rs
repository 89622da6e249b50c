//! Monte-Carlo laboratory for the `heavycs` estimators.
//!
//! The crate has three parts: seeded stream [`generator`]s covering the data
//! regimes the estimators target, a replication [`harness`] that runs
//! coverage, width-profile, and crossing experiments in parallel with
//! per-replication child seeds, and serializable [`report`] records that
//! capture everything needed to reproduce a run.
//!
//! The harness keeps a strict separation between the generator side, which
//! knows the true mean of every stream, and the estimator side, which only
//! ever sees observations and a priori variance or moment bounds.

use heavycs::CsError;
use thiserror::Error;

pub mod generator;
pub mod harness;
pub mod report;

pub use generator::{Family, GeneratorSpec};
pub use harness::{
    child_rng, child_seed, config_for, lil_reference, run_coverage, run_coverage_cfg,
    run_crossing, run_width_profile,
};
pub use report::{ExperimentReport, WidthStat};

/// Errors from spec validation or from an estimator inside a replication.
#[derive(Debug, Error)]
pub enum SimError {
    /// The generator spec is internally inconsistent.
    #[error("invalid generator spec: {0}")]
    Spec(String),
    /// An estimator failed mid-replication; tagged with where it happened.
    #[error("estimator failure at rep {rep}, t {t}: {source}")]
    Estimator {
        rep: u64,
        t: u64,
        #[source]
        source: CsError,
    },
}
