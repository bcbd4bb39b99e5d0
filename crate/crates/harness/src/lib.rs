//! Batch orchestration for the SPDE laboratory: configuration ingestion,
//! canned experiments, Monte Carlo execution and report persistence.
//!
//! Exit-code contract of [`experiments::run`]:
//! 0 success, 2 invalid config, 3 blow-up budget exceeded (>1% aborted
//! paths), 4 a regularity verdict came back `violated`.

// Validation guards use `!(x > 0.0)`-style comparisons on purpose: unlike
// `x <= 0.0`, they reject NaN inputs.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod experiments;
pub mod report;

pub use config::{ExperimentTag, RunConfig};
pub use experiments::{run, run_paths, MomentAccumulator, RunArtifacts, RunError};
pub use report::{compare_reports, CompareError, CompareOutcome};

/// Environment variable that overrides `mc.master_seed` when set.
pub const MASTER_SEED_ENV: &str = "SPDE_LAB_MASTER_SEED";
