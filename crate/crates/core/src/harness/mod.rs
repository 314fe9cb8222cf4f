//! Experiment configuration, Monte Carlo execution and result output.

pub mod config;
pub mod estimators;
pub mod exec;
pub mod output;
pub mod suites;

pub use config::{BitstringSelector, ExperimentConfig, Target};
pub use estimators::{EstimateRecord, Experiment, Verdict, DEFAULT_MARGIN};
pub use exec::{map_indexed, sample_rng, Execution};
pub use output::{artifact_version, write_records, Sidecar, CSV_HEADER};
pub use suites::{all_pass, run_suite, CheckRow, Suite, VerifyOptions};
