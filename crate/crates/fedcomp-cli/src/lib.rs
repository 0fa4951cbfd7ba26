//! Std companion to the `fedcomp` core: configuration files, CSV import,
//! reports, checkpoints, a parallel client pool and the experiment
//! pipeline behind the `fedcomp` binary.

pub mod checkpoint;
pub mod config;
pub mod csvio;
pub mod error;
pub mod experiment;
pub mod parallel;
pub mod report;

pub use config::ExperimentConfig;
pub use error::{CliError, CliResult};
pub use report::{ExperimentReport, TaskMetrics, Timings};
