//! Experiment harness for distributed Bayesian-network trackers: seeded
//! training streams, filtered test queries, multi-run experiments with
//! checkpointed metrics, CSV reports and network generation.

pub mod error;
pub mod experiment;
pub mod netgen;
pub mod report;
pub mod stream;

pub use error::{HarnessError, Result};
pub use experiment::{run_experiment, run_experiment_on, ExperimentConfig, ExperimentReport, ReportRow, RunLabel, RunStatus};
pub use netgen::new_alarm;
pub use report::{emit_report, write_report};
pub use stream::{generate_stream, generate_test_queries, StreamSpec};
