//! Experiment driver for the `fracac` solver: configuration files, initial
//! conditions, convergence studies, traces, snapshots and a self-test.

pub mod config;
pub mod drivers;
pub mod error;
pub mod ic;
pub mod output;
pub mod selftest;

pub use config::{Experiment, ExperimentConfig, IcSpec};
pub use error::{CliError, CliResult};
