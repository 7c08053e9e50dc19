//! Experiment configuration and subcommand pipelines behind `lozi-lab`.

// `!(x > 0.0)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod commands;
pub mod config;

pub use commands::{run, Command, Outcome};
pub use config::{ConfigError, ExperimentConfig};
