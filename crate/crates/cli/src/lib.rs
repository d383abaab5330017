//! Batch front-end for Stein thinning experiments: config parsing, shipped
//! presets, and the pipeline runners behind the CLI subcommands.

pub mod config;
pub mod presets;
pub mod runner;

pub use config::{ExperimentConfig, ExperimentKind, ThinningMethod};
pub use runner::{cmd_eval, cmd_experiment, cmd_logistic, cmd_sample, cmd_thin, RunContext};
