//! Command layer for the `timbre` binary: feature extraction over a
//! manifest, training, evaluation and the feature-combination ablation.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;

pub use commands::{cmd_ablate, cmd_evaluate, cmd_extract, cmd_train, sidecar, EvalSubset};
pub use config::{RunConfig, SplitSource};
pub use error::{CliError, CliResult};
pub use report::{AblationRow, ConfusionMatrix};
