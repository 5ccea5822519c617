//! Command-line companion to `sfd-core`: file formats, configuration,
//! synthetic scenes, the estimation pipeline, and evaluation.

pub mod commands;
pub mod config;
pub mod error;
pub mod eval;
pub mod pipeline;
pub mod pnm;
pub mod scenes;

pub use commands::{cmd_estimate, cmd_eval, cmd_oracle, cmd_synth};
pub use config::{load_config, RunConfig};
pub use error::{CliError, Result};
