//! Configuration and experiment commands for the `specflow` binary.

pub mod commands;
pub mod config;
pub mod error;

pub use commands::{cmd_ab, cmd_flow, cmd_oracle, cmd_probe_cm, cmd_report};
pub use config::{Overrides, RunConfig, SolverChoice};
pub use error::{CliError, Result};
