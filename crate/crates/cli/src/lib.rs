//! Config loading and subcommand runners behind the `chanproj` binary.

pub mod commands;
pub mod config;

pub use commands::{exit_code, run, Command, RunArgs};
pub use config::{ConfigError, Overrides, Problem, ProblemConfig};
