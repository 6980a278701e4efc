//! Command-line driver: configuration loading and subcommands.

pub mod commands;
pub mod config;

pub use commands::{CliError, CliResult};
pub use config::{ConfigError, Resolved, RunConfig};
