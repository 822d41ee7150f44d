//! Configuration, data files, plots and the command runner behind the CLI.

pub mod commands;
pub mod config;
pub mod data;
pub mod plot;
pub mod report;

pub use commands::{run, Command, RunOptions, RunSummary};
pub use config::{parse_config, parse_config_str, RunConfig};
