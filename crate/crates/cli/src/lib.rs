//! Configuration ingestion, scenario orchestration and file emission for
//! the `rotkick` command-line tool.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod setup;

pub use commands::{run_subcommand, RunFlags, RunManifest, Subcommand};
pub use config::{parse_config, parse_str, ScenarioConfig};
pub use error::{CliError, CliResult};
