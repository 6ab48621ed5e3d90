//! Scenario runner for the moment-map pipeline: JSON configuration,
//! one subcommand per analysis stage, JSON/CSV reports.

pub mod config;
pub mod error;
pub mod report;
pub mod run;

pub use config::{MatrixSpec, ScenarioConfig, Tolerances};
pub use error::CliError;
pub use run::{run, Command, RunOptions, Scenario};
