//! Scenario files, subcommands and reports for the `sensornet` binary.

pub mod commands;
pub mod error;
pub mod report;
pub mod scenario;

pub use error::CliError;
pub use scenario::ScenarioFile;
