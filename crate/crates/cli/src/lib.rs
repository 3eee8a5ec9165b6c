//! Scenario configs, run reports and time series for the `holonomic` binary.

pub mod config;
pub mod error;
pub mod report;
pub mod scenario;
pub mod timeseries;

pub use config::{Scenario, ScenarioConfig};
pub use error::CliError;
pub use report::RunReport;
pub use scenario::{run_scenario, Overrides};
pub use timeseries::emit_timeseries;
