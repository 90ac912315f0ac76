//! Scenario runner for the radbound toolkit: config validation, the
//! bound / estimate / sandwich / scaling / gap experiments, and their
//! CSV, JSON and SVG reports.

pub mod config;
pub mod plot;
pub mod report;
pub mod scenario;

pub use config::{validate_config, ConfigIssue, Scenario, ScenarioConfig};
pub use scenario::{run_scenario, HarnessError, RunOutcome};

/// Environment variable overriding `output_dir`.
pub const OUTPUT_ENV: &str = "RADBOUND_OUT";
