//! Scenario presets, configuration, CSV output and parameter sweeps for the
//! `mixdyn` command-line tool.

pub mod app;
pub mod config;
pub mod csv_io;
pub mod scenario;
pub mod sweep;

pub use app::{execute, AppError, Outcome};
pub use config::{parse_config, ConfigError, Entry};
pub use scenario::{Scenario, ScenarioName};
pub use sweep::{sweep_eta, SweepOutcome};
