//! Scenario files, initial data, the run/batch writers and the kernel self-test.

pub mod config;
pub mod initial;
pub mod run;
pub mod selftest;

pub use config::{parse_config, ConfigError, InitialData, ScenarioSpec};
pub use initial::build_initial;
pub use run::{run_batch, run_config_file, run_scenario, RunError, RunManifest};
pub use selftest::{kernel_selftest, SelftestOptions, SelftestReport};
