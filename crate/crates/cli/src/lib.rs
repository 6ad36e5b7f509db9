//! Configuration, orchestration and export for grainflow scenarios.

pub mod config;
pub mod report;
pub mod scenario;
pub mod suite;

pub use config::{parse_config, parse_config_str, ConfigError, ScenarioConfig, Task};
pub use report::{Check, ExitStatus, Summary};
pub use scenario::{run_scenario, Outcome, ScenarioError};
pub use suite::{run_verify_suite, verify_suite};
