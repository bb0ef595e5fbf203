//! Scenario configuration and the discrete-event engine.

pub mod config;
pub mod event;
pub mod mobility;
pub mod radio;
pub mod sim;
pub mod traffic;

pub use config::{parse_scenario, parse_scenario_str, ConfigError, ScenarioConfig};
pub use sim::{run_scenario, NodeReport, RunResult, SimError, Simulator};
