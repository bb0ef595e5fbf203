//! Discrete-event MANET simulator: AODV route discovery, black-hole
//! adversaries, and DRI-table cross-check detection.

pub mod adversary;
pub mod aodv;
pub mod dri;
pub mod engine;
pub mod matrix;
pub mod metrics;
pub mod net;
pub mod trace;

pub use engine::{parse_scenario, run_scenario, RunResult, ScenarioConfig, SimError, Simulator};
pub use metrics::{Counters, MetricsRecord, Mode};
pub use net::{NodeId, Position};
