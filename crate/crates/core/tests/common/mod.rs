#![allow(dead_code)]

use manet_sim::adversary::BlackHoleConfig;
use manet_sim::engine::config::{AttackConfig, CbrConfig, DetectionConfig};
use manet_sim::metrics::Mode;
use manet_sim::{NodeId, Position, RunResult, ScenarioConfig, Simulator};

pub fn n(i: u32) -> NodeId {
    NodeId(i)
}

pub fn static_scenario(positions: &[(f64, f64)], flows: &[(u32, u32)], members: &[u32]) -> ScenarioConfig {
    ScenarioConfig {
        num_nodes: positions.len(),
        speed: 0.0,
        duration_seconds: 20.0,
        positions: Some(positions.iter().map(|&(x, y)| Position::new(x, y)).collect()),
        cbr: CbrConfig { flows: Some(flows.iter().map(|&(s, d)| (n(s), n(d))).collect()), ..Default::default() },
        attack: AttackConfig {
            enabled: false,
            black_holes: BlackHoleConfig { members: members.iter().map(|&m| n(m)).collect(), ..Default::default() },
        },
        detection: DetectionConfig { warmup_flows: 1, ..Default::default() },
        ..Default::default()
    }
}

// Node ids of the five-node topology.
pub const A: u32 = 0;
pub const B: u32 = 1;
pub const D: u32 = 2;
pub const E: u32 = 3;
pub const M: u32 = 4;

/// A reaches E over two honest two-hop paths (A-B-E, A-D-E); M sits next
/// to A and B only. A sends CBR to E.
pub fn five_node(mode: Mode) -> ScenarioConfig {
    static_scenario(&[(0.0, 200.0), (200.0, 200.0), (0.0, 400.0), (200.0, 400.0), (100.0, 50.0)], &[(A, E)], &[M])
        .with_mode(mode)
}

// Node ids of the colluding-pair topology.
pub const SRC: u32 = 0;
pub const X: u32 = 1;
pub const DST: u32 = 2;
pub const M1: u32 = 3;
pub const M2: u32 = 4;

/// Line SRC-X-DST with the pair M1-M2 hanging below: SRC-M1, M1-M2, M2-X.
pub fn colluding_pair(mode: Mode) -> ScenarioConfig {
    let mut cfg = static_scenario(
        &[(0.0, 200.0), (200.0, 200.0), (400.0, 200.0), (0.0, 0.0), (200.0, 0.0)],
        &[(SRC, DST)],
        &[M1, M2],
    )
    .with_mode(mode);
    cfg.attack.black_holes.cooperative = true;
    cfg
}

/// Default 30-node scenario for a mode, speed and seed.
pub fn default_run(mode: Mode, speed: f64, seed: u64, warmup: u32) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::default().with_mode(mode);
    cfg.speed = speed;
    cfg.seed = seed;
    cfg.detection.warmup_flows = warmup;
    cfg
}

pub fn conserved(r: &RunResult) -> bool {
    r.metrics.totals.conserved() && r.metrics.flows.iter().all(|f| f.conserved())
}

/// First time a data packet for any flow is handed to `node` for relaying.
pub fn first_relay(r: &RunResult, node: u32) -> Option<f64> {
    r.nodes[node as usize].first_relay_in
}

/// Follows valid next hops from `src` toward `dest`; true if a node repeats.
pub fn has_loop(sim: &Simulator, src: NodeId, dest: NodeId) -> bool {
    let mut seen = vec![false; sim.config().num_nodes];
    let mut at = src;
    while at != dest {
        if std::mem::replace(&mut seen[at.index()], true) {
            return true;
        }
        match sim.routing_entry(at, dest) {
            Some(e) => at = e.next_hop,
            None => return false,
        }
    }
    false
}
