mod common;

use std::collections::BTreeMap;

use common::*;
use manet_sim::metrics::Mode;
use manet_sim::net::SeqNum;
use manet_sim::{run_scenario, NodeId, ScenarioConfig, Simulator};
use proptest::prelude::*;

fn mode_strategy() -> impl Strategy<Value = Mode> {
    prop_oneof![Just(Mode::Clean), Just(Mode::Attack), Just(Mode::AttackDetection)]
}

/// Random static eight-node scenario; node 7 is the black hole when the mode enables one.
fn eight_node(seed: u64, mode: Mode) -> ScenarioConfig {
    let mut cfg =
        ScenarioConfig { num_nodes: 8, speed: 0.0, duration_seconds: 6.0, seed, ..Default::default() }.with_mode(mode);
    cfg.cbr.num_flows = 4;
    cfg.attack.black_holes.members = [NodeId(7)].into();
    cfg.detection.warmup_flows = 1;
    cfg
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 100, ..ProptestConfig::default() })]

    #[test]
    fn routing_tables_stay_loop_free(seed in 0u64..1_000_000, mode in mode_strategy()) {
        let mut sim = Simulator::new(eight_node(seed, mode), false).unwrap();
        let nodes: Vec<NodeId> = (0..8).map(NodeId).collect();
        while sim.step() {
            for &s in &nodes {
                for &d in &nodes {
                    if s != d {
                        prop_assert!(!has_loop(&sim, s, d), "loop {s}->{d} at t={}", sim.now());
                    }
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn packets_are_conserved(seed in 0u64..1_000_000, mode in mode_strategy(), speed in 0.0f64..20.0) {
        let mut cfg = eight_node(seed, mode);
        cfg.speed = speed;
        cfg.pause_seconds = 1.0;
        let r = run_scenario(&cfg, false).unwrap();
        prop_assert!(conserved(&r));
        prop_assert!((0.0..=1.0).contains(&r.metrics.pdr));
    }

    #[test]
    fn state_is_monotone_and_positions_stay_inside(seed in 0u64..1_000_000, mode in mode_strategy()) {
        let mut cfg = eight_node(seed, mode);
        cfg.speed = 15.0;
        cfg.pause_seconds = 0.5;
        let mut sim = Simulator::new(cfg.clone(), false).unwrap();
        let nodes: Vec<NodeId> = (0..8).map(NodeId).collect();
        let mut dri = BTreeMap::new();
        let mut seqs = [SeqNum(0); 8];
        let mut blacklisted = [0; 8];
        while sim.step() {
            for p in sim.positions() {
                prop_assert!((0.0..=cfg.area_width).contains(&p.x));
                prop_assert!((0.0..=cfg.area_height).contains(&p.y));
            }
            for &a in &nodes {
                for (peer, e) in sim.dri(a).entries() {
                    let old = dri.insert((a, peer), e).unwrap_or_default();
                    prop_assert!(e.merge(old) == e, "DRI {a}->{peer} went from {old} to {e}");
                }
                let seq = sim.aodv(a).own_seq();
                prop_assert!(seq >= seqs[a.index()]);
                seqs[a.index()] = seq;
                let bl = sim.blacklist(a).members().len();
                prop_assert!(bl >= blacklisted[a.index()]);
                blacklisted[a.index()] = bl;
            }
        }
    }

    #[test]
    fn runs_are_deterministic(seed in 0u64..1_000_000, mode in mode_strategy()) {
        let mut cfg = eight_node(seed, mode);
        cfg.speed = 5.0;
        let a = run_scenario(&cfg, true).unwrap();
        let b = run_scenario(&cfg, true).unwrap();
        prop_assert_eq!(a.trace, b.trace);
        prop_assert_eq!(a.metrics, b.metrics);
    }

    #[test]
    fn detection_never_flags_honest_nodes(seed in 0u64..1_000_000) {
        let r = run_scenario(&eight_node(seed, Mode::AttackDetection), false).unwrap();
        prop_assert!(r.flagged.keys().all(|k| k.0 == 7));
    }
}

#[test]
fn placement_is_connected_when_required() {
    for seed in 0..20 {
        let sim = Simulator::new(default_run(Mode::Clean, 0.0, seed, 0), false).unwrap();
        assert!(manet_sim::engine::radio::is_connected(sim.positions(), 250.0));
    }
}
