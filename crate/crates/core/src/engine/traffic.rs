//! Constant bit rate sources.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::net::{DataPacket, NodeId};

#[derive(Debug, Clone, PartialEq)]
pub struct CbrFlow {
    pub id: usize,
    pub src: NodeId,
    pub dst: NodeId,
    pub start: f64,
    pub interval: f64,
    pub payload_bytes: u32,
    next_pkt_id: u64,
}

impl CbrFlow {
    pub fn new(id: usize, src: NodeId, dst: NodeId, start: f64, rate_pps: f64, payload_bytes: u32) -> Self {
        CbrFlow { id, src, dst, start, interval: 1.0 / rate_pps, payload_bytes, next_pkt_id: 0 }
    }

    /// Emission time of packet `k`; computed directly to avoid drift.
    pub fn emit_time(&self, k: u64) -> f64 {
        self.start + k as f64 * self.interval
    }

    pub fn emitted(&self) -> u64 {
        self.next_pkt_id
    }

    pub fn cbr_emit(&mut self, now: f64) -> DataPacket {
        let pkt = DataPacket {
            flow: self.id,
            origin: self.src,
            dest: self.dst,
            pkt_id: self.next_pkt_id,
            payload_bytes: self.payload_bytes,
            created_at: now,
        };
        self.next_pkt_id += 1;
        pkt
    }

    /// Next emission time strictly before `end`, if any.
    pub fn next_emit_before(&self, end: f64) -> Option<f64> {
        let t = self.emit_time(self.next_pkt_id);
        (t < end).then_some(t)
    }
}

/// Draws `count` distinct (src, dst) pairs among nodes not in `excluded`.
pub fn choose_flows<R: Rng>(
    num_nodes: usize,
    excluded: &BTreeSet<NodeId>,
    count: usize,
    rng: &mut R,
) -> Vec<(NodeId, NodeId)> {
    let honest: Vec<NodeId> = (0..num_nodes as u32).map(NodeId).filter(|n| !excluded.contains(n)).collect();
    let mut pairs: Vec<(NodeId, NodeId)> =
        honest.iter().flat_map(|&s| honest.iter().filter(move |&&d| d != s).map(move |&d| (s, d))).collect();
    pairs.shuffle(rng);
    pairs.truncate(count);
    pairs
}
