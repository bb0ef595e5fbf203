//! Black-hole behavior.
//!
//! A black hole answers every route request at once with a forged reply
//! carrying an inflated destination sequence number, never floods the
//! request onward, and absorbs every data packet it is asked to relay. In
//! cooperative mode members vouch for each other when cross-checked.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::dri::{DriEntry, DriTable};
use crate::net::{DataPacket, Frp, Frq, NodeId, Rrep, Rreq, SeqNum};

pub const DEFAULT_SEQ_INFLATION: u64 = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct BlackHoleConfig {
    pub members: BTreeSet<NodeId>,
    pub seq_inflation: u64,
    pub advertised_hop_count: u32,
    pub respond_delay_seconds: f64,
    pub cooperative: bool,
}

impl Default for BlackHoleConfig {
    fn default() -> Self {
        BlackHoleConfig {
            members: [NodeId(23), NodeId(24)].into(),
            seq_inflation: DEFAULT_SEQ_INFLATION,
            advertised_hop_count: 1,
            respond_delay_seconds: 0.0,
            cooperative: false,
        }
    }
}

impl BlackHoleConfig {
    pub fn is_member(&self, node: NodeId) -> bool {
        self.members.contains(&node)
    }

    /// The member a cooperative black hole names as its next hop.
    fn partner_of(&self, node: NodeId) -> Option<NodeId> {
        self.members.range(node..).chain(self.members.range(..node)).copied().find(|&m| m != node)
    }
}

/// Next hop a black hole discloses: its partner in cooperative mode, otherwise
/// a uniformly chosen honest neighbor other than the excluded nodes.
fn fabricate_next_hop<R: Rng>(
    cfg: &BlackHoleConfig,
    self_id: NodeId,
    neighbors: &[NodeId],
    exclude: &[NodeId],
    rng: &mut R,
) -> Option<NodeId> {
    if cfg.cooperative {
        if let Some(p) = cfg.partner_of(self_id).filter(|p| !exclude.contains(p)) {
            return Some(p);
        }
    }
    let honest: Vec<NodeId> =
        neighbors.iter().copied().filter(|n| *n != self_id && !cfg.is_member(*n) && !exclude.contains(n)).collect();
    honest.choose(rng).copied()
}

/// Forged reply. The routing table is never consulted.
pub fn blackhole_handle_rreq<R: Rng>(
    cfg: &BlackHoleConfig,
    self_id: NodeId,
    rreq: &Rreq,
    neighbors: &[NodeId],
    rng: &mut R,
) -> Rrep {
    let nhn = fabricate_next_hop(cfg, self_id, neighbors, &[rreq.origin, rreq.dest], rng);
    Rrep {
        origin: rreq.origin,
        dest: rreq.dest,
        dest_seq: SeqNum(rreq.dest_seq_known.0 + cfg.seq_inflation),
        hop_count: cfg.advertised_hop_count,
        generator: self_id,
        responder_next_hop: nhn,
        responder_dri_for_nhn: nhn.map(|_| DriEntry::new(true, true)),
        path: vec![self_id],
    }
}

/// Per-node absorption counter.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BlackHoleState {
    pub absorbed: u64,
}

impl BlackHoleState {
    /// Swallows a packet not addressed to this node.
    pub fn handle_data(&mut self, _pkt: DataPacket) {
        self.absorbed += 1;
    }
}

/// Reply of a black hole queried as next hop. A cooperative member vouches
/// for a fellow member; otherwise it answers truthfully from its own (empty)
/// table and claims no onward route.
pub fn blackhole_handle_frq<R: Rng>(
    cfg: &BlackHoleConfig,
    table: &DriTable,
    frq: &Frq,
    neighbors: &[NodeId],
    rng: &mut R,
) -> Frp {
    let self_id = table.owner();
    if cfg.cooperative && cfg.is_member(frq.suspect) {
        let onward = fabricate_next_hop(
            &BlackHoleConfig { cooperative: false, ..cfg.clone() },
            self_id,
            neighbors,
            &[frq.asker, frq.suspect],
            rng,
        );
        return Frp {
            responder: self_id,
            dest: frq.dest,
            dri_for_suspect: DriEntry::new(true, true),
            responder_next_hop: onward,
            dri_for_responder_next_hop: onward.map(|_| DriEntry::new(true, true)),
        };
    }
    Frp {
        responder: self_id,
        dest: frq.dest,
        dri_for_suspect: table.lookup(frq.suspect).unwrap_or_default(),
        responder_next_hop: None,
        dri_for_responder_next_hop: None,
    }
}
