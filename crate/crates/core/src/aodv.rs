//! Per-node AODV route discovery.
//!
//! Covers routing-table maintenance under destination sequence numbers,
//! RREQ flooding with duplicate suppression, RREP generation at the
//! destination or at an intermediate node holding a fresh route, RREP
//! selection at the originator, and hop-by-hop data forwarding. Route
//! maintenance is limited to invalidating entries whose next hop is lost.

use std::collections::{BTreeMap, HashSet, VecDeque};

use crate::dri::{Candidate, DriTable};
use crate::net::{DataPacket, NodeId, Rrep, Rreq, SeqNum};

pub const DEFAULT_BUFFER_CAPACITY: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoutingTableEntry {
    pub dest: NodeId,
    pub next_hop: NodeId,
    pub hop_count: u32,
    pub dest_seq: SeqNum,
    pub valid: bool,
}

impl RoutingTableEntry {
    pub fn new(dest: NodeId, next_hop: NodeId, hop_count: u32, dest_seq: SeqNum) -> Self {
        RoutingTableEntry { dest, next_hop, hop_count, dest_seq, valid: true }
    }

    /// Strict improvement: fresher, or equally fresh and shorter.
    pub fn better_than(&self, other: &RoutingTableEntry) -> bool {
        self.dest_seq > other.dest_seq || (self.dest_seq == other.dest_seq && self.hop_count < other.hop_count)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AodvError {
    #[error("node {0} cannot discover a route to itself")]
    SelfDiscovery(NodeId),
    #[error("node {node} asked to reply as destination of a request for {dest}")]
    NotDestination { node: NodeId, dest: NodeId },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiscoveryPhase {
    /// Waiting for replies.
    Collecting,
    /// A reply was selected and is being verified or installed.
    Verifying,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Discovery {
    pub broadcast_id: u64,
    pub dest_seq_known: SeqNum,
    pub best: Option<Candidate>,
    pub phase: DiscoveryPhase,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RreqOutcome {
    Duplicate,
    Rebroadcast(Rreq),
    Reply {
        to: NodeId,
        rrep: Rrep,
        /// Optional reply toward the destination, sent to the given next hop.
        gratuitous: Option<(NodeId, Rrep)>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RrepOutcome {
    Ignored,
    /// Installed at the originator outside any discovery.
    Installed,
    Forward {
        to: NodeId,
        rrep: Rrep,
    },
    /// Retained as (best) candidate while the collection window is open.
    Collected {
        first: bool,
    },
    /// First reply selected immediately (window closed).
    Selected(Candidate),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ForwardOutcome {
    Unicast { to: NodeId, pkt: DataPacket },
    Buffered { rreq: Option<Rreq>, evicted: Option<DataPacket> },
    Dropped(DataPacket),
}

#[derive(Debug, Clone)]
pub struct NodeAodvState {
    self_id: NodeId,
    own_seq: SeqNum,
    routes: BTreeMap<NodeId, RoutingTableEntry>,
    seen_rreqs: HashSet<(NodeId, u64)>,
    next_broadcast_id: u64,
    pending: BTreeMap<NodeId, VecDeque<DataPacket>>,
    discoveries: BTreeMap<NodeId, Discovery>,
    buffer_capacity: usize,
    gratuitous_rrep: bool,
}

impl NodeAodvState {
    pub fn new(self_id: NodeId) -> Self {
        NodeAodvState {
            self_id,
            own_seq: SeqNum(0),
            routes: BTreeMap::new(),
            seen_rreqs: HashSet::new(),
            next_broadcast_id: 0,
            pending: BTreeMap::new(),
            discoveries: BTreeMap::new(),
            buffer_capacity: DEFAULT_BUFFER_CAPACITY,
            gratuitous_rrep: false,
        }
    }

    pub fn with_buffer_capacity(mut self, cap: usize) -> Self {
        self.buffer_capacity = cap.max(1);
        self
    }

    pub fn with_gratuitous_rrep(mut self, on: bool) -> Self {
        self.gratuitous_rrep = on;
        self
    }

    pub fn self_id(&self) -> NodeId {
        self.self_id
    }

    pub fn own_seq(&self) -> SeqNum {
        self.own_seq
    }

    pub fn set_own_seq(&mut self, seq: SeqNum) {
        self.own_seq = self.own_seq.max(seq);
    }

    pub fn entry(&self, dest: NodeId) -> Option<&RoutingTableEntry> {
        self.routes.get(&dest)
    }

    pub fn valid_route(&self, dest: NodeId) -> Option<&RoutingTableEntry> {
        self.routes.get(&dest).filter(|e| e.valid)
    }

    pub fn routes(&self) -> impl Iterator<Item = &RoutingTableEntry> {
        self.routes.values()
    }

    pub fn discovery(&self, dest: NodeId) -> Option<&Discovery> {
        self.discoveries.get(&dest)
    }

    pub fn has_seen(&self, origin: NodeId, broadcast_id: u64) -> bool {
        self.seen_rreqs.contains(&(origin, broadcast_id))
    }

    /// Marks a flood as seen; false if it already was.
    pub fn mark_seen(&mut self, origin: NodeId, broadcast_id: u64) -> bool {
        self.seen_rreqs.insert((origin, broadcast_id))
    }

    pub fn pending_len(&self) -> usize {
        self.pending.values().map(VecDeque::len).sum()
    }

    pub fn pending_for(&self, dest: NodeId) -> usize {
        self.pending.get(&dest).map_or(0, VecDeque::len)
    }

    /// Installs `cand` if it improves on the current entry. An invalid entry
    /// is replaced by an equally fresh one but never by a staler one, so the
    /// stored sequence number for a destination never decreases.
    pub fn offer_route(&mut self, cand: RoutingTableEntry) -> bool {
        if cand.next_hop == self.self_id || cand.dest == self.self_id {
            return false;
        }
        let install = match self.routes.get(&cand.dest) {
            None => true,
            Some(cur) if cur.valid => cand.better_than(cur),
            Some(cur) => cand.dest_seq >= cur.dest_seq,
        };
        if install {
            self.routes.insert(cand.dest, RoutingTableEntry { valid: true, ..cand });
        }
        install
    }

    pub fn originate_discovery(&mut self, dest: NodeId) -> Result<Rreq, AodvError> {
        if dest == self.self_id {
            return Err(AodvError::SelfDiscovery(dest));
        }
        self.own_seq = SeqNum(self.own_seq.0 + 1);
        let broadcast_id = self.next_broadcast_id;
        self.next_broadcast_id += 1;
        self.seen_rreqs.insert((self.self_id, broadcast_id));
        let dest_seq_known = self.routes.get(&dest).map_or(SeqNum(0), |e| e.dest_seq);
        self.discoveries
            .insert(dest, Discovery { broadcast_id, dest_seq_known, best: None, phase: DiscoveryPhase::Collecting });
        Ok(Rreq { origin: self.self_id, origin_seq: self.own_seq, broadcast_id, dest, dest_seq_known, hop_count: 0 })
    }

    pub fn handle_rreq(&mut self, rreq: &Rreq, from: NodeId, dri: &DriTable) -> RreqOutcome {
        if !self.seen_rreqs.insert((rreq.origin, rreq.broadcast_id)) || rreq.origin == self.self_id {
            return RreqOutcome::Duplicate;
        }
        self.offer_route(RoutingTableEntry::new(rreq.origin, from, rreq.hop_count + 1, rreq.origin_seq));
        let back = self.valid_route(rreq.origin).map_or(from, |e| e.next_hop);

        if rreq.dest == self.self_id {
            let rrep = self.make_dest_rrep(rreq).expect("self is the destination");
            return RreqOutcome::Reply { to: back, rrep, gratuitous: None };
        }

        if let Some(entry) = self.valid_route(rreq.dest).copied() {
            if entry.dest_seq >= rreq.dest_seq_known && entry.next_hop != from {
                let rrep = Rrep {
                    origin: rreq.origin,
                    dest: rreq.dest,
                    dest_seq: entry.dest_seq,
                    hop_count: entry.hop_count,
                    generator: self.self_id,
                    responder_next_hop: Some(entry.next_hop),
                    responder_dri_for_nhn: Some(dri.lookup(entry.next_hop).unwrap_or_default()),
                    path: vec![self.self_id],
                };
                let gratuitous = self.gratuitous_rrep.then(|| {
                    let reverse = self.valid_route(rreq.origin).copied();
                    let g = Rrep {
                        origin: rreq.dest,
                        dest: rreq.origin,
                        dest_seq: rreq.origin_seq,
                        hop_count: reverse.map_or(rreq.hop_count + 1, |e| e.hop_count),
                        generator: self.self_id,
                        responder_next_hop: Some(back),
                        responder_dri_for_nhn: Some(dri.lookup(back).unwrap_or_default()),
                        path: vec![self.self_id],
                    };
                    (entry.next_hop, g)
                });
                return RreqOutcome::Reply { to: back, rrep, gratuitous };
            }
        }

        // Carry the freshest sequence number known here so stale replies are not solicited.
        let known = self.routes.get(&rreq.dest).map_or(rreq.dest_seq_known, |e| e.dest_seq.max(rreq.dest_seq_known));
        RreqOutcome::Rebroadcast(Rreq { hop_count: rreq.hop_count + 1, dest_seq_known: known, ..rreq.clone() })
    }

    /// Destination reply: own sequence number becomes max(own, requested + 1).
    pub fn make_dest_rrep(&mut self, rreq: &Rreq) -> Result<Rrep, AodvError> {
        if rreq.dest != self.self_id {
            return Err(AodvError::NotDestination { node: self.self_id, dest: rreq.dest });
        }
        self.own_seq = self.own_seq.max(SeqNum(rreq.dest_seq_known.0 + 1));
        Ok(Rrep {
            origin: rreq.origin,
            dest: self.self_id,
            dest_seq: self.own_seq,
            hop_count: 0,
            generator: self.self_id,
            responder_next_hop: None,
            responder_dri_for_nhn: None,
            path: vec![self.self_id],
        })
    }

    pub fn handle_rrep(&mut self, rrep: &Rrep, from: NodeId, window_open: bool) -> RrepOutcome {
        if rrep.dest == self.self_id {
            return RrepOutcome::Ignored;
        }
        let cand = RoutingTableEntry::new(rrep.dest, from, rrep.hop_count + 1, rrep.dest_seq);

        if rrep.origin == self.self_id {
            let has_route = self.valid_route(rrep.dest).is_some();
            return match self.discoveries.get_mut(&rrep.dest) {
                Some(d) if d.phase == DiscoveryPhase::Collecting => {
                    let candidate = Candidate { rrep: rrep.clone(), from };
                    if window_open {
                        let first = d.best.is_none();
                        let replace = d.best.as_ref().is_none_or(|b| {
                            cand.better_than(&RoutingTableEntry::new(
                                b.rrep.dest,
                                b.from,
                                b.rrep.hop_count + 1,
                                b.rrep.dest_seq,
                            ))
                        });
                        if replace {
                            d.best = Some(candidate);
                        }
                        RrepOutcome::Collected { first }
                    } else {
                        d.phase = DiscoveryPhase::Verifying;
                        RrepOutcome::Selected(candidate)
                    }
                }
                Some(_) => RrepOutcome::Ignored,
                None if !has_route => {
                    if self.offer_route(cand) {
                        RrepOutcome::Installed
                    } else {
                        RrepOutcome::Ignored
                    }
                }
                None => RrepOutcome::Ignored,
            };
        }

        self.offer_route(cand);
        match self.valid_route(rrep.origin) {
            Some(back) if back.next_hop != from => {
                let mut fwd = rrep.clone();
                fwd.hop_count += 1;
                fwd.path.push(self.self_id);
                RrepOutcome::Forward { to: back.next_hop, rrep: fwd }
            }
            _ => RrepOutcome::Ignored,
        }
    }

    /// Ends the collection window of discovery `broadcast_id`, returning its best reply.
    pub fn close_window(&mut self, dest: NodeId, broadcast_id: u64) -> Option<Candidate> {
        let d = self.discoveries.get_mut(&dest)?;
        if d.broadcast_id != broadcast_id || d.phase != DiscoveryPhase::Collecting {
            return None;
        }
        let best = d.best.take()?;
        d.phase = DiscoveryPhase::Verifying;
        Some(best)
    }

    /// Installs the selected reply's route and releases buffered packets.
    pub fn accept_candidate(&mut self, cand: &Candidate) -> Vec<DataPacket> {
        let rrep = &cand.rrep;
        self.offer_route(RoutingTableEntry::new(rrep.dest, cand.from, rrep.hop_count + 1, rrep.dest_seq));
        self.discoveries.remove(&rrep.dest);
        self.take_pending(rrep.dest)
    }

    /// Installs a route to `dest` through neighbor `via`, at the freshness the
    /// discovery already knew, and releases buffered packets.
    pub fn install_bypass(&mut self, dest: NodeId, via: NodeId, hop_count: u32) -> Vec<DataPacket> {
        let seq = self
            .discoveries
            .get(&dest)
            .map(|d| d.dest_seq_known)
            .or_else(|| self.routes.get(&dest).map(|e| e.dest_seq))
            .unwrap_or_default();
        self.offer_route(RoutingTableEntry::new(dest, via, hop_count, seq));
        self.discoveries.remove(&dest);
        self.take_pending(dest)
    }

    pub fn abandon_discovery(&mut self, dest: NodeId) -> Option<Discovery> {
        self.discoveries.remove(&dest)
    }

    pub fn take_pending(&mut self, dest: NodeId) -> Vec<DataPacket> {
        self.pending.remove(&dest).map(Vec::from).unwrap_or_default()
    }

    pub fn forward_data(&mut self, pkt: DataPacket) -> Result<ForwardOutcome, AodvError> {
        if let Some(e) = self.valid_route(pkt.dest) {
            return Ok(ForwardOutcome::Unicast { to: e.next_hop, pkt });
        }
        if pkt.origin != self.self_id {
            return Ok(ForwardOutcome::Dropped(pkt));
        }
        let dest = pkt.dest;
        let queue = self.pending.entry(dest).or_default();
        queue.push_back(pkt);
        let evicted = if queue.len() > self.buffer_capacity { queue.pop_front() } else { None };
        let rreq = if self.discoveries.contains_key(&dest) { None } else { Some(self.originate_discovery(dest)?) };
        Ok(ForwardOutcome::Buffered { rreq, evicted })
    }

    pub fn invalidate_routes_via(&mut self, lost_neighbor: NodeId) -> usize {
        let mut count = 0;
        for e in self.routes.values_mut() {
            if e.valid && e.next_hop == lost_neighbor {
                e.valid = false;
                count += 1;
            }
        }
        count
    }

    /// Invalidates the entry for `dest` if it currently points at `via`.
    pub fn invalidate_route(&mut self, dest: NodeId, via: NodeId) -> bool {
        match self.routes.get_mut(&dest) {
            Some(e) if e.valid && e.next_hop == via => {
                e.valid = false;
                true
            }
            _ => false,
        }
    }
}
