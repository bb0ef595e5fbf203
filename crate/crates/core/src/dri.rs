//! Data Routing Information tables and the cross-checking defense.
//!
//! Each node keeps two historical bits per peer: whether it has routed data
//! *from* that peer and whether it has routed data *through* it. A source
//! only trusts a route reply from a node it has already routed data through.
//! Any other reply is cross-checked by asking the replier's claimed next hop
//! (a further request, FRq) to confirm the claimed history. The next hop
//! answers with its own bits (a further reply, FRp). A replier that claims
//! to have sent data through a node which denies ever receiving data from
//! it is classified as a black hole.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::aodv::NodeAodvState;
use crate::net::{Alarm, Frp, Frq, NodeId, Rrep};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub struct DriEntry {
    pub from_bit: bool,
    pub through_bit: bool,
}

impl DriEntry {
    pub const fn new(from_bit: bool, through_bit: bool) -> Self {
        DriEntry { from_bit, through_bit }
    }

    /// Bitwise OR; bits never go back to false.
    pub fn merge(self, other: DriEntry) -> DriEntry {
        DriEntry { from_bit: self.from_bit || other.from_bit, through_bit: self.through_bit || other.through_bit }
    }
}

impl fmt::Display for DriEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.from_bit as u8, self.through_bit as u8)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DriError {
    #[error("node {0} has no DRI entry for itself")]
    SelfLookup(NodeId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DriTable {
    owner: NodeId,
    entries: BTreeMap<NodeId, DriEntry>,
}

impl DriTable {
    pub fn new(owner: NodeId) -> Self {
        DriTable { owner, entries: BTreeMap::new() }
    }

    pub fn owner(&self) -> NodeId {
        self.owner
    }

    /// Stored entry, or `00` for a peer never seen.
    pub fn lookup(&self, peer: NodeId) -> Result<DriEntry, DriError> {
        if peer == self.owner {
            return Err(DriError::SelfLookup(peer));
        }
        Ok(self.entries.get(&peer).copied().unwrap_or_default())
    }

    /// Raises bits for `peer`. Self entries are ignored.
    pub fn raise(&mut self, peer: NodeId, bits: DriEntry) {
        if peer == self.owner {
            return;
        }
        let entry = self.entries.entry(peer).or_default();
        *entry = entry.merge(bits);
    }

    /// Records one data packet handled by the owner. `next_hop_confirmed` is
    /// the next hop only when that hop confirmed it forwarded or delivered.
    pub fn record_data_event(&mut self, prev_hop: Option<NodeId>, next_hop_confirmed: Option<NodeId>) {
        if let Some(prev) = prev_hop {
            self.raise(prev, DriEntry::new(true, false));
        }
        if let Some(next) = next_hop_confirmed {
            self.raise(next, DriEntry::new(false, true));
        }
    }

    /// A peer is reliable once the owner has routed data through it.
    pub fn is_reliable(&self, peer: NodeId) -> bool {
        self.lookup(peer).map(|e| e.through_bit).unwrap_or(false)
    }

    pub fn entries(&self) -> impl Iterator<Item = (NodeId, DriEntry)> + '_ {
        self.entries.iter().map(|(k, v)| (*k, *v))
    }
}

/// Nodes a node refuses to route with, learned from alarms.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Blacklist {
    members: BTreeSet<NodeId>,
    seen_alarms: BTreeSet<(NodeId, u64)>,
}

impl Blacklist {
    pub fn contains(&self, node: NodeId) -> bool {
        self.members.contains(&node)
    }

    pub fn members(&self) -> &BTreeSet<NodeId> {
        &self.members
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Applies an alarm. Returns true when it was new and must be rebroadcast.
pub fn propagate_alarm(alarm: &Alarm, blacklist: &mut Blacklist) -> bool {
    if !blacklist.seen_alarms.insert((alarm.reporter, alarm.alarm_id)) {
        return false;
    }
    blacklist.members.extend(alarm.black_holes.iter().copied());
    true
}

/// Answer of an honest next hop to a further request.
pub fn handle_frq(table: &DriTable, aodv: &NodeAodvState, frq: &Frq) -> Frp {
    let dri_for_suspect = table.lookup(frq.suspect).unwrap_or_default();
    let next = aodv.valid_route(frq.dest).map(|e| e.next_hop).filter(|&hop| hop != table.owner());
    Frp {
        responder: table.owner(),
        dest: frq.dest,
        dri_for_suspect,
        responder_next_hop: next,
        dri_for_responder_next_hop: next.map(|hop| table.lookup(hop).unwrap_or_default()),
    }
}

/// The route reply a session is deciding on, plus the neighbor it came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate {
    pub rrep: Rrep,
    pub from: NodeId,
}

/// One source's walk along a chain of claimed next hops.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrossCheckSession {
    pub source: NodeId,
    pub dest: NodeId,
    pub current_suspect: NodeId,
    pub current_target: NodeId,
    pub suspect_claimed_dri: DriEntry,
    /// Suspects examined so far, reply generator first.
    pub hops_examined: Vec<NodeId>,
    pub round: u32,
    pub max_rounds: u32,
    pub candidate: Candidate,
}

impl CrossCheckSession {
    pub fn frq(&self) -> Frq {
        Frq { asker: self.source, suspect: self.current_suspect, target: self.current_target, dest: self.dest }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SecureDecision {
    /// Reply generated by a blacklisted node.
    Ignore,
    /// Reply from the destination or from a reliable node.
    Accept,
    CrossCheck(Box<CrossCheckSession>),
    /// The reply names no usable next hop, so there is nothing to check.
    Unresolvable,
}

/// Decides what a detection-enabled source does with a selected route reply.
pub fn secure_route_decision(
    source_dri: &DriTable,
    blacklist: &Blacklist,
    candidate: Candidate,
    max_rounds: u32,
) -> SecureDecision {
    let rrep = &candidate.rrep;
    let source = source_dri.owner();
    if blacklist.contains(rrep.generator) {
        return SecureDecision::Ignore;
    }
    if rrep.generator == rrep.dest || source_dri.is_reliable(rrep.generator) {
        return SecureDecision::Accept;
    }
    let Some(target) = rrep.responder_next_hop else {
        return SecureDecision::Unresolvable;
    };
    if target == source || target == rrep.generator {
        return SecureDecision::Unresolvable;
    }
    SecureDecision::CrossCheck(Box::new(CrossCheckSession {
        source,
        dest: rrep.dest,
        current_suspect: rrep.generator,
        current_target: target,
        suspect_claimed_dri: rrep.responder_dri_for_nhn.unwrap_or_default(),
        hops_examined: vec![rrep.generator],
        round: 0,
        max_rounds: max_rounds.max(1),
        candidate,
    }))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SessionStep {
    /// The reply did not come from the node being queried.
    Ignored,
    /// Suspect is clean; the selected reply's route may be used.
    Accept,
    /// Suspect classified; `bypass_via` is the vouching next hop when it has
    /// a route onward to the destination that avoids the classified nodes.
    BlackHoles { members: BTreeSet<NodeId>, bypass_via: Option<NodeId> },
    /// Target was unreliable; query its own next hop.
    Continue(Frq),
    /// No classification reached.
    Unresolvable,
}

impl CrossCheckSession {
    /// Processes a further reply. Marks the clean suspect `01` in the source's table.
    pub fn on_frp(&mut self, frp: &Frp, source_dri: &mut DriTable) -> SessionStep {
        if frp.responder != self.current_target || frp.dest != self.dest {
            return SessionStep::Ignored;
        }
        if source_dri.is_reliable(self.current_target) {
            if classify_black_hole(self.suspect_claimed_dri, frp.dri_for_suspect, true) {
                let members: BTreeSet<NodeId> = self.hops_examined.iter().copied().collect();
                let bypass_via =
                    frp.responder_next_hop.filter(|hop| !members.contains(hop)).map(|_| self.current_target);
                return SessionStep::BlackHoles { members, bypass_via };
            }
            source_dri.raise(self.current_suspect, DriEntry::new(false, true));
            return SessionStep::Accept;
        }

        let Some(next_target) = frp.responder_next_hop else {
            return SessionStep::Unresolvable;
        };
        let next_suspect = self.current_target;
        self.round += 1;
        if self.round > self.max_rounds
            || next_target == self.source
            || next_target == next_suspect
            || self.hops_examined.contains(&next_target)
            || self.hops_examined.contains(&next_suspect)
        {
            return SessionStep::Unresolvable;
        }
        self.hops_examined.push(next_suspect);
        self.current_suspect = next_suspect;
        self.current_target = next_target;
        self.suspect_claimed_dri = frp.dri_for_responder_next_hop.unwrap_or_default();
        SessionStep::Continue(self.frq())
    }
}

/// The classification rule: a suspect that claims it routed data through the
/// target, while a reliable target denies routing data from it, is a black hole.
pub fn classify_black_hole(claimed: DriEntry, reported: DriEntry, target_reliable: bool) -> bool {
    target_reliable && claimed.through_bit && !reported.from_bit
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::SeqNum;

    fn n(i: u32) -> NodeId {
        NodeId(i)
    }

    // Node 4's table: 3 -> 10, 6 -> 11, 9 absent.
    fn node4_table() -> DriTable {
        let mut t = DriTable::new(n(4));
        t.raise(n(3), DriEntry::new(true, false));
        t.raise(n(6), DriEntry::new(true, true));
        t
    }

    #[test]
    fn lookup_matches_worked_table() {
        let t = node4_table();
        assert_eq!(t.lookup(n(3)).unwrap(), DriEntry::new(true, false));
        assert_eq!(t.lookup(n(6)).unwrap(), DriEntry::new(true, true));
        assert_eq!(t.lookup(n(9)).unwrap(), DriEntry::new(false, false));
        assert_eq!(t.lookup(n(4)), Err(DriError::SelfLookup(n(4))));
    }

    #[test]
    fn record_data_event_cases() {
        let mut t = DriTable::new(n(1));
        t.record_data_event(Some(n(0)), Some(n(2)));
        assert_eq!(t.lookup(n(0)).unwrap(), DriEntry::new(true, false));
        assert_eq!(t.lookup(n(2)).unwrap(), DriEntry::new(false, true));

        let mut t = DriTable::new(n(1));
        t.record_data_event(None, Some(n(2)));
        assert_eq!(t.lookup(n(2)).unwrap(), DriEntry::new(false, true));
        assert_eq!(t.entries().count(), 1);

        let mut t = DriTable::new(n(1));
        t.record_data_event(Some(n(3)), None);
        assert_eq!(t.lookup(n(3)).unwrap(), DriEntry::new(true, false));
        assert_eq!(t.entries().count(), 1);
    }

    #[test]
    fn reliability_needs_through_bit() {
        let t = node4_table();
        assert!(t.is_reliable(n(6)));
        assert!(!t.is_reliable(n(3)));
        assert!(!t.is_reliable(n(9)));
    }

    #[test]
    fn bits_never_reset() {
        let mut t = DriTable::new(n(0));
        t.raise(n(1), DriEntry::new(true, true));
        t.raise(n(1), DriEntry::new(false, false));
        t.raise(n(1), DriEntry::new(false, true));
        assert_eq!(t.lookup(n(1)).unwrap(), DriEntry::new(true, true));
    }

    #[test]
    fn alarm_dedup_and_union() {
        let mut bl = Blacklist::default();
        let a = Alarm { reporter: n(7), black_holes: [n(23), n(24)].into(), alarm_id: 0 };
        assert!(propagate_alarm(&a, &mut bl));
        assert!(!propagate_alarm(&a, &mut bl));
        assert_eq!(bl.members(), &BTreeSet::from([n(23), n(24)]));

        let mut bl = Blacklist::default();
        let a1 = Alarm { reporter: n(1), black_holes: [n(23)].into(), alarm_id: 0 };
        let a2 = Alarm { reporter: n(1), black_holes: [n(24)].into(), alarm_id: 1 };
        assert!(propagate_alarm(&a1, &mut bl));
        assert!(propagate_alarm(&a2, &mut bl));
        assert_eq!(bl.members(), &BTreeSet::from([n(23), n(24)]));
    }

    fn rrep_from(generator: u32, nhn: Option<u32>, claimed: DriEntry) -> Candidate {
        Candidate {
            rrep: Rrep {
                origin: n(0),
                dest: n(4),
                dest_seq: SeqNum(100),
                hop_count: 1,
                generator: n(generator),
                responder_next_hop: nhn.map(n),
                responder_dri_for_nhn: nhn.map(|_| claimed),
                path: vec![n(generator)],
            },
            from: n(generator),
        }
    }

    #[test]
    fn destination_and_reliable_replies_are_accepted() {
        let mut dri = DriTable::new(n(0));
        let bl = Blacklist::default();
        let dest_reply = rrep_from(4, None, DriEntry::default());
        assert_eq!(secure_route_decision(&dri, &bl, dest_reply, 30), SecureDecision::Accept);

        dri.raise(n(2), DriEntry::new(true, true));
        let reliable = rrep_from(2, Some(3), DriEntry::default());
        assert_eq!(secure_route_decision(&dri, &bl, reliable, 30), SecureDecision::Accept);
    }

    #[test]
    fn unknown_replier_opens_cross_check() {
        let dri = DriTable::new(n(0));
        let bl = Blacklist::default();
        let c = rrep_from(9, Some(5), DriEntry::new(true, true));
        match secure_route_decision(&dri, &bl, c, 30) {
            SecureDecision::CrossCheck(s) => {
                assert_eq!(s.frq(), Frq { asker: n(0), suspect: n(9), target: n(5), dest: n(4) });
            }
            other => panic!("expected cross-check, got {other:?}"),
        }
    }

    #[test]
    fn blacklisted_generator_is_ignored() {
        let dri = DriTable::new(n(0));
        let mut bl = Blacklist::default();
        propagate_alarm(&Alarm { reporter: n(1), black_holes: [n(9)].into(), alarm_id: 0 }, &mut bl);
        let c = rrep_from(9, Some(5), DriEntry::new(true, true));
        assert_eq!(secure_route_decision(&dri, &bl, c, 30), SecureDecision::Ignore);
    }

    fn session(target_reliable: bool, claimed: DriEntry) -> (CrossCheckSession, DriTable) {
        let mut dri = DriTable::new(n(0));
        if target_reliable {
            dri.raise(n(5), DriEntry::new(true, true));
        }
        let c = rrep_from(9, Some(5), claimed);
        match secure_route_decision(&dri, &Blacklist::default(), c, 30) {
            SecureDecision::CrossCheck(s) => (*s, dri),
            other => panic!("{other:?}"),
        }
    }

    fn frp(responder: u32, about: DriEntry, next: Option<(u32, DriEntry)>) -> Frp {
        Frp {
            responder: n(responder),
            dest: n(4),
            dri_for_suspect: about,
            responder_next_hop: next.map(|(h, _)| n(h)),
            dri_for_responder_next_hop: next.map(|(_, e)| e),
        }
    }

    #[test]
    fn reliable_target_denying_history_flags_suspect() {
        let (mut s, mut dri) = session(true, DriEntry::new(true, true));
        let step = s.on_frp(&frp(5, DriEntry::new(false, false), Some((4, DriEntry::new(true, true)))), &mut dri);
        assert_eq!(step, SessionStep::BlackHoles { members: [n(9)].into(), bypass_via: Some(n(5)) });
    }

    #[test]
    fn flag_without_onward_route_has_no_bypass() {
        let (mut s, mut dri) = session(true, DriEntry::new(true, true));
        let step = s.on_frp(&frp(5, DriEntry::new(false, false), None), &mut dri);
        assert_eq!(step, SessionStep::BlackHoles { members: [n(9)].into(), bypass_via: None });
    }

    #[test]
    fn clean_suspect_gets_01() {
        let (mut s, mut dri) = session(true, DriEntry::new(true, true));
        let step = s.on_frp(&frp(5, DriEntry::new(true, false), None), &mut dri);
        assert_eq!(step, SessionStep::Accept);
        assert_eq!(dri.lookup(n(9)).unwrap(), DriEntry::new(false, true));
    }

    #[test]
    fn unreliable_target_continues_the_walk() {
        let (mut s, mut dri) = session(false, DriEntry::new(true, true));
        let step = s.on_frp(&frp(5, DriEntry::new(true, true), Some((7, DriEntry::new(true, true)))), &mut dri);
        assert_eq!(step, SessionStep::Continue(Frq { asker: n(0), suspect: n(5), target: n(7), dest: n(4) }));
        assert_eq!(s.hops_examined, vec![n(9), n(5)]);
        assert_eq!(s.round, 1);
        assert_eq!(s.suspect_claimed_dri, DriEntry::new(true, true));
    }

    #[test]
    fn walk_stops_on_cycle_or_dead_end() {
        let (mut s, mut dri) = session(false, DriEntry::new(true, true));
        // target 5 points back at the generator 9
        let step = s.on_frp(&frp(5, DriEntry::default(), Some((9, DriEntry::default()))), &mut dri);
        assert_eq!(step, SessionStep::Unresolvable);

        let (mut s, mut dri) = session(false, DriEntry::new(true, true));
        assert_eq!(s.on_frp(&frp(5, DriEntry::default(), None), &mut dri), SessionStep::Unresolvable);
    }

    #[test]
    fn walk_respects_max_rounds() {
        let mut dri = DriTable::new(n(0));
        let c = rrep_from(9, Some(5), DriEntry::new(true, true));
        let SecureDecision::CrossCheck(mut s) = secure_route_decision(&dri, &Blacklist::default(), c, 1) else {
            panic!()
        };
        assert!(matches!(
            s.on_frp(&frp(5, DriEntry::default(), Some((6, DriEntry::default()))), &mut dri),
            SessionStep::Continue(_)
        ));
        assert_eq!(
            s.on_frp(&frp(6, DriEntry::default(), Some((7, DriEntry::default()))), &mut dri),
            SessionStep::Unresolvable
        );
    }

    #[test]
    fn reply_from_wrong_node_is_ignored() {
        let (mut s, mut dri) = session(true, DriEntry::new(true, true));
        assert_eq!(s.on_frp(&frp(6, DriEntry::default(), None), &mut dri), SessionStep::Ignored);
    }

    #[test]
    fn classification_truth_table() {
        for claimed_through in [false, true] {
            for reported_from in [false, true] {
                for reliable in [false, true] {
                    let flagged = classify_black_hole(
                        DriEntry::new(false, claimed_through),
                        DriEntry::new(reported_from, false),
                        reliable,
                    );
                    assert_eq!(flagged, reliable && claimed_through && !reported_from);
                }
            }
        }
    }
}
