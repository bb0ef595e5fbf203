//! Single-threaded discrete-event run of one scenario.

use std::collections::{BTreeMap, BTreeSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{ConfigError, ScenarioConfig};
use super::event::{EventKind, EventQueue};
use super::mobility::{uniform_point, MobilityState};
use super::radio;
use super::traffic::{choose_flows, CbrFlow};
use crate::adversary::{blackhole_handle_frq, blackhole_handle_rreq, BlackHoleState};
use crate::aodv::{ForwardOutcome, NodeAodvState, RoutingTableEntry, RrepOutcome, RreqOutcome};
use crate::dri::{
    self, propagate_alarm, Blacklist, Candidate, CrossCheckSession, DriEntry, DriTable, SecureDecision, SessionStep,
};
use crate::metrics::{Counters, MetricsError, MetricsRecord};
use crate::net::{validate_message, Alarm, DataPacket, Frp, Frq, Message, NodeId, Position, Rrep, Rreq};
use crate::trace::{id_list, TraceLine};

const PLACEMENT_ATTEMPTS: usize = 1000;

// Independent random streams derived from the scenario seed.
const STREAM_PLACEMENT: u64 = 1;
const STREAM_FLOWS: u64 = 2;
const STREAM_ADVERSARY: u64 = 3;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("no connected placement found in {0} attempts")]
    Placement(usize),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

#[derive(Debug, Clone)]
struct SimNode {
    aodv: NodeAodvState,
    dri: DriTable,
    blacklist: Blacklist,
    malicious: bool,
    black_hole: BlackHoleState,
    sessions: BTreeMap<NodeId, CrossCheckSession>,
    next_alarm_id: u64,
    relayed_in: u64,
    first_relay_in: Option<f64>,
}

/// Per-node observations exposed after a run.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeReport {
    /// Data packets that arrived at this node for some other destination.
    pub relayed_in: u64,
    pub first_relay_in: Option<f64>,
    pub absorbed: u64,
    pub blacklist: BTreeSet<NodeId>,
    pub dri: Vec<(NodeId, DriEntry)>,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub metrics: MetricsRecord,
    pub trace: Vec<String>,
    /// Nodes classified as black holes, with the first classification time.
    pub flagged: BTreeMap<NodeId, f64>,
    pub nodes: Vec<NodeReport>,
    pub flows: Vec<(NodeId, NodeId)>,
}

pub struct Simulator {
    cfg: ScenarioConfig,
    now: f64,
    queue: EventQueue,
    nodes: Vec<SimNode>,
    mobility: MobilityState,
    positions: Vec<Position>,
    flows: Vec<CbrFlow>,
    counters: Vec<Counters>,
    rng_mobility: ChaCha8Rng,
    rng_adversary: ChaCha8Rng,
    trace: Option<Vec<String>>,
    flagged: BTreeMap<NodeId, f64>,
    finished: bool,
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

impl Simulator {
    pub fn new(cfg: ScenarioConfig, trace: bool) -> Result<Self, SimError> {
        cfg.validate()?;
        let n = cfg.num_nodes;
        let mut rng_mobility = stream(cfg.seed, STREAM_PLACEMENT);

        let positions = match &cfg.positions {
            Some(p) => p.clone(),
            None => {
                let mut attempt = 0;
                loop {
                    let p: Vec<Position> =
                        (0..n).map(|_| uniform_point(&mut rng_mobility, cfg.area_width, cfg.area_height)).collect();
                    if !cfg.require_connected || radio::is_connected(&p, cfg.radio_range) {
                        break p;
                    }
                    attempt += 1;
                    if attempt >= PLACEMENT_ATTEMPTS {
                        return Err(SimError::Placement(PLACEMENT_ATTEMPTS));
                    }
                }
            }
        };
        let mobility = MobilityState::new(
            &positions,
            cfg.speed,
            cfg.area_width,
            cfg.area_height,
            cfg.pause_seconds,
            cfg.mobility_tick_seconds,
            &mut rng_mobility,
        );

        let pairs = match &cfg.cbr.flows {
            Some(f) => f.clone(),
            None => {
                choose_flows(n, &cfg.attack.black_holes.members, cfg.cbr.num_flows, &mut stream(cfg.seed, STREAM_FLOWS))
            }
        };
        let flows: Vec<CbrFlow> = pairs
            .iter()
            .enumerate()
            .map(|(i, &(s, d))| CbrFlow::new(i, s, d, cfg.cbr.start_seconds, cfg.cbr.rate_pps, cfg.cbr.payload_bytes))
            .collect();

        let nodes = (0..n as u32)
            .map(NodeId)
            .map(|id| SimNode {
                aodv: NodeAodvState::new(id)
                    .with_buffer_capacity(cfg.buffer_capacity)
                    .with_gratuitous_rrep(cfg.gratuitous_rrep),
                dri: DriTable::new(id),
                blacklist: Blacklist::default(),
                malicious: cfg.is_malicious(id),
                black_hole: BlackHoleState::default(),
                sessions: BTreeMap::new(),
                next_alarm_id: 0,
                relayed_in: 0,
                first_relay_in: None,
            })
            .collect();

        let mut queue = EventQueue::new();
        queue.schedule(cfg.duration_seconds, EventKind::RunEnd);
        for round in 0..cfg.detection.warmup_flows {
            queue.schedule(round as f64, EventKind::Warmup { round });
        }
        if cfg.speed > 0.0 {
            for i in 0..n as u32 {
                queue.schedule(cfg.mobility_tick_seconds, EventKind::Mobility { node: NodeId(i) });
            }
        }
        for f in &flows {
            if let Some(t) = f.next_emit_before(cfg.duration_seconds) {
                queue.schedule(t, EventKind::CbrEmit { flow: f.id });
            }
        }

        Ok(Simulator {
            counters: vec![Counters::default(); flows.len()],
            rng_adversary: stream(cfg.seed, STREAM_ADVERSARY),
            trace: trace.then(Vec::new),
            flagged: BTreeMap::new(),
            finished: false,
            now: 0.0,
            positions: mobility.positions(),
            cfg,
            queue,
            nodes,
            mobility,
            flows,
            rng_mobility,
        })
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.cfg
    }

    pub fn positions(&self) -> &[Position] {
        &self.positions
    }

    pub fn routing_entry(&self, node: NodeId, dest: NodeId) -> Option<&RoutingTableEntry> {
        self.nodes[node.index()].aodv.valid_route(dest)
    }

    pub fn aodv(&self, node: NodeId) -> &NodeAodvState {
        &self.nodes[node.index()].aodv
    }

    pub fn dri(&self, node: NodeId) -> &DriTable {
        &self.nodes[node.index()].dri
    }

    pub fn blacklist(&self, node: NodeId) -> &Blacklist {
        &self.nodes[node.index()].blacklist
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    /// Executes one event; false once the run has ended.
    pub fn step(&mut self) -> bool {
        if self.finished {
            return false;
        }
        let Some(ev) = self.queue.pop() else {
            self.finished = true;
            return false;
        };
        debug_assert!(ev.at >= self.now, "clock went backwards");
        self.now = ev.at;
        match ev.kind {
            EventKind::RunEnd => {
                self.log(TraceLine::new(self.now, "end", NodeId(0)));
                self.finished = true;
            }
            EventKind::Deliver { to, from, msg } => self.on_deliver(to, from, msg),
            EventKind::DeferredSend { from, to, msg } => {
                self.unicast_control(from, to, msg);
            }
            EventKind::Mobility { node } => {
                let next = self.mobility.waypoint_step(node, self.now, &mut self.rng_mobility);
                self.positions[node.index()] = self.mobility.nodes[node.index()].position;
                if let Some(t) = next {
                    self.queue.schedule(t, EventKind::Mobility { node });
                }
            }
            EventKind::CbrEmit { flow } => self.on_cbr(flow),
            EventKind::WindowClose { node, dest, broadcast_id } => {
                if let Some(c) = self.nodes[node.index()].aodv.close_window(dest, broadcast_id) {
                    self.route_selected(node, c);
                }
            }
            EventKind::DiscoveryTimeout { node, dest, broadcast_id } => {
                let n = &mut self.nodes[node.index()];
                if n.aodv.discovery(dest).is_some_and(|d| d.broadcast_id == broadcast_id) {
                    n.aodv.abandon_discovery(dest);
                    n.sessions.remove(&dest);
                    self.log(TraceLine::new(self.now, "timeout", node).dst(dest));
                    self.retry_discovery(node, dest);
                }
            }
            EventKind::RetryDiscovery { node, dest } => self.retry_discovery(node, dest),
            EventKind::Warmup { round } => self.on_warmup(round),
        }
        true
    }

    pub fn run(mut self) -> Result<RunResult, SimError> {
        while self.step() {}
        self.finish()
    }

    fn finish(mut self) -> Result<RunResult, SimError> {
        for n in &self.nodes {
            for f in 0..self.flows.len() {
                let dst = self.flows[f].dst;
                if self.flows[f].src == n.aodv.self_id() {
                    self.counters[f].in_flight_at_end += n.aodv.pending_for(dst) as u64;
                }
            }
        }
        for ev in self.queue.iter() {
            if let EventKind::Deliver { msg: Message::Data(p), .. } = &ev.kind {
                self.counters[p.flow].in_flight_at_end += 1;
            }
        }
        let metrics = MetricsRecord::from_flows(self.counters, self.cfg.duration_seconds)?;
        let nodes = self
            .nodes
            .iter()
            .map(|n| NodeReport {
                relayed_in: n.relayed_in,
                first_relay_in: n.first_relay_in,
                absorbed: n.black_hole.absorbed,
                blacklist: n.blacklist.members().clone(),
                dri: n.dri.entries().collect(),
            })
            .collect();
        Ok(RunResult {
            metrics,
            trace: self.trace.unwrap_or_default(),
            flagged: self.flagged,
            nodes,
            flows: self.flows.iter().map(|f| (f.src, f.dst)).collect(),
        })
    }

    fn log(&mut self, line: TraceLine) {
        if let Some(t) = self.trace.as_mut() {
            t.push(line.to_string());
        }
    }

    fn neighbors(&self, node: NodeId) -> Vec<NodeId> {
        radio::neighbors(&self.positions, node, self.cfg.radio_range)
    }

    fn linked(&self, a: NodeId, b: NodeId) -> bool {
        a != b && radio::in_range(&self.positions[a.index()], &self.positions[b.index()], self.cfg.radio_range)
    }

    fn check(&self, msg: &Message) {
        debug_assert_eq!(validate_message(msg, self.cfg.num_nodes), Ok(()), "{msg:?}");
    }

    fn broadcast(&mut self, from: NodeId, msg: Message) {
        self.check(&msg);
        let at = self.now + self.cfg.latency;
        for to in self.neighbors(from) {
            self.queue.schedule(at, EventKind::Deliver { to, from, msg: msg.clone() });
        }
    }

    /// Sends over one radio hop; a neighbor out of range invalidates routes through it.
    fn unicast_control(&mut self, from: NodeId, to: NodeId, msg: Message) -> bool {
        self.check(&msg);
        if self.linked(from, to) {
            self.queue.schedule(self.now + self.cfg.latency, EventKind::Deliver { to, from, msg });
            return true;
        }
        let lost = self.nodes[from.index()].aodv.invalidate_routes_via(to);
        self.log(
            TraceLine::new(self.now, "linkfail", from).dst(to).detail("kind", msg.kind()).detail("invalidated", lost),
        );
        false
    }

    /// End-to-end control exchange over the current topology, avoiding `avoid`.
    fn send_end_to_end(&mut self, from: NodeId, to: NodeId, avoid: NodeId, msg: Message) -> bool {
        self.check(&msg);
        let hops = radio::path_hops_avoiding(&self.positions, self.cfg.radio_range, from, to, Some(avoid));
        match hops {
            Some(h) => {
                let at = self.now + h as f64 * self.cfg.latency;
                self.queue.schedule(at, EventKind::Deliver { to, from, msg });
                true
            }
            None => {
                self.log(TraceLine::new(self.now, "nopath", from).dst(to).detail("kind", msg.kind()));
                false
            }
        }
    }

    fn on_deliver(&mut self, to: NodeId, from: NodeId, msg: Message) {
        match msg {
            Message::Rreq(r) => self.on_rreq(to, from, r),
            Message::Rrep(r) => self.on_rrep(to, from, r),
            Message::Frq(f) => self.on_frq(to, f),
            Message::Frp(f) => self.on_frp(to, f),
            Message::Alarm(a) => self.on_alarm(to, from, a),
            Message::Data(p) => self.on_data(to, from, p),
        }
    }

    fn on_rreq(&mut self, to: NodeId, from: NodeId, rreq: Rreq) {
        let node = &mut self.nodes[to.index()];
        if node.malicious {
            if rreq.origin == to || !node.aodv.mark_seen(rreq.origin, rreq.broadcast_id) {
                return;
            }
            self.log(
                TraceLine::new(self.now, "rreq", to)
                    .from(from)
                    .dst(rreq.dest)
                    .detail("origin", rreq.origin)
                    .detail("bid", rreq.broadcast_id),
            );
            let node = &mut self.nodes[to.index()];
            let reply = if rreq.dest == to {
                node.aodv.offer_route(RoutingTableEntry::new(rreq.origin, from, rreq.hop_count + 1, rreq.origin_seq));
                node.aodv.make_dest_rrep(&rreq).expect("black hole is the destination")
            } else {
                let nbrs = self.neighbors(to);
                let forged =
                    blackhole_handle_rreq(&self.cfg.attack.black_holes, to, &rreq, &nbrs, &mut self.rng_adversary);
                self.log(
                    TraceLine::new(self.now, "forge", to)
                        .dst(rreq.dest)
                        .detail("seq", forged.dest_seq)
                        .detail("nhn", forged.responder_next_hop.map_or("none".into(), |n| n.to_string())),
                );
                forged
            };
            let delay = self.cfg.attack.black_holes.respond_delay_seconds;
            if delay > 0.0 && reply.generator != reply.dest {
                self.queue.schedule(
                    self.now + delay,
                    EventKind::DeferredSend { from: to, to: from, msg: Message::Rrep(reply) },
                );
            } else {
                self.unicast_control(to, from, Message::Rrep(reply));
            }
            return;
        }

        if node.blacklist.contains(from) || node.aodv.has_seen(rreq.origin, rreq.broadcast_id) {
            return;
        }
        self.log(
            TraceLine::new(self.now, "rreq", to)
                .from(from)
                .dst(rreq.dest)
                .detail("origin", rreq.origin)
                .detail("bid", rreq.broadcast_id)
                .detail("hops", rreq.hop_count),
        );
        let node = &mut self.nodes[to.index()];
        match node.aodv.handle_rreq(&rreq, from, &node.dri) {
            RreqOutcome::Duplicate => {}
            RreqOutcome::Rebroadcast(r) => self.broadcast(to, Message::Rreq(r)),
            RreqOutcome::Reply { to: back, rrep, gratuitous } => {
                self.unicast_control(to, back, Message::Rrep(rrep));
                if let Some((next, g)) = gratuitous {
                    self.unicast_control(to, next, Message::Rrep(g));
                }
            }
        }
    }

    fn on_rrep(&mut self, to: NodeId, from: NodeId, rrep: Rrep) {
        let node = &self.nodes[to.index()];
        if node.malicious && rrep.origin != to {
            return;
        }
        if node.blacklist.contains(rrep.generator) || node.blacklist.contains(from) {
            self.log(
                TraceLine::new(self.now, "rrep-ignored", to)
                    .from(from)
                    .dst(rrep.dest)
                    .detail("generator", rrep.generator),
            );
            return;
        }
        self.log(
            TraceLine::new(self.now, "rrep", to)
                .from(from)
                .dst(rrep.dest)
                .detail("generator", rrep.generator)
                .detail("seq", rrep.dest_seq)
                .detail("hops", rrep.hop_count),
        );
        let window = self.cfg.rrep_window_seconds;
        let node = &mut self.nodes[to.index()];
        match node.aodv.handle_rrep(&rrep, from, window > 0.0) {
            RrepOutcome::Forward { to: next, rrep } => {
                self.unicast_control(to, next, Message::Rrep(rrep));
            }
            RrepOutcome::Collected { first: true } => {
                let bid = node.aodv.discovery(rrep.dest).map(|d| d.broadcast_id).unwrap_or_default();
                self.queue.schedule(
                    self.now + window,
                    EventKind::WindowClose { node: to, dest: rrep.dest, broadcast_id: bid },
                );
            }
            RrepOutcome::Selected(c) => self.route_selected(to, c),
            RrepOutcome::Installed => {
                let flushed = node.aodv.take_pending(rrep.dest);
                self.send_all(to, flushed);
            }
            RrepOutcome::Collected { first: false } | RrepOutcome::Ignored => {}
        }
    }

    fn route_selected(&mut self, node: NodeId, cand: Candidate) {
        let dest = cand.rrep.dest;
        let n = &mut self.nodes[node.index()];
        if !self.cfg.detection.enabled || n.malicious {
            self.log(
                TraceLine::new(self.now, "route", node)
                    .dst(dest)
                    .detail("via", cand.from)
                    .detail("generator", cand.rrep.generator),
            );
            let flushed = self.nodes[node.index()].aodv.accept_candidate(&cand);
            self.send_all(node, flushed);
            return;
        }
        let generator = cand.rrep.generator;
        let via = cand.from;
        match dri::secure_route_decision(&n.dri, &n.blacklist, cand.clone(), self.cfg.max_rounds()) {
            SecureDecision::Accept => {
                self.log(
                    TraceLine::new(self.now, "route", node).dst(dest).detail("via", via).detail("generator", generator),
                );
                let flushed = self.nodes[node.index()].aodv.accept_candidate(&cand);
                self.send_all(node, flushed);
            }
            SecureDecision::Ignore | SecureDecision::Unresolvable => {
                self.log(TraceLine::new(self.now, "unresolved", node).dst(dest).detail("suspect", generator));
                self.restart_discovery(node, dest);
            }
            SecureDecision::CrossCheck(session) => self.send_frq(node, *session),
        }
    }

    fn send_frq(&mut self, node: NodeId, session: CrossCheckSession) {
        let frq = session.frq();
        let dest = session.dest;
        self.log(
            TraceLine::new(self.now, "frq-send", node)
                .dst(frq.target)
                .detail("suspect", frq.suspect)
                .detail("round", session.round),
        );
        self.nodes[node.index()].sessions.insert(dest, session);
        if !self.send_end_to_end(node, frq.target, frq.suspect, Message::Frq(frq)) {
            self.restart_discovery(node, dest);
        }
    }

    fn restart_discovery(&mut self, node: NodeId, dest: NodeId) {
        let n = &mut self.nodes[node.index()];
        n.aodv.abandon_discovery(dest);
        n.sessions.remove(&dest);
        let at = self.now + self.cfg.detection.restart_backoff_seconds;
        self.queue.schedule(at, EventKind::RetryDiscovery { node, dest });
    }

    fn retry_discovery(&mut self, node: NodeId, dest: NodeId) {
        let n = &mut self.nodes[node.index()];
        if n.aodv.discovery(dest).is_some() || n.aodv.pending_for(dest) == 0 {
            return;
        }
        if n.aodv.valid_route(dest).is_some() {
            let flushed = n.aodv.take_pending(dest);
            self.send_all(node, flushed);
            return;
        }
        let rreq = n.aodv.originate_discovery(dest).expect("pending packets never target their origin");
        self.start_flood(node, rreq);
    }

    fn start_flood(&mut self, node: NodeId, rreq: Rreq) {
        self.log(TraceLine::new(self.now, "discover", node).dst(rreq.dest).detail("bid", rreq.broadcast_id));
        self.queue.schedule(
            self.now + self.cfg.discovery_retry_seconds,
            EventKind::DiscoveryTimeout { node, dest: rreq.dest, broadcast_id: rreq.broadcast_id },
        );
        self.broadcast(node, Message::Rreq(rreq));
    }

    fn on_frq(&mut self, to: NodeId, frq: Frq) {
        self.log(TraceLine::new(self.now, "frq", to).from(frq.asker).detail("suspect", frq.suspect));
        let node = &self.nodes[to.index()];
        let frp = if node.malicious {
            let nbrs = self.neighbors(to);
            blackhole_handle_frq(&self.cfg.attack.black_holes, &node.dri, &frq, &nbrs, &mut self.rng_adversary)
        } else {
            dri::handle_frq(&node.dri, &node.aodv, &frq)
        };
        self.send_end_to_end(to, frq.asker, frq.suspect, Message::Frp(frp));
    }

    fn on_frp(&mut self, to: NodeId, frp: Frp) {
        self.log(
            TraceLine::new(self.now, "frp", to)
                .from(frp.responder)
                .dst(frp.dest)
                .detail("dri", frp.dri_for_suspect)
                .detail("nhn", frp.responder_next_hop.map_or("none".into(), |n| n.to_string())),
        );
        let dest = frp.dest;
        let node = &mut self.nodes[to.index()];
        let Some(session) = node.sessions.get_mut(&dest) else {
            return;
        };
        let step = session.on_frp(&frp, &mut node.dri);
        match step {
            SessionStep::Ignored => {}
            SessionStep::Accept => {
                let session = node.sessions.remove(&dest).expect("session present");
                self.log(
                    TraceLine::new(self.now, "route", to)
                        .dst(dest)
                        .detail("via", session.candidate.from)
                        .detail("generator", session.candidate.rrep.generator),
                );
                let flushed = self.nodes[to.index()].aodv.accept_candidate(&session.candidate);
                self.send_all(to, flushed);
            }
            SessionStep::BlackHoles { members, bypass_via } => {
                node.sessions.remove(&dest);
                self.raise_alarm(to, members);
                let bypass =
                    bypass_via.filter(|&t| self.linked(to, t) && !self.nodes[to.index()].blacklist.contains(t));
                match bypass {
                    Some(t) => {
                        self.log(
                            TraceLine::new(self.now, "route", to).dst(dest).detail("via", t).detail("bypass", "true"),
                        );
                        // hop count unknown beyond the target's own next hop
                        let flushed = self.nodes[to.index()].aodv.install_bypass(dest, t, 2);
                        self.send_all(to, flushed);
                    }
                    None => self.restart_discovery(to, dest),
                }
            }
            SessionStep::Continue(frq) => {
                let session = node.sessions.remove(&dest).expect("session present");
                let _ = frq;
                self.send_frq(to, session);
            }
            SessionStep::Unresolvable => {
                self.log(TraceLine::new(self.now, "unresolved", to).dst(dest));
                self.restart_discovery(to, dest);
            }
        }
    }

    fn raise_alarm(&mut self, reporter: NodeId, members: BTreeSet<NodeId>) {
        for &m in &members {
            self.flagged.entry(m).or_insert(self.now);
        }
        let n = &mut self.nodes[reporter.index()];
        let alarm = Alarm { reporter, black_holes: members, alarm_id: n.next_alarm_id };
        n.next_alarm_id += 1;
        self.apply_alarm(reporter, alarm);
    }

    fn on_alarm(&mut self, to: NodeId, _from: NodeId, alarm: Alarm) {
        self.apply_alarm(to, alarm);
    }

    fn apply_alarm(&mut self, at: NodeId, alarm: Alarm) {
        let n = &mut self.nodes[at.index()];
        if !propagate_alarm(&alarm, &mut n.blacklist) {
            return;
        }
        for &m in &alarm.black_holes {
            n.aodv.invalidate_routes_via(m);
        }
        self.log(TraceLine::new(self.now, "alarm", at).detail("blackholes", id_list(&alarm.black_holes)));
        self.broadcast(at, Message::Alarm(alarm));
    }

    fn on_warmup(&mut self, round: u32) {
        for a in 0..self.nodes.len() as u32 {
            let a = NodeId(a);
            if self.nodes[a.index()].malicious {
                continue;
            }
            let peers: Vec<NodeId> =
                self.neighbors(a).into_iter().filter(|b| !self.nodes[b.index()].malicious).collect();
            for &b in &peers {
                self.nodes[a.index()].dri.record_data_event(None, Some(b));
                self.nodes[b.index()].dri.record_data_event(Some(a), None);
            }
            self.log(TraceLine::new(self.now, "warmup", a).detail("round", round).detail("peers", peers.len()));
        }
    }

    fn on_cbr(&mut self, flow: usize) {
        let pkt = self.flows[flow].cbr_emit(self.now);
        self.counters[flow].originated += 1;
        let src = pkt.origin;
        self.log(TraceLine::new(self.now, "cbr", src).dst(pkt.dest).pkt(pkt.pkt_id).detail("flow", flow));
        self.forward(src, None, pkt);
        if let Some(t) = self.flows[flow].next_emit_before(self.cfg.duration_seconds) {
            self.queue.schedule(t, EventKind::CbrEmit { flow });
        }
    }

    fn send_all(&mut self, node: NodeId, pkts: Vec<DataPacket>) {
        for p in pkts {
            self.forward(node, None, p);
        }
    }

    fn on_data(&mut self, to: NodeId, from: NodeId, pkt: DataPacket) {
        let flow = pkt.flow;
        if pkt.dest == to {
            let c = &mut self.counters[flow];
            c.delivered += 1;
            c.bytes_delivered += pkt.payload_bytes as u64;
            self.confirm_hop(from, to);
            if !self.nodes[to.index()].malicious {
                self.nodes[to.index()].dri.record_data_event(Some(from), None);
            }
            self.log(
                TraceLine::new(self.now, "deliver", to).from(from).dst(pkt.dest).pkt(pkt.pkt_id).detail("flow", flow),
            );
            return;
        }
        let node = &mut self.nodes[to.index()];
        node.relayed_in += 1;
        node.first_relay_in.get_or_insert(self.now);
        if node.malicious {
            node.black_hole.handle_data(pkt.clone());
            self.counters[flow].absorbed += 1;
            self.log(
                TraceLine::new(self.now, "absorb", to).from(from).dst(pkt.dest).pkt(pkt.pkt_id).detail("flow", flow),
            );
            return;
        }
        self.forward(to, Some(from), pkt);
    }

    /// Idealized hop acknowledgement: `prev` learns that `next` took the packet onward.
    fn confirm_hop(&mut self, prev: NodeId, next: NodeId) {
        if !self.nodes[prev.index()].malicious {
            self.nodes[prev.index()].dri.record_data_event(None, Some(next));
        }
    }

    fn forward(&mut self, node: NodeId, prev: Option<NodeId>, mut pkt: DataPacket) {
        loop {
            let n = &mut self.nodes[node.index()];
            let outcome = n.aodv.forward_data(pkt).expect("data never addressed to its forwarder here");
            match outcome {
                ForwardOutcome::Unicast { to, pkt: p } => {
                    if n.blacklist.contains(to) {
                        n.aodv.invalidate_routes_via(to);
                        pkt = p;
                        continue;
                    }
                    if !self.linked(node, to) {
                        let lost = self.nodes[node.index()].aodv.invalidate_routes_via(to);
                        self.log(
                            TraceLine::new(self.now, "linkfail", node)
                                .dst(to)
                                .pkt(p.pkt_id)
                                .detail("invalidated", lost),
                        );
                        pkt = p;
                        continue;
                    }
                    if let Some(prev) = prev {
                        self.nodes[node.index()].dri.record_data_event(Some(prev), None);
                        self.confirm_hop(prev, node);
                    }
                    self.log(
                        TraceLine::new(self.now, "forward", node)
                            .from(prev.unwrap_or(node))
                            .dst(p.dest)
                            .pkt(p.pkt_id)
                            .detail("next", to),
                    );
                    let msg = Message::Data(p);
                    self.check(&msg);
                    self.queue.schedule(self.now + self.cfg.latency, EventKind::Deliver { to, from: node, msg });
                    return;
                }
                ForwardOutcome::Buffered { rreq, evicted } => {
                    if let Some(e) = evicted {
                        self.counters[e.flow].buffer_drops += 1;
                        self.log(TraceLine::new(self.now, "buffer-drop", node).dst(e.dest).pkt(e.pkt_id));
                    }
                    if let Some(r) = rreq {
                        self.start_flood(node, r);
                    }
                    return;
                }
                ForwardOutcome::Dropped(p) => {
                    self.counters[p.flow].no_route_drops += 1;
                    self.log(
                        TraceLine::new(self.now, "drop", node).dst(p.dest).pkt(p.pkt_id).detail("cause", "no-route"),
                    );
                    // The previous hop gets no confirmation and stops using this node for the destination.
                    if let Some(prev) = prev {
                        self.nodes[prev.index()].aodv.invalidate_route(p.dest, node);
                    }
                    return;
                }
            }
        }
    }
}

pub fn run_scenario(cfg: &ScenarioConfig, trace: bool) -> Result<RunResult, SimError> {
    Simulator::new(cfg.clone(), trace)?.run()
}
