//! Identity, geometry and message types shared by every protocol module.
//!
//! Everything here is a plain value. Construction never fails; validation
//! against a scenario is a separate pass ([`validate_message`]).

use std::collections::BTreeSet;
use std::fmt;

use crate::dri::DriEntry;

/// Index of a node in the scenario's node list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u32> for NodeId {
    fn from(v: u32) -> Self {
        NodeId(v)
    }
}

/// Destination sequence number. Unbounded in the model, no wraparound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct SeqNum(pub u64);

impl fmt::Display for SeqNum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn new(x: f64, y: f64) -> Self {
        Position { x, y }
    }

    pub fn distance(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rreq {
    pub origin: NodeId,
    pub origin_seq: SeqNum,
    pub broadcast_id: u64,
    pub dest: NodeId,
    /// Last destination sequence number known to the origin, 0 if none.
    pub dest_seq_known: SeqNum,
    pub hop_count: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rrep {
    /// Node that originated the discovery this reply answers.
    pub origin: NodeId,
    pub dest: NodeId,
    pub dest_seq: SeqNum,
    pub hop_count: u32,
    /// Node that created the reply (destination or intermediate).
    pub generator: NodeId,
    /// Next hop the generator claims toward `dest`; none when the generator is `dest`.
    pub responder_next_hop: Option<NodeId>,
    /// Generator's self-reported DRI entry for `responder_next_hop`.
    pub responder_dri_for_nhn: Option<DriEntry>,
    /// Nodes that have carried this reply so far, generator first.
    pub path: Vec<NodeId>,
}

/// Further request: asks `target` about the node `suspect` that named it as next hop.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frq {
    pub asker: NodeId,
    pub suspect: NodeId,
    pub target: NodeId,
    pub dest: NodeId,
}

/// Further reply from the queried next hop.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frp {
    pub responder: NodeId,
    pub dest: NodeId,
    pub dri_for_suspect: DriEntry,
    pub responder_next_hop: Option<NodeId>,
    pub dri_for_responder_next_hop: Option<DriEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alarm {
    pub reporter: NodeId,
    pub black_holes: BTreeSet<NodeId>,
    pub alarm_id: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataPacket {
    pub flow: usize,
    pub origin: NodeId,
    pub dest: NodeId,
    /// Monotone within a flow.
    pub pkt_id: u64,
    pub payload_bytes: u32,
    pub created_at: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Message {
    Rreq(Rreq),
    Rrep(Rrep),
    Frq(Frq),
    Frp(Frp),
    Alarm(Alarm),
    Data(DataPacket),
}

impl Message {
    pub fn kind(&self) -> &'static str {
        match self {
            Message::Rreq(_) => "rreq",
            Message::Rrep(_) => "rrep",
            Message::Frq(_) => "frq",
            Message::Frp(_) => "frp",
            Message::Alarm(_) => "alarm",
            Message::Data(_) => "data",
        }
    }

    fn node_ids(&self) -> Vec<NodeId> {
        match self {
            Message::Rreq(m) => vec![m.origin, m.dest],
            Message::Rrep(m) => {
                let mut v = vec![m.origin, m.dest, m.generator];
                v.extend(m.responder_next_hop);
                v.extend(m.path.iter().copied());
                v
            }
            Message::Frq(m) => vec![m.asker, m.suspect, m.target, m.dest],
            Message::Frp(m) => {
                let mut v = vec![m.responder, m.dest];
                v.extend(m.responder_next_hop);
                v
            }
            Message::Alarm(m) => {
                let mut v = vec![m.reporter];
                v.extend(m.black_holes.iter().copied());
                v
            }
            Message::Data(m) => vec![m.origin, m.dest],
        }
    }
}

/// First invariant a message breaks.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Violation {
    #[error("node id {0} out of range")]
    NodeOutOfRange(NodeId),
    #[error("origin equals dest")]
    OriginEqualsDest,
    #[error("destination reply discloses a next hop")]
    DestReplyWithNextHop,
    #[error("suspect equals target")]
    SuspectEqualsTarget,
    #[error("asker equals suspect")]
    AskerEqualsSuspect,
    #[error("next hop and its DRI entry disagree on presence")]
    FrpNextHopMismatch,
    #[error("empty black hole set")]
    EmptyBlackHoleSet,
    #[error("zero payload")]
    ZeroPayload,
}

/// Checks a message against the scenario's node count and its own invariants.
pub fn validate_message(msg: &Message, num_nodes: usize) -> Result<(), Violation> {
    for id in msg.node_ids() {
        if id.index() >= num_nodes {
            return Err(Violation::NodeOutOfRange(id));
        }
    }
    match msg {
        Message::Rreq(m) if m.origin == m.dest => Err(Violation::OriginEqualsDest),
        Message::Rrep(m) if m.generator == m.dest && m.responder_next_hop.is_some() => {
            Err(Violation::DestReplyWithNextHop)
        }
        Message::Frq(m) if m.suspect == m.target => Err(Violation::SuspectEqualsTarget),
        Message::Frq(m) if m.asker == m.suspect => Err(Violation::AskerEqualsSuspect),
        Message::Frp(m) if m.responder_next_hop.is_some() != m.dri_for_responder_next_hop.is_some() => {
            Err(Violation::FrpNextHopMismatch)
        }
        Message::Alarm(m) if m.black_holes.is_empty() => Err(Violation::EmptyBlackHoleSet),
        Message::Data(m) if m.payload_bytes == 0 => Err(Violation::ZeroPayload),
        Message::Data(m) if m.origin == m.dest => Err(Violation::OriginEqualsDest),
        _ => Ok(()),
    }
}
