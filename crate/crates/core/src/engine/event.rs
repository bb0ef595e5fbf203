//! Time-ordered event queue. Ties on time break by insertion order.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::net::{Message, NodeId};

#[derive(Debug, Clone, PartialEq)]
pub enum EventKind {
    /// `msg` arrives at `to`, sent by `from`.
    Deliver {
        to: NodeId,
        from: NodeId,
        msg: Message,
    },
    /// A reply held back by the sender, transmitted when the event fires.
    DeferredSend {
        from: NodeId,
        to: NodeId,
        msg: Message,
    },
    Mobility {
        node: NodeId,
    },
    CbrEmit {
        flow: usize,
    },
    WindowClose {
        node: NodeId,
        dest: NodeId,
        broadcast_id: u64,
    },
    DiscoveryTimeout {
        node: NodeId,
        dest: NodeId,
        broadcast_id: u64,
    },
    RetryDiscovery {
        node: NodeId,
        dest: NodeId,
    },
    Warmup {
        round: u32,
    },
    RunEnd,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub at: f64,
    pub tie_break: u64,
    pub kind: EventKind,
}

impl Eq for Event {}

impl Ord for Event {
    // Reversed so the max-heap pops the earliest event first.
    fn cmp(&self, other: &Self) -> Ordering {
        other.at.total_cmp(&self.at).then(other.tie_break.cmp(&self.tie_break))
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Default)]
pub struct EventQueue {
    heap: BinaryHeap<Event>,
    next_tie_break: u64,
}

impl EventQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn schedule(&mut self, at: f64, kind: EventKind) {
        let tie_break = self.next_tie_break;
        self.next_tie_break += 1;
        self.heap.push(Event { at, tie_break, kind });
    }

    pub fn pop(&mut self) -> Option<Event> {
        self.heap.pop()
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Event> {
        self.heap.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn earliest_first_then_insertion_order() {
        let mut q = EventQueue::new();
        q.schedule(2.0, EventKind::CbrEmit { flow: 0 });
        q.schedule(1.0, EventKind::CbrEmit { flow: 1 });
        q.schedule(1.0, EventKind::CbrEmit { flow: 2 });
        q.schedule(0.5, EventKind::RunEnd);
        let order: Vec<_> = std::iter::from_fn(|| q.pop()).map(|e| (e.at, e.tie_break)).collect();
        assert_eq!(order, vec![(0.5, 3), (1.0, 1), (1.0, 2), (2.0, 0)]);
    }
}
