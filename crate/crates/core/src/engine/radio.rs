//! Unit-disk radio: two nodes hear each other iff their distance is at most the range.

use std::collections::VecDeque;

use crate::net::{NodeId, Position};

pub fn in_range(a: &Position, b: &Position, range: f64) -> bool {
    a.distance(b) <= range
}

/// Every other node within `range` of `node`, ascending by id.
pub fn neighbors(positions: &[Position], node: NodeId, range: f64) -> Vec<NodeId> {
    let me = &positions[node.index()];
    positions
        .iter()
        .enumerate()
        .filter(|&(i, p)| i != node.index() && in_range(me, p, range))
        .map(|(i, _)| NodeId(i as u32))
        .collect()
}

/// Hop count of a shortest path from `from` to `to` that avoids `excluded`.
pub fn path_hops_avoiding(
    positions: &[Position],
    range: f64,
    from: NodeId,
    to: NodeId,
    excluded: Option<NodeId>,
) -> Option<usize> {
    if from == to {
        return Some(0);
    }
    let mut dist = vec![usize::MAX; positions.len()];
    dist[from.index()] = 0;
    let mut queue = VecDeque::from([from]);
    while let Some(u) = queue.pop_front() {
        for v in neighbors(positions, u, range) {
            if Some(v) == excluded || dist[v.index()] != usize::MAX {
                continue;
            }
            dist[v.index()] = dist[u.index()] + 1;
            if v == to {
                return Some(dist[v.index()]);
            }
            queue.push_back(v);
        }
    }
    None
}

pub fn is_connected(positions: &[Position], range: f64) -> bool {
    if positions.len() <= 1 {
        return true;
    }
    (1..positions.len()).all(|i| path_hops_avoiding(positions, range, NodeId(0), NodeId(i as u32), None).is_some())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64) -> Position {
        Position::new(x, y)
    }

    #[test]
    fn range_decisions() {
        assert!(in_range(&p(0.0, 0.0), &p(0.0, 200.0), 250.0));
        assert!(!in_range(&p(0.0, 0.0), &p(300.0, 0.0), 250.0));
        assert!(in_range(&p(0.0, 0.0), &p(150.0, 200.0), 250.0));
    }

    #[test]
    fn neighbor_sets_and_paths() {
        let line = [p(0.0, 0.0), p(200.0, 0.0), p(400.0, 0.0), p(0.0, 100.0)];
        assert_eq!(neighbors(&line, NodeId(0), 250.0), vec![NodeId(1), NodeId(3)]);
        assert_eq!(path_hops_avoiding(&line, 250.0, NodeId(0), NodeId(2), None), Some(2));
        assert_eq!(path_hops_avoiding(&line, 250.0, NodeId(0), NodeId(2), Some(NodeId(1))), None);
        assert_eq!(path_hops_avoiding(&line, 250.0, NodeId(2), NodeId(2), None), Some(0));
        assert!(is_connected(&line, 250.0));
        assert!(!is_connected(&[p(0.0, 0.0), p(300.0, 0.0)], 250.0));
    }
}
