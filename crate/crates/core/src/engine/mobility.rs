//! Random waypoint mobility on a fixed tick.

use rand::Rng;

use crate::net::{NodeId, Position};

#[derive(Debug, Clone, PartialEq)]
pub struct NodeMobility {
    pub position: Position,
    pub waypoint: Position,
    pub speed: f64,
    pub pausing_until: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct MobilityState {
    pub nodes: Vec<NodeMobility>,
    pub width: f64,
    pub height: f64,
    pub pause_seconds: f64,
    pub tick: f64,
}

pub fn uniform_point<R: Rng>(rng: &mut R, width: f64, height: f64) -> Position {
    Position::new(rng.gen_range(0.0..=width), rng.gen_range(0.0..=height))
}

impl MobilityState {
    /// Nodes start moving at time zero toward a freshly drawn waypoint.
    pub fn new<R: Rng>(
        positions: &[Position],
        speed: f64,
        width: f64,
        height: f64,
        pause_seconds: f64,
        tick: f64,
        rng: &mut R,
    ) -> Self {
        let nodes = positions
            .iter()
            .map(|&position| NodeMobility {
                position,
                waypoint: if speed > 0.0 { uniform_point(rng, width, height) } else { position },
                speed,
                pausing_until: None,
            })
            .collect();
        MobilityState { nodes, width, height, pause_seconds, tick }
    }

    pub fn positions(&self) -> Vec<Position> {
        self.nodes.iter().map(|n| n.position).collect()
    }

    /// Advances `node` by one tick ending at `now`; returns when to update it
    /// next, or `None` for a static node.
    pub fn waypoint_step<R: Rng>(&mut self, node: NodeId, now: f64, rng: &mut R) -> Option<f64> {
        let (w, h, pause, tick) = (self.width, self.height, self.pause_seconds, self.tick);
        let m = &mut self.nodes[node.index()];
        if m.speed <= 0.0 {
            return None;
        }
        if let Some(until) = m.pausing_until {
            if now + 1e-9 >= until {
                m.pausing_until = None;
                m.waypoint = uniform_point(rng, w, h);
            }
            return Some(now + tick);
        }
        let step = m.speed * tick;
        let remaining = m.position.distance(&m.waypoint);
        if remaining <= step {
            m.position = m.waypoint;
            m.pausing_until = Some(now + pause);
        } else {
            let f = step / remaining;
            m.position.x += (m.waypoint.x - m.position.x) * f;
            m.position.y += (m.waypoint.y - m.position.y) * f;
        }
        m.position.x = m.position.x.clamp(0.0, w);
        m.position.y = m.position.y.clamp(0.0, h);
        Some(now + tick)
    }
}
