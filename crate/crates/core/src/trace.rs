//! One-line-per-event trace format:
//!
//! ```text
//! t=<seconds, 6 decimals> ev=<kind> node=<id> [from=<id>] [dst=<id>] [pkt=<id>] [detail=<k:v,...>]
//! ```

use std::fmt;
use std::io::{self, Write};

use crate::net::NodeId;

#[derive(Debug, Clone, PartialEq)]
pub struct TraceLine {
    pub t: f64,
    pub ev: &'static str,
    pub node: NodeId,
    pub from: Option<NodeId>,
    pub dst: Option<NodeId>,
    pub pkt: Option<u64>,
    pub detail: Vec<(&'static str, String)>,
}

impl TraceLine {
    pub fn new(t: f64, ev: &'static str, node: NodeId) -> Self {
        TraceLine { t, ev, node, from: None, dst: None, pkt: None, detail: Vec::new() }
    }

    pub fn from(mut self, from: NodeId) -> Self {
        self.from = Some(from);
        self
    }

    pub fn dst(mut self, dst: NodeId) -> Self {
        self.dst = Some(dst);
        self
    }

    pub fn pkt(mut self, pkt: u64) -> Self {
        self.pkt = Some(pkt);
        self
    }

    pub fn detail(mut self, key: &'static str, value: impl fmt::Display) -> Self {
        self.detail.push((key, value.to_string()));
        self
    }
}

impl fmt::Display for TraceLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t={:.6} ev={} node={}", self.t, self.ev, self.node)?;
        if let Some(v) = self.from {
            write!(f, " from={v}")?;
        }
        if let Some(v) = self.dst {
            write!(f, " dst={v}")?;
        }
        if let Some(v) = self.pkt {
            write!(f, " pkt={v}")?;
        }
        if !self.detail.is_empty() {
            f.write_str(" detail=")?;
            for (i, (k, v)) in self.detail.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{k}:{v}")?;
            }
        }
        Ok(())
    }
}

/// Joins node ids with `;` for use inside a detail value.
pub fn id_list<'a>(ids: impl IntoIterator<Item = &'a NodeId>) -> String {
    ids.into_iter().map(ToString::to_string).collect::<Vec<_>>().join(";")
}

pub fn emit_trace<W: Write>(lines: &[String], mut out: W) -> io::Result<()> {
    for line in lines {
        writeln!(out, "{line}")?;
    }
    out.flush()
}
