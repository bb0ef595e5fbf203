//! Scenario description and the flat `key = value` scenario file format.
//!
//! One setting per line, `#` starts a comment, blank lines are skipped.
//! Keys are dotted (`attack.members = 23,24`). Every key is optional and
//! falls back to the default listed in [`ScenarioConfig::default`]. Lists
//! are comma separated; flows are `src>dst` pairs; positions are `x:y`
//! pairs separated by commas. See the README for the full key table.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use crate::adversary::BlackHoleConfig;
use crate::metrics::Mode;
use crate::net::{NodeId, Position};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read scenario file {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: expected `key = value`, found `{text}`")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key `{key}`")]
    DuplicateKey { line: usize, key: String },
    #[error("line {line}: bad value for `{key}`: {message}")]
    BadValue { line: usize, key: String, message: String },
    #[error("{}invalid `{key}`: {message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Invalid { key: &'static str, line: Option<usize>, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CbrConfig {
    /// Explicit flows; when absent `num_flows` random honest pairs are drawn.
    pub flows: Option<Vec<(NodeId, NodeId)>>,
    pub num_flows: usize,
    pub rate_pps: f64,
    pub payload_bytes: u32,
    pub start_seconds: f64,
}

impl Default for CbrConfig {
    fn default() -> Self {
        CbrConfig { flows: None, num_flows: 10, rate_pps: 4.0, payload_bytes: 512, start_seconds: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AttackConfig {
    pub enabled: bool,
    pub black_holes: BlackHoleConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionConfig {
    pub enabled: bool,
    /// Cross-check round limit; defaults to the node count.
    pub max_rounds: Option<u32>,
    /// Rounds of one-hop neighbor traffic that seed DRI tables.
    pub warmup_flows: u32,
    pub restart_backoff_seconds: f64,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        DetectionConfig { enabled: false, max_rounds: None, warmup_flows: 0, restart_backoff_seconds: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub num_nodes: usize,
    pub area_width: f64,
    pub area_height: f64,
    pub radio_range: f64,
    pub speed: f64,
    pub pause_seconds: f64,
    pub mobility_tick_seconds: f64,
    pub duration_seconds: f64,
    pub seed: u64,
    pub latency: f64,
    pub rrep_window_seconds: f64,
    pub discovery_retry_seconds: f64,
    /// Redraw the initial placement until the radio graph is connected.
    pub require_connected: bool,
    pub positions: Option<Vec<Position>>,
    pub cbr: CbrConfig,
    pub attack: AttackConfig,
    pub detection: DetectionConfig,
    pub gratuitous_rrep: bool,
    pub buffer_capacity: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            num_nodes: 30,
            area_width: 500.0,
            area_height: 500.0,
            radio_range: 250.0,
            speed: 10.0,
            pause_seconds: 30.0,
            mobility_tick_seconds: 0.1,
            duration_seconds: 100.0,
            seed: 1,
            latency: 0.002,
            rrep_window_seconds: 0.0,
            discovery_retry_seconds: 1.0,
            require_connected: true,
            positions: None,
            cbr: CbrConfig::default(),
            attack: AttackConfig::default(),
            detection: DetectionConfig::default(),
            gratuitous_rrep: false,
            buffer_capacity: crate::aodv::DEFAULT_BUFFER_CAPACITY,
        }
    }
}

fn invalid(key: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key, line: None, message: message.into() }
}

impl ScenarioConfig {
    pub fn max_rounds(&self) -> u32 {
        self.detection.max_rounds.unwrap_or(self.num_nodes as u32)
    }

    pub fn is_malicious(&self, node: NodeId) -> bool {
        self.attack.enabled && self.attack.black_holes.is_member(node)
    }

    /// Same scenario with the attack and detection switches set for `mode`.
    pub fn with_mode(&self, mode: Mode) -> ScenarioConfig {
        let mut cfg = self.clone();
        cfg.attack.enabled = mode != Mode::Clean;
        cfg.detection.enabled = mode == Mode::AttackDetection;
        cfg
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let n = self.num_nodes;
        if n == 0 {
            return Err(invalid("num_nodes", "must be at least 1"));
        }
        let positive = [
            ("area.width", self.area_width),
            ("area.height", self.area_height),
            ("radio_range", self.radio_range),
            ("mobility.tick_seconds", self.mobility_tick_seconds),
            ("duration_seconds", self.duration_seconds),
            ("cbr.rate_pps", self.cbr.rate_pps),
            ("discovery_retry_seconds", self.discovery_retry_seconds),
        ];
        for (key, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(key, format!("must be positive, got {v}")));
            }
        }
        let non_negative = [
            ("speed", self.speed),
            ("pause_seconds", self.pause_seconds),
            ("latency", self.latency),
            ("rrep_window_seconds", self.rrep_window_seconds),
            ("cbr.start_seconds", self.cbr.start_seconds),
            ("attack.respond_delay_seconds", self.attack.black_holes.respond_delay_seconds),
            ("detection.restart_backoff_seconds", self.detection.restart_backoff_seconds),
        ];
        for (key, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(key, format!("must be non-negative, got {v}")));
            }
        }
        if self.cbr.payload_bytes == 0 {
            return Err(invalid("cbr.payload_bytes", "must be positive"));
        }
        if self.buffer_capacity == 0 {
            return Err(invalid("aodv.buffer_capacity", "must be positive"));
        }
        if let Some(flows) = &self.cbr.flows {
            let mut seen = BTreeSet::new();
            for &(s, d) in flows {
                if s.index() >= n || d.index() >= n {
                    return Err(invalid("cbr.flows", format!("flow {s}>{d} names a node >= {n}")));
                }
                if s == d {
                    return Err(invalid("cbr.flows", format!("flow {s}>{d} has src == dst")));
                }
                if !seen.insert((s, d)) {
                    return Err(invalid("cbr.flows", format!("flow {s}>{d} listed twice")));
                }
            }
        }
        if let Some(pos) = &self.positions {
            if pos.len() != n {
                return Err(invalid("positions", format!("{} positions for {n} nodes", pos.len())));
            }
            for p in pos {
                if !(0.0..=self.area_width).contains(&p.x) || !(0.0..=self.area_height).contains(&p.y) {
                    return Err(invalid("positions", format!("({}, {}) lies outside the area", p.x, p.y)));
                }
            }
        }
        if self.attack.enabled {
            let bh = &self.attack.black_holes;
            if bh.members.is_empty() {
                return Err(invalid("attack.members", "attack enabled with no members"));
            }
            if let Some(m) = bh.members.iter().find(|m| m.index() >= n) {
                return Err(invalid("attack.members", format!("member {m} >= num_nodes {n}")));
            }
            if bh.seq_inflation == 0 {
                return Err(invalid("attack.seq_inflation", "must be at least 1"));
            }
        }
        if self.detection.max_rounds == Some(0) {
            return Err(invalid("detection.max_rounds", "must be at least 1"));
        }
        Ok(())
    }
}

pub fn parse_scenario(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    parse_scenario_str(&text)
}

pub fn parse_scenario_str(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let mut cfg = ScenarioConfig::default();
    let mut lines: BTreeMap<String, usize> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError::Syntax { line, text: content.to_string() });
        };
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(ConfigError::Syntax { line, text: content.to_string() });
        }
        if lines.insert(key.to_string(), line).is_some() {
            return Err(ConfigError::DuplicateKey { line, key: key.to_string() });
        }
        apply(&mut cfg, key, value).map_err(|e| match e {
            ApplyError::Unknown => ConfigError::UnknownKey { line, key: key.to_string() },
            ApplyError::Bad(message) => ConfigError::BadValue { line, key: key.to_string(), message },
        })?;
    }
    cfg.validate().map_err(|e| match e {
        ConfigError::Invalid { key, message, .. } => {
            ConfigError::Invalid { key, line: lines.get(key).copied(), message }
        }
        other => other,
    })?;
    Ok(cfg)
}

enum ApplyError {
    Unknown,
    Bad(String),
}

fn num<T: std::str::FromStr>(v: &str) -> Result<T, ApplyError>
where
    T::Err: std::fmt::Display,
{
    v.parse::<T>().map_err(|e| ApplyError::Bad(format!("`{v}`: {e}")))
}

fn boolean(v: &str) -> Result<bool, ApplyError> {
    match v {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(ApplyError::Bad(format!("`{v}` is not a boolean"))),
    }
}

fn node_list(v: &str) -> Result<BTreeSet<NodeId>, ApplyError> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(|s| num::<u32>(s).map(NodeId)).collect()
}

fn flow_list(v: &str) -> Result<Vec<(NodeId, NodeId)>, ApplyError> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|pair| {
            let (s, d) =
                pair.split_once('>').ok_or_else(|| ApplyError::Bad(format!("flow `{pair}` is not `src>dst`")))?;
            Ok((NodeId(num(s.trim())?), NodeId(num(d.trim())?)))
        })
        .collect()
}

fn position_list(v: &str) -> Result<Vec<Position>, ApplyError> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|pair| {
            let (x, y) =
                pair.split_once(':').ok_or_else(|| ApplyError::Bad(format!("position `{pair}` is not `x:y`")))?;
            Ok(Position::new(num(x.trim())?, num(y.trim())?))
        })
        .collect()
}

fn apply(cfg: &mut ScenarioConfig, key: &str, v: &str) -> Result<(), ApplyError> {
    match key {
        "num_nodes" => cfg.num_nodes = num(v)?,
        "area.width" => cfg.area_width = num(v)?,
        "area.height" => cfg.area_height = num(v)?,
        "radio_range" => cfg.radio_range = num(v)?,
        "speed" => cfg.speed = num(v)?,
        "pause_seconds" => cfg.pause_seconds = num(v)?,
        "mobility.tick_seconds" => cfg.mobility_tick_seconds = num(v)?,
        "duration_seconds" => cfg.duration_seconds = num(v)?,
        "seed" => cfg.seed = num(v)?,
        "latency" => cfg.latency = num(v)?,
        "rrep_window_seconds" => cfg.rrep_window_seconds = num(v)?,
        "discovery_retry_seconds" => cfg.discovery_retry_seconds = num(v)?,
        "require_connected" => cfg.require_connected = boolean(v)?,
        "positions" => cfg.positions = Some(position_list(v)?),
        "cbr.flows" => cfg.cbr.flows = Some(flow_list(v)?),
        "cbr.num_flows" => cfg.cbr.num_flows = num(v)?,
        "cbr.rate_pps" => cfg.cbr.rate_pps = num(v)?,
        "cbr.payload_bytes" => cfg.cbr.payload_bytes = num(v)?,
        "cbr.start_seconds" => cfg.cbr.start_seconds = num(v)?,
        "attack.enabled" => cfg.attack.enabled = boolean(v)?,
        "attack.members" => cfg.attack.black_holes.members = node_list(v)?,
        "attack.cooperative" => cfg.attack.black_holes.cooperative = boolean(v)?,
        "attack.seq_inflation" => cfg.attack.black_holes.seq_inflation = num(v)?,
        "attack.advertised_hop_count" => cfg.attack.black_holes.advertised_hop_count = num(v)?,
        "attack.respond_delay_seconds" => cfg.attack.black_holes.respond_delay_seconds = num(v)?,
        "detection.enabled" => cfg.detection.enabled = boolean(v)?,
        "detection.max_rounds" => cfg.detection.max_rounds = Some(num(v)?),
        "detection.warmup_flows" => cfg.detection.warmup_flows = num(v)?,
        "detection.restart_backoff_seconds" => cfg.detection.restart_backoff_seconds = num(v)?,
        "aodv.gratuitous_rrep" => cfg.gratuitous_rrep = boolean(v)?,
        "aodv.buffer_capacity" => cfg.buffer_capacity = num(v)?,
        _ => return Err(ApplyError::Unknown),
    }
    Ok(())
}
