//! Delivery counters, packet delivery ratio and throughput.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum MetricsError {
    #[error("duration must be positive")]
    NonPositiveDuration,
    #[error("no records to aggregate")]
    Empty,
}

/// Per-flow packet accounting.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counters {
    pub originated: u64,
    pub delivered: u64,
    pub absorbed: u64,
    pub no_route_drops: u64,
    pub buffer_drops: u64,
    pub in_flight_at_end: u64,
    pub bytes_delivered: u64,
}

impl Counters {
    pub fn add(&mut self, o: &Counters) {
        self.originated += o.originated;
        self.delivered += o.delivered;
        self.absorbed += o.absorbed;
        self.no_route_drops += o.no_route_drops;
        self.buffer_drops += o.buffer_drops;
        self.in_flight_at_end += o.in_flight_at_end;
        self.bytes_delivered += o.bytes_delivered;
    }

    /// originated == delivered + absorbed + no-route + buffer drops + in flight.
    pub fn conserved(&self) -> bool {
        self.originated
            == self.delivered + self.absorbed + self.no_route_drops + self.buffer_drops + self.in_flight_at_end
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    pub totals: Counters,
    pub flows: Vec<Counters>,
    pub duration: f64,
    pub pdr: f64,
    pub throughput_bps: f64,
    /// Set when no packet was originated and the PDR is vacuous.
    pub no_traffic: bool,
}

impl MetricsRecord {
    pub fn from_flows(flows: Vec<Counters>, duration: f64) -> Result<Self, MetricsError> {
        let mut totals = Counters::default();
        for f in &flows {
            totals.add(f);
        }
        let (pdr, no_traffic) = compute_pdr(&totals);
        let throughput_bps = compute_throughput(totals.bytes_delivered, duration)?;
        Ok(MetricsRecord { totals, flows, duration, pdr, throughput_bps, no_traffic })
    }
}

/// delivered / originated; 1.0 with the no-traffic flag when nothing was sent.
pub fn compute_pdr(c: &Counters) -> (f64, bool) {
    if c.originated == 0 {
        return (1.0, true);
    }
    (c.delivered as f64 / c.originated as f64, false)
}

/// Application payload bytes delivered per second.
pub fn compute_throughput(bytes_delivered: u64, duration: f64) -> Result<f64, MetricsError> {
    if duration.is_nan() || duration <= 0.0 {
        return Err(MetricsError::NonPositiveDuration);
    }
    Ok(bytes_delivered as f64 / duration)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Mode {
    Clean,
    Attack,
    AttackDetection,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Clean, Mode::Attack, Mode::AttackDetection];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Clean => "clean",
            Mode::Attack => "attack",
            Mode::AttackDetection => "attack+detection",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "clean" => Ok(Mode::Clean),
            "attack" => Ok(Mode::Attack),
            "attack+detection" | "detection" => Ok(Mode::AttackDetection),
            other => Err(format!("unknown mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepKey {
    pub speed: f64,
    pub mode: Mode,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl Summary {
    fn of(values: &[f64]) -> Summary {
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Summary { mean, min, max }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub speed: f64,
    pub mode: Mode,
    pub runs: usize,
    pub pdr: Summary,
    pub throughput_bps: Summary,
}

/// Groups records by (speed, mode) and summarizes across seeds. Rows are
/// ordered by speed, then mode.
pub fn aggregate_sweep(records: &[(SweepKey, MetricsRecord)]) -> Result<Vec<SweepRow>, MetricsError> {
    if records.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut groups: Vec<(f64, Mode, Vec<f64>, Vec<f64>)> = Vec::new();
    for (key, rec) in records {
        match groups.iter_mut().find(|g| g.0 == key.speed && g.1 == key.mode) {
            Some(g) => {
                g.2.push(rec.pdr);
                g.3.push(rec.throughput_bps);
            }
            None => groups.push((key.speed, key.mode, vec![rec.pdr], vec![rec.throughput_bps])),
        }
    }
    groups.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(groups
        .into_iter()
        .map(|(speed, mode, pdr, tp)| SweepRow {
            speed,
            mode,
            runs: pdr.len(),
            pdr: Summary::of(&pdr),
            throughput_bps: Summary::of(&tp),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counters(originated: u64, delivered: u64) -> Counters {
        Counters {
            originated,
            delivered,
            absorbed: originated - delivered,
            bytes_delivered: delivered * 512,
            ..Default::default()
        }
    }

    #[test]
    fn pdr_cases() {
        assert_eq!(compute_pdr(&counters(1000, 820)), (0.82, false));
        assert_eq!(compute_pdr(&counters(50, 50)), (1.0, false));
        assert_eq!(compute_pdr(&Counters::default()), (1.0, true));
    }

    #[test]
    fn throughput_cases() {
        assert_eq!(compute_throughput(820 * 512, 100.0), Ok(4198.4));
        assert_eq!(compute_throughput(0, 100.0), Ok(0.0));
        let one = compute_throughput(1000, 10.0).unwrap();
        let two = compute_throughput(2000, 10.0).unwrap();
        assert_eq!(two, 2.0 * one);
        assert_eq!(compute_throughput(10, 0.0), Err(MetricsError::NonPositiveDuration));
        assert_eq!(compute_throughput(10, -1.0), Err(MetricsError::NonPositiveDuration));
    }

    #[test]
    fn record_totals_and_conservation() {
        let rec = MetricsRecord::from_flows(vec![counters(10, 8), counters(10, 10)], 10.0).unwrap();
        assert_eq!(rec.totals.originated, 20);
        assert_eq!(rec.pdr, 0.9);
        assert!(rec.totals.conserved());
        let mut broken = rec.totals;
        broken.delivered += 1;
        assert!(!broken.conserved());
    }

    fn rec(pdr_delivered: u64) -> MetricsRecord {
        MetricsRecord::from_flows(vec![counters(100, pdr_delivered)], 10.0).unwrap()
    }

    #[test]
    fn sweep_averaging() {
        let key = |seed, mode| SweepKey { speed: 10.0, mode, seed };
        let rows = aggregate_sweep(&[
            (key(1, Mode::Attack), rec(80)),
            (key(2, Mode::Attack), rec(84)),
            (key(1, Mode::Clean), rec(100)),
        ])
        .unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].mode, Mode::Clean);
        assert_eq!(rows[0].pdr.mean, 1.0);
        assert_eq!(rows[0].runs, 1);
        assert_eq!(rows[1].mode, Mode::Attack);
        assert!((rows[1].pdr.mean - 0.82).abs() < 1e-12);
        assert_eq!((rows[1].pdr.min, rows[1].pdr.max), (0.80, 0.84));
        assert_eq!(aggregate_sweep(&[]), Err(MetricsError::Empty));
    }

    #[test]
    fn mode_names_round_trip() {
        for m in Mode::ALL {
            assert_eq!(m.as_str().parse::<Mode>().unwrap(), m);
        }
    }
}
