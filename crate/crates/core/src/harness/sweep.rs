// SPDX-License-Identifier: Apache-2.0

//! Latency sweeps over regular source rates on a fan-in topology.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::chip::SourceSpec;
use crate::engine::{path_delay, run, LatencySummary, PathBreakdown, SimConfig, BIN_NS};
use crate::netcompiler::{compile, LogicalConnection};
use crate::types::ChipLabel;

/// MGT cycles per microsecond; a period of `MGT_MHZ / rate` ticks gives `rate` MHz.
const MGT_MHZ: f64 = 250.0;

pub const DEFAULT_RATES_MHZ: [f64; 9] = [1.0, 2.0, 5.0, 10.0, 25.0, 50.0, 62.5, 83.3, 125.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    /// Senders per receiver.
    pub fan_in: usize,
    /// Per-sender event rates.
    pub rates_mhz: Vec<f64>,
    pub spikes_per_point: u64,
    /// Sync offset between senders' first spikes, in ticks per sender index.
    pub stagger_ticks: u64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self { fan_in: 3, rates_mhz: DEFAULT_RATES_MHZ.to_vec(), spikes_per_point: 1 << 15, stagger_ticks: 0 }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.fan_in == 0 || self.fan_in >= crate::types::MAX_NODES {
            return Err(HarnessError::Spec(format!("fan_in {} outside 1..=15", self.fan_in)));
        }
        if self.rates_mhz.is_empty() || self.rates_mhz.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
            return Err(HarnessError::Spec("rates must be positive".into()));
        }
        if self.spikes_per_point == 0 {
            return Err(HarnessError::Spec("spikes_per_point must be >= 1".into()));
        }
        Ok(())
    }
}

/// Source period for a requested rate, in whole ticks.
pub fn period_for_rate(rate_mhz: f64) -> u64 {
    ((MGT_MHZ / rate_mhz).round() as u64).max(1)
}

/// Senders `0..fan_in` each send label 1 to receiver `fan_in`, which sees
/// sender `i` as label `100 + i`.
pub fn fan_in_connections(fan_in: usize) -> Vec<LogicalConnection> {
    (0..fan_in).map(|i| LogicalConnection::new(i as u8, 1, fan_in as u8, 100 + i as u16)).collect()
}

/// Configuration of one sweep point, derived from `base` (calibration,
/// barrier and run budget are kept; nodes and fabric are replaced).
pub fn fan_in_config(base: &SimConfig, spec: &SweepSpec, rate_mhz: f64) -> SimConfig {
    let n = spec.fan_in + 1;
    let period = period_for_rate(rate_mhz);
    let mut cfg = base.clone();
    cfg.node_count = n;
    cfg.nodes = vec![Default::default(); n];
    cfg.fabric = Default::default();
    for (i, node) in cfg.nodes.iter_mut().take(spec.fan_in).enumerate() {
        node.sources.push(SourceSpec {
            label: ChipLabel::from_u16(1),
            period_ticks: period,
            count: spec.spikes_per_point,
            start_offset: i as u64 * spec.stagger_ticks,
        });
    }
    let busy = spec.spikes_per_point * period + spec.fan_in as u64 * spec.stagger_ticks;
    cfg.run_ticks = cfg.run_ticks.max(cfg.barrier.timeout_cycles * 4 + busy * 2 + 100_000);
    cfg
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub rate_mhz: f64,
    pub period_ticks: u64,
    pub generated: u64,
    pub traced: u64,
    pub dropped: u64,
    pub latency: LatencySummary,
    pub link_latency: LatencySummary,
    pub saturated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub spec: SweepSpec,
    pub path_delay: PathBreakdown,
    /// Ascending by rate.
    pub points: Vec<SweepPoint>,
    /// First rate flagged as saturated.
    pub saturation_rate_mhz: Option<f64>,
}

impl SweepResult {
    pub fn sub_saturation(&self) -> impl Iterator<Item = &SweepPoint> {
        self.points.iter().filter(|p| !p.saturated)
    }

    /// `rate_mhz,bin_ns,count` rows.
    pub fn histogram_csv(&self) -> Result<String, HarnessError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["rate_mhz", "bin_ns", "count"])?;
        for p in &self.points {
            for b in &p.latency.histogram {
                w.write_record([p.rate_mhz.to_string(), b.bin_ns.to_string(), b.count.to_string()])?;
            }
        }
        finish_csv(w)
    }

    pub fn percentiles_csv(&self) -> Result<String, HarnessError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "rate_mhz",
            "period_ticks",
            "count",
            "p1_ns",
            "p50_ns",
            "p99_ns",
            "max_ns",
            "jitter",
            "dropped",
            "saturated",
        ])?;
        for p in &self.points {
            let (p1, p50, p99, max, jitter) = match p.latency.percentiles {
                Some(q) => (q.p1_ns, q.p50_ns, q.p99_ns, q.max_ns, format!("{:.4}", q.relative_jitter())),
                None => (0, 0, 0, 0, String::new()),
            };
            w.write_record([
                p.rate_mhz.to_string(),
                p.period_ticks.to_string(),
                p.latency.count.to_string(),
                p1.to_string(),
                p50.to_string(),
                p99.to_string(),
                max.to_string(),
                jitter,
                p.dropped.to_string(),
                p.saturated.to_string(),
            ])?;
        }
        finish_csv(w)
    }
}

pub(crate) fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<String, HarnessError> {
    let bytes = w.into_inner().map_err(|e| HarnessError::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv of ASCII fields"))
}

/// p99 growth over the lowest rate, in histogram bins, that marks saturation.
pub const SATURATION_P99_BINS: u64 = 8;

fn run_point(base: &SimConfig, spec: &SweepSpec, rate_mhz: f64) -> Result<SweepPoint, HarnessError> {
    let cfg = fan_in_config(base, spec, rate_mhz);
    let program = compile(&fan_in_connections(spec.fan_in), cfg.node_count)?;
    let report = run(&cfg, &program)?;
    Ok(SweepPoint {
        rate_mhz,
        period_ticks: period_for_rate(rate_mhz),
        generated: report.conservation.generated,
        traced: report.conservation.traced,
        dropped: report.total_dropped(),
        latency: report.latency,
        link_latency: report.link_latency,
        saturated: false,
    })
}

/// Runs one simulation per rate on up to `workers` threads.
pub fn latency_sweep(base: &SimConfig, spec: &SweepSpec, workers: usize) -> Result<SweepResult, HarnessError> {
    spec.validate()?;
    let mut rates = spec.rates_mhz.clone();
    rates.sort_by(f64::total_cmp);
    rates.dedup();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| HarnessError::Io(e.to_string()))?;
    let mut points =
        pool.install(|| rates.par_iter().map(|&r| run_point(base, spec, r)).collect::<Result<Vec<_>, _>>())?;

    let baseline = points[0].latency.percentiles.map(|p| p.p99_ns);
    for p in &mut points {
        let p99 = p.latency.percentiles.map(|q| q.p99_ns);
        let diverged = matches!((p99, baseline), (Some(a), Some(b)) if a > b + SATURATION_P99_BINS * BIN_NS);
        p.saturated = p.dropped > 0 || diverged;
    }
    let saturation_rate_mhz = points.iter().find(|p| p.saturated).map(|p| p.rate_mhz);
    Ok(SweepResult { spec: spec.clone(), path_delay: path_delay(&base.calibration), points, saturation_rate_mhz })
}
