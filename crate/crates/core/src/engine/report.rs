// SPDX-License-Identifier: Apache-2.0

//! Run results: counters, latency distributions and per-receiver traces.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::aggregator::{AggregatorCounters, BarrierCounters};
use crate::chip::{ChipCounters, TraceRecord};
use crate::link::LinkCounters;
use crate::node::NodeCounters;
use crate::pipeline::QueueStats;
use crate::types::TICK_NS;

pub const REPORT_FORMAT_VERSION: u32 = 1;

/// Histogram bin width, one system-clock period.
pub const BIN_NS: u64 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Percentiles {
    pub p1_ns: u64,
    pub p50_ns: u64,
    pub p99_ns: u64,
    pub max_ns: u64,
}

impl Percentiles {
    /// (p99 - p1) / p50.
    pub fn relative_jitter(&self) -> f64 {
        (self.p99_ns - self.p1_ns) as f64 / self.p50_ns as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bin {
    pub bin_ns: u64,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencySummary {
    pub count: u64,
    /// Non-empty bins in ascending order; `bin_ns` is the lower edge.
    pub histogram: Vec<Bin>,
    pub percentiles: Option<Percentiles>,
    pub mean_ns: f64,
    pub variance_ns2: f64,
}

/// Nearest-rank percentile of an ascending slice.
pub fn nearest_rank(sorted: &[u64], pct: u64) -> u64 {
    assert!(!sorted.is_empty() && pct <= 100);
    let rank = (pct as usize * sorted.len()).div_ceil(100).max(1);
    sorted[rank - 1]
}

impl LatencySummary {
    pub fn from_ns(samples: impl IntoIterator<Item = u64>) -> Self {
        let mut v: Vec<u64> = samples.into_iter().collect();
        v.sort_unstable();
        let mut bins: BTreeMap<u64, u64> = BTreeMap::new();
        for &x in &v {
            *bins.entry(x / BIN_NS * BIN_NS).or_default() += 1;
        }
        let n = v.len() as f64;
        let (mean, var) = if v.is_empty() {
            (0.0, 0.0)
        } else {
            let mean = v.iter().map(|&x| x as f64).sum::<f64>() / n;
            (mean, v.iter().map(|&x| (x as f64 - mean).powi(2)).sum::<f64>() / n)
        };
        Self {
            count: v.len() as u64,
            histogram: bins.into_iter().map(|(bin_ns, count)| Bin { bin_ns, count }).collect(),
            percentiles: (!v.is_empty()).then(|| Percentiles {
                p1_ns: nearest_rank(&v, 1),
                p50_ns: nearest_rank(&v, 50),
                p99_ns: nearest_rank(&v, 99),
                max_ns: *v.last().unwrap(),
            }),
            mean_ns: mean,
            variance_ns2: var,
        }
    }
}

/// Terms of the per-run event balance
/// `generated + replicated = traced + losses + in_flight`, where
/// `replicated` counts the extra copies made by Aggregator broadcast.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conservation {
    pub generated: u64,
    pub replicated: u64,
    pub traced: u64,
    pub layer1_dropped: u64,
    pub outbound_filtered: u64,
    pub egress_dropped: u64,
    pub unrouted: u64,
    pub aggregator_dropped: u64,
    pub inbound_filtered: u64,
    pub ingress_dropped: u64,
    pub in_flight: u64,
}

impl Conservation {
    pub fn dropped(&self) -> u64 {
        self.layer1_dropped + self.egress_dropped + self.aggregator_dropped + self.ingress_dropped
    }

    pub fn filtered(&self) -> u64 {
        self.outbound_filtered + self.unrouted + self.inbound_filtered
    }

    pub fn holds(&self) -> bool {
        self.generated + self.replicated == self.traced + self.dropped() + self.filtered() + self.in_flight
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaneThroughput {
    pub words: u64,
    pub first_tick: Option<u64>,
    pub last_tick: Option<u64>,
    /// Words per second between first and last delivery, in millions.
    pub mwords_per_s: f64,
}

impl LaneThroughput {
    pub fn from_counters(c: &LinkCounters) -> Self {
        let rate = match (c.first_delivery, c.last_delivery) {
            (Some(a), Some(b)) if c.delivered > 1 => c.delivered as f64 * 1e3 / ((b - a + 1) * TICK_NS) as f64,
            _ => 0.0,
        };
        Self { words: c.delivered, first_tick: c.first_delivery, last_tick: c.last_delivery, mwords_per_s: rate }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeReport {
    pub index: usize,
    pub realtime_start_tick: Option<u64>,
    pub chip: ChipCounters,
    pub node: NodeCounters,
    pub egress: QueueStats,
    pub ingress: QueueStats,
    /// Contention queue of the Aggregator output towards this node.
    pub aggregator_output: QueueStats,
    pub uplink: LaneThroughput,
    pub downlink: LaneThroughput,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub format_version: u32,
    pub node_count: usize,
    /// Tick at which the simulation stopped.
    pub end_tick: u64,
    /// Whether the fabric drained before `run_ticks`.
    pub quiescent: bool,
    pub nodes: Vec<NodeReport>,
    pub aggregator: AggregatorCounters,
    pub barrier: BarrierCounters,
    pub conservation: Conservation,
    /// Emission to synapse arrival, after jitter compensation.
    pub latency: LatencySummary,
    /// Emission to chip-link arrival, before jitter compensation.
    pub link_latency: LatencySummary,
    /// Per-receiver traces, stored as CSV next to the summary.
    #[serde(skip)]
    pub traces: Vec<Vec<TraceRecord>>,
}

impl RunReport {
    pub fn realtime_starts(&self) -> Vec<Option<u64>> {
        self.nodes.iter().map(|n| n.realtime_start_tick).collect()
    }

    pub fn total_dropped(&self) -> u64 {
        self.conservation.dropped()
    }
}
