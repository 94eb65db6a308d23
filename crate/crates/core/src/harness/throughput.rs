// SPDX-License-Identifier: Apache-2.0

//! Saturating-sender throughput of single lanes and of the full path.

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::chip::SourceSpec;
use crate::engine::{run, SimConfig};
use crate::link::{ChipLink, Link};
use crate::netcompiler::{compile, LogicalConnection};
use crate::types::{ChipLabel, SimTime, TICKS_PER_SYSTEM_CYCLE, TICK_NS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Lane {
    /// One inter-FPGA link with clock compensation.
    Mgt,
    /// One chip link behind its token bucket.
    Chip,
    /// Chip to chip through two nodes and the Aggregator.
    EndToEnd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThroughputResult {
    pub lane: Lane,
    /// Words (MGT lane) or events delivered.
    pub words: u64,
    /// Ticks from first to last delivery, inclusive.
    pub span_ticks: u64,
    pub measured_mwords_per_s: f64,
    /// Closed-form sustained rate from the calibration.
    pub expected_mwords_per_s: f64,
    pub relative_error: f64,
}

impl ThroughputResult {
    fn new(lane: Lane, words: u64, first: u64, last: u64, expected: f64) -> Self {
        let span_ticks = last - first + 1;
        let measured = words as f64 * 1e3 / (span_ticks * TICK_NS) as f64;
        Self {
            lane,
            words,
            span_ticks,
            measured_mwords_per_s: measured,
            expected_mwords_per_s: expected,
            relative_error: (measured - expected).abs() / expected,
        }
    }
}

const TICKS_PER_US: f64 = 1e3 / TICK_NS as f64;

fn mgt_lane(cfg: &SimConfig, words: u64) -> Result<ThroughputResult, HarnessError> {
    let params = cfg.calibration.mgt_link.params();
    let mut link: Link<u64> = Link::new(params);
    let mut sent = 0;
    let mut now = SimTime::ZERO;
    while link.counters().delivered < words {
        if sent < words && link.try_send(sent, now)?.is_accepted() {
            sent += 1;
        }
        link.poll(now);
        now = now.plus(1);
    }
    let c = link.counters();
    let expected = params.sustained_fraction() * TICKS_PER_US;
    Ok(ThroughputResult::new(Lane::Mgt, c.delivered, c.first_delivery.unwrap(), c.last_delivery.unwrap(), expected))
}

fn chip_lane(cfg: &SimConfig, events: u64) -> Result<ThroughputResult, HarnessError> {
    let params = cfg.calibration.chip_link;
    let mut link: ChipLink<u32> = ChipLink::new(params);
    let (mut sent, mut delivered) = (0u64, 0u64);
    let (mut first, mut last) = (None, 0);
    let mut now = SimTime::ZERO;
    while delivered < events {
        if sent < events {
            let n = u64::from(link.capacity(now)).min(events - sent) as u32;
            if n > 0 {
                link.send(n, n, now)?;
                sent += u64::from(n);
            }
        }
        // deliveries land on system edges only
        if let Some(n) = link.poll(now) {
            delivered += u64::from(n);
            first.get_or_insert(now.ticks());
            last = now.ticks() + TICKS_PER_SYSTEM_CYCLE - 1;
        }
        now = now.plus(TICKS_PER_SYSTEM_CYCLE);
    }
    let expected = f64::from(params.events_per_cycle) * TICKS_PER_US / TICKS_PER_SYSTEM_CYCLE as f64;
    Ok(ThroughputResult::new(Lane::Chip, delivered, first.unwrap(), last, expected))
}

/// Two sources on node 0 offer `events_per_cycle` events per system cycle to
/// node 1; the receiver's trace gives the delivered rate.
fn end_to_end(cfg: &SimConfig, events: u64) -> Result<ThroughputResult, HarnessError> {
    let cal = &cfg.calibration;
    let offered = u64::from(cal.chip_link.events_per_cycle);
    let per_source = events.div_ceil(offered);
    let mut sim = SimConfig::new(2, 0);
    sim.calibration = *cal;
    for k in 0..offered {
        sim.nodes[0].sources.push(SourceSpec {
            label: ChipLabel::from_u16(k as u16),
            period_ticks: TICKS_PER_SYSTEM_CYCLE,
            count: per_source,
            start_offset: 0,
        });
    }
    sim.run_ticks = sim.barrier.timeout_cycles * 4 + per_source * TICKS_PER_SYSTEM_CYCLE * 4 + 100_000;
    let conns: Vec<_> = (0..offered as u16).map(|k| LogicalConnection::new(0, k, 1, k)).collect();
    let report = run(&sim, &compile(&conns, 2)?)?;
    let trace = &report.traces[1];
    let (first, last) = match (
        trace.iter().map(|r| r.link_arrived_at.ticks()).min(),
        trace.iter().map(|r| r.link_arrived_at.ticks()).max(),
    ) {
        (Some(a), Some(b)) => (a, b + TICKS_PER_SYSTEM_CYCLE - 1),
        _ => return Err(HarnessError::Spec("no events reached the receiver".into())),
    };
    let chip = offered as f64 * TICKS_PER_US / TICKS_PER_SYSTEM_CYCLE as f64;
    let mgt = cal.mgt_link.params().sustained_fraction() * TICKS_PER_US;
    Ok(ThroughputResult::new(Lane::EndToEnd, trace.len() as u64, first, last, chip.min(mgt)))
}

/// Measures `lane` with at least `words` deliveries under calibration `cfg`.
pub fn bench_throughput(cfg: &SimConfig, lane: Lane, words: u64) -> Result<ThroughputResult, HarnessError> {
    if words < 2 {
        return Err(HarnessError::Spec("throughput needs at least two words".into()));
    }
    match lane {
        Lane::Mgt => mgt_lane(cfg, words),
        Lane::Chip => chip_lane(cfg, words),
        Lane::EndToEnd => end_to_end(cfg, words),
    }
}
