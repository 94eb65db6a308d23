// SPDX-License-Identifier: Apache-2.0

//! Chip endpoint: regular-rate spike sources behind a layer-1 egress with
//! minimal buffering, and a receive side with the layer-2 to layer-1 jitter
//! compensation buffer feeding a synapse-arrival trace.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::flit::{EventMeta, L2Transfer, Origin};
use crate::link::{ChipLink, ChipLinkParams, LinkError};
use crate::pipeline::DelayLine;
use crate::types::{system_time_low8, ChipLabel, NodeId, SimTime, SpikeEvent, Timestamp8, TICKS_PER_SYSTEM_CYCLE};

/// A regular spike train. Times are in ticks relative to the real-time start.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSpec {
    pub label: ChipLabel,
    pub period_ticks: u64,
    pub count: u64,
    #[serde(default)]
    pub start_offset: u64,
}

impl SourceSpec {
    pub fn validate(&self) -> Result<(), String> {
        if self.period_ticks == 0 {
            return Err(format!("source {}: period_ticks must be >= 1", self.label));
        }
        if self.count == 0 {
            return Err(format!("source {}: count must be >= 1", self.label));
        }
        Ok(())
    }

    /// Number of spikes whose nominal time is at or before `t` (ticks since start).
    fn due_by(&self, t: u64) -> u64 {
        if t < self.start_offset {
            0
        } else {
            ((t - self.start_offset) / self.period_ticks + 1).min(self.count)
        }
    }

    /// System edge (relative to start) on which spike `i` is emitted.
    pub fn emission_tick(&self, i: u64) -> u64 {
        SimTime(self.start_offset + i * self.period_ticks).next_system_edge().ticks()
    }
}

/// Spikes of `spec` emitted on the system edge `now`, for a real-time section
/// beginning at `start` (itself a system edge).
///
/// A spike whose nominal time falls between two system edges is emitted on
/// the later one.
pub fn generate(spec: &SourceSpec, start: SimTime, now: SimTime) -> Vec<SpikeEvent> {
    debug_assert!(now.is_system_edge() && start.is_system_edge());
    if now < start {
        return Vec::new();
    }
    let rel = now.ticks() - start.ticks();
    let before = if rel >= TICKS_PER_SYSTEM_CYCLE { spec.due_by(rel - TICKS_PER_SYSTEM_CYCLE) } else { 0 };
    let upto = spec.due_by(rel);
    (before..upto).map(|_| SpikeEvent { label: spec.label, emitted_at: now }).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JitterConfig {
    pub enabled: bool,
    /// Expected timestamp-to-arrival delay in system cycles; `None` derives it
    /// from the zero-contention chip-link delay plus `margin_cycles`.
    #[serde(default)]
    pub expected_delay_cycles: Option<u64>,
    pub margin_cycles: u64,
    pub depth: usize,
}

impl Default for JitterConfig {
    fn default() -> Self {
        Self { enabled: true, expected_delay_cycles: None, margin_cycles: 2, depth: 8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChipParams {
    pub layer1_egress_cycles: u64,
    pub layer1_ingress_cycles: u64,
    pub egress_depth: usize,
    pub jitter: JitterConfig,
}

impl Default for ChipParams {
    fn default() -> Self {
        Self { layer1_egress_cycles: 4, layer1_ingress_cycles: 4, egress_depth: 2, jitter: JitterConfig::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JitterBufferParams {
    pub expected_delay: u64,
    pub depth: usize,
}

/// Release cycle for an event arriving in system cycle `arrival` carrying
/// timestamp `sent`.
///
/// The send cycle is recovered as the latest cycle at or before `arrival`
/// whose low byte equals the timestamp, so the one-way delay must stay below
/// 256 cycles.
pub fn jitter_release(arrival: u64, sent: Timestamp8, params: &JitterBufferParams) -> u64 {
    let age = u64::from((arrival as u8).wrapping_sub(sent.get()));
    let t_sent = arrival.saturating_sub(age);
    arrival.max(t_sent + params.expected_delay)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub label: ChipLabel,
    pub emitted_at: SimTime,
    pub arrived_at: SimTime,
    /// When the event came off the chip link, before compensation.
    pub link_arrived_at: SimTime,
}

impl TraceRecord {
    pub fn latency_ticks(&self) -> u64 {
        self.arrived_at.ticks() - self.emitted_at.ticks()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChipCounters {
    pub generated: u64,
    pub layer1_dropped: u64,
    pub sent: u64,
    pub routed_received: u64,
    pub playback_received: u64,
    pub compensation_held: u64,
    pub compensation_missed: u64,
    pub traced: u64,
}

#[derive(Debug, Clone, Copy)]
struct Received {
    label: ChipLabel,
    meta: EventMeta,
    link_arrived_at: SimTime,
}

#[derive(Debug, Clone)]
pub struct Chip {
    id: NodeId,
    params: ChipParams,
    jitter: Option<JitterBufferParams>,
    sources: Vec<SourceSpec>,
    realtime_start: Option<SimTime>,
    realtime_end: Option<SimTime>,
    egress_pipe: DelayLine<SpikeEvent>,
    egress_queue: VecDeque<SpikeEvent>,
    uplink: ChipLink<L2Transfer>,
    held: VecDeque<(u64, Received)>,
    ingress_pipe: DelayLine<Received>,
    trace: Vec<TraceRecord>,
    counters: ChipCounters,
}

impl Chip {
    pub fn new(
        id: NodeId,
        params: ChipParams,
        jitter: Option<JitterBufferParams>,
        link: ChipLinkParams,
        sources: Vec<SourceSpec>,
    ) -> Self {
        Self {
            id,
            params,
            jitter,
            sources,
            realtime_start: None,
            realtime_end: None,
            egress_pipe: DelayLine::default(),
            egress_queue: VecDeque::new(),
            uplink: ChipLink::new(link),
            held: VecDeque::new(),
            ingress_pipe: DelayLine::default(),
            trace: Vec::new(),
            counters: ChipCounters::default(),
        }
    }

    pub fn id(&self) -> NodeId {
        self.id
    }

    pub fn start_realtime(&mut self, at: SimTime) {
        self.realtime_start = Some(at);
    }

    pub fn end_realtime(&mut self, at: SimTime) {
        self.realtime_end = Some(at);
    }

    fn emitting(&self, now: SimTime) -> Option<SimTime> {
        let start = self.realtime_start?;
        match self.realtime_end {
            Some(end) if now >= end => None,
            _ => Some(start),
        }
    }

    /// Source generation, layer-1 egress and chip-link transmission for one
    /// system edge.
    pub fn step_egress(&mut self, now: SimTime) -> Result<(), LinkError> {
        if !now.is_system_edge() {
            return Ok(());
        }
        if let Some(start) = self.emitting(now) {
            let ready = now.plus(self.params.layer1_egress_cycles * TICKS_PER_SYSTEM_CYCLE);
            for spec in &self.sources {
                for spike in generate(spec, start, now) {
                    self.counters.generated += 1;
                    self.egress_pipe.push(ready, spike);
                }
            }
        }
        while let Some(spike) = self.egress_pipe.pop_ready(now) {
            self.egress_queue.push_back(spike);
        }
        if self.egress_queue.is_empty() {
            return Ok(());
        }
        let n = (self.uplink.capacity(now) as usize).min(self.egress_queue.len());
        if n > 0 {
            let ts = system_time_low8(now);
            let events: Vec<_> = self
                .egress_queue
                .drain(..n)
                .map(|s| (s.label, ts, EventMeta { emitted_at: s.emitted_at, origin: Origin::Routed }))
                .collect();
            self.counters.sent += n as u64;
            self.uplink.send(L2Transfer::new(&events), n as u32, now)?;
        }
        // Layer-1: whatever does not fit the minimal buffer is lost.
        if self.egress_queue.len() > self.params.egress_depth {
            let excess = self.egress_queue.len() - self.params.egress_depth;
            self.egress_queue.truncate(self.params.egress_depth);
            self.counters.layer1_dropped += excess as u64;
        }
        Ok(())
    }

    pub fn poll_uplink(&mut self, now: SimTime) -> Option<L2Transfer> {
        self.uplink.poll(now)
    }

    /// Accepts a transfer from the node, runs the jitter buffer and the
    /// layer-1 ingress pipeline, and records synapse arrivals.
    pub fn step_ingress(&mut self, now: SimTime, arriving: Option<L2Transfer>) {
        if !now.is_system_edge() {
            debug_assert!(arriving.is_none(), "chip link delivers on system edges only");
            return;
        }
        let cycle = now.system_cycle();
        let ingress_ready = now.plus(self.params.layer1_ingress_cycles * TICKS_PER_SYSTEM_CYCLE);
        while let Some(&(release, ev)) = self.held.front() {
            if release > cycle {
                break;
            }
            self.held.pop_front();
            self.ingress_pipe.push(ingress_ready, ev);
        }
        if let Some(transfer) = arriving {
            for (label, ts, meta) in transfer.events() {
                match meta.origin {
                    Origin::Routed => self.counters.routed_received += 1,
                    Origin::Playback => self.counters.playback_received += 1,
                }
                let ev = Received { label, meta, link_arrived_at: now };
                let release = self.jitter.as_ref().map_or(cycle, |p| jitter_release(cycle, ts, p));
                if release > cycle {
                    let depth = self.jitter.map_or(0, |p| p.depth);
                    if self.held.len() < depth {
                        self.counters.compensation_held += 1;
                        let at = self.held.partition_point(|&(r, _)| r <= release);
                        self.held.insert(at, (release, ev));
                        continue;
                    }
                    self.counters.compensation_missed += 1;
                }
                self.ingress_pipe.push(ingress_ready, ev);
            }
        }
        while let Some(ev) = self.ingress_pipe.pop_ready(now) {
            if ev.meta.origin == Origin::Routed {
                self.record(ev, now);
            }
        }
    }

    fn record(&mut self, ev: Received, now: SimTime) {
        self.counters.traced += 1;
        self.trace.push(TraceRecord {
            label: ev.label,
            emitted_at: ev.meta.emitted_at,
            arrived_at: now,
            link_arrived_at: ev.link_arrived_at,
        });
    }

    /// Earliest future tick at which this chip has work to do.
    pub fn next_activity(&self, now: SimTime) -> Option<SimTime> {
        let mut next: Option<SimTime> = None;
        let mut consider = |t: Option<SimTime>| {
            if let Some(t) = t {
                let t = t.max(now.plus(1)).next_system_edge();
                next = Some(next.map_or(t, |n| n.min(t)));
            }
        };
        if !self.egress_queue.is_empty() {
            consider(Some(now.plus(1)));
        }
        consider(self.egress_pipe.next_ready());
        consider(self.ingress_pipe.next_ready());
        consider(self.uplink.next_delivery());
        consider(self.held.front().map(|&(r, _)| SimTime::from_system_cycles(r)));
        if let Some(start) = self.realtime_start {
            // spikes emitted on the last system edge at or before `now`
            let emitted_by = |spec: &SourceSpec| match now.ticks().checked_sub(start.ticks()) {
                Some(rel) => spec.due_by(rel - rel % TICKS_PER_SYSTEM_CYCLE),
                None => 0,
            };
            for spec in &self.sources {
                let emitted = emitted_by(spec);
                if emitted < spec.count {
                    let t = start.plus(spec.emission_tick(emitted));
                    if self.realtime_end.is_none_or(|end| t < end) {
                        consider(Some(t));
                    }
                }
            }
        }
        next
    }

    /// Routed spikes still inside this chip's egress or ingress side.
    pub fn routed_in_flight(&self) -> u64 {
        let uplink: usize = self.uplink.in_flight().map(|t| t.len()).sum();
        let held = self.held.iter().filter(|(_, e)| e.meta.origin == Origin::Routed).count();
        let ingress = self.ingress_pipe.iter().filter(|e| e.meta.origin == Origin::Routed).count();
        (self.egress_pipe.len() + self.egress_queue.len() + uplink + held + ingress) as u64
    }

    pub fn is_idle(&self) -> bool {
        self.routed_in_flight() == 0 && self.uplink.next_delivery().is_none() && self.held.is_empty()
    }

    pub fn trace(&self) -> &[TraceRecord] {
        &self.trace
    }

    pub fn take_trace(&mut self) -> Vec<TraceRecord> {
        std::mem::take(&mut self.trace)
    }

    pub fn counters(&self) -> &ChipCounters {
        &self.counters
    }

    pub fn uplink_counters(&self) -> &crate::link::LinkCounters {
        self.uplink.counters()
    }
}
