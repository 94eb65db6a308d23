// SPDX-License-Identifier: Apache-2.0

//! Central Aggregator: strips command words, broadcasts events to every
//! enabled output lane and runs the barrier state machine that drives the
//! out-of-band sync signal.

use serde::{Deserialize, Serialize};

use crate::flit::Flit;
use crate::link::{Link, LinkCounters, LinkError, LinkParams, SendOutcome};
use crate::pipeline::{BoundedQueue, DelayLine, QueueStats};
use crate::types::{CommandCode, MgtWord, NodeId, SimTime, MAX_NODES};

/// Source-to-destination route enables.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RouteMatrix {
    n: usize,
    rows: Vec<u16>,
}

impl RouteMatrix {
    pub fn new(node_count: usize) -> Self {
        assert!(node_count <= MAX_NODES, "at most {MAX_NODES} nodes");
        Self { n: node_count, rows: vec![0; node_count] }
    }

    pub fn all_enabled(node_count: usize) -> Self {
        let mut m = Self::new(node_count);
        let full = if node_count == 16 { u16::MAX } else { (1u16 << node_count) - 1 };
        m.rows.iter_mut().for_each(|r| *r = full);
        m
    }

    /// Bit `d` of `rows[s]` enables the route `s -> d`.
    pub fn from_rows(rows: Vec<u16>) -> Option<Self> {
        let n = rows.len();
        let mask = if n == 16 { u16::MAX } else { (1u16 << n) - 1 };
        (n <= MAX_NODES && rows.iter().all(|&r| r & !mask == 0)).then_some(Self { n, rows })
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> &[u16] {
        &self.rows
    }

    pub fn enabled(&self, src: usize, dst: usize) -> bool {
        self.rows[src] & (1 << dst) != 0
    }

    pub fn set(&mut self, src: usize, dst: usize, enable: bool) {
        if enable {
            self.rows[src] |= 1 << dst;
        } else {
            self.rows[src] &= !(1 << dst);
        }
    }

    pub fn fan_out(&self, src: usize) -> u32 {
        self.rows[src].count_ones()
    }

    pub fn destinations(&self, src: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&d| self.enabled(src, d))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AggregatorParams {
    /// Ticks for the receive and transmit clock-domain crossings together.
    pub cdc_ticks: u64,
    /// Ticks through the broadcast multiplexer and arbitration pipeline.
    pub arbitration_ticks: u64,
    /// Per-output contention queue depth in words.
    pub queue_depth: usize,
}

impl Default for AggregatorParams {
    fn default() -> Self {
        Self { cdc_ticks: 18, arbitration_ticks: 10, queue_depth: 16 }
    }
}

impl AggregatorParams {
    pub fn traversal_ticks(&self) -> u64 {
        self.cdc_ticks + self.arbitration_ticks
    }
}

/// Set of node indices as a bit mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeSet(pub u16);

impl NodeSet {
    pub fn first(n: usize) -> Self {
        Self(if n >= 16 { u16::MAX } else { (1u16 << n) - 1 })
    }

    pub fn contains(self, node: NodeId) -> bool {
        self.0 & (1 << node.index()) != 0
    }

    pub fn without(self, node: NodeId) -> Self {
        Self(self.0 & !(1 << node.index()))
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> u32 {
        self.0.count_ones()
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        (0..16).filter(move |&i| self.0 & (1 << i) != 0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BarrierParams {
    /// Participating nodes; `None` means all configured nodes.
    #[serde(default)]
    pub participants: Option<Vec<u8>>,
    pub timeout_cycles: u64,
    pub refractory_cycles: u64,
    /// Fixed delay of the sync signal from Aggregator to every node.
    pub sync_distribution_cycles: u64,
    /// Extra per-node delay of the sync signal, 0 or 1 cycle each.
    #[serde(default)]
    pub skew_cycles: Vec<u64>,
}

impl Default for BarrierParams {
    fn default() -> Self {
        Self {
            participants: None,
            timeout_cycles: 10_000,
            refractory_cycles: 1_000,
            sync_distribution_cycles: 2,
            skew_cycles: Vec::new(),
        }
    }
}

impl BarrierParams {
    pub fn validate(&self, node_count: usize) -> Result<(), String> {
        if let Some(p) = &self.participants {
            if p.is_empty() {
                return Err("barrier participants must not be empty".into());
            }
            if let Some(&bad) = p.iter().find(|&&i| usize::from(i) >= node_count) {
                return Err(format!("barrier participant {bad} outside {node_count} nodes"));
            }
        }
        if self.sync_distribution_cycles == 0 {
            return Err("sync distribution takes at least one cycle".into());
        }
        if self.skew_cycles.len() > node_count {
            return Err("more skew entries than nodes".into());
        }
        if self.skew_cycles.iter().any(|&s| s > 1) {
            return Err("sync skew is limited to 0 or 1 cycle per node".into());
        }
        Ok(())
    }

    pub fn participant_set(&self, node_count: usize) -> NodeSet {
        match &self.participants {
            None => NodeSet::first(node_count),
            Some(p) => NodeSet(p.iter().fold(0u16, |m, &i| m | (1 << i))),
        }
    }

    pub fn skew(&self, node: usize) -> u64 {
        self.skew_cycles.get(node).copied().unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BarrierState {
    Idle,
    Collecting {
        pending: NodeSet,
        since: u64,
    },
    /// The sync pulse is high during cycle `at` only.
    Fire {
        at: u64,
    },
    /// New requests are ignored until cycle `until`.
    Refractory {
        until: u64,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BarrierCounters {
    pub requests: u64,
    pub duplicate_requests: u64,
    pub ignored_non_participant: u64,
    pub ignored_refractory: u64,
    pub fire_cycles: Vec<u64>,
    pub timeout_cycles: Vec<u64>,
}

/// What happened in one barrier step.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BarrierOutput {
    pub fired: bool,
    pub timed_out: bool,
}

/// Barrier state machine, clocked in system cycles.
#[derive(Debug, Clone)]
pub struct BarrierFsm {
    participants: NodeSet,
    timeout: u64,
    refractory: u64,
    state: BarrierState,
    counters: BarrierCounters,
}

impl BarrierFsm {
    pub fn new(participants: NodeSet, timeout_cycles: u64, refractory_cycles: u64) -> Self {
        assert!(!participants.is_empty(), "barrier needs at least one participant");
        Self {
            participants,
            timeout: timeout_cycles,
            refractory: refractory_cycles,
            state: BarrierState::Idle,
            counters: BarrierCounters::default(),
        }
    }

    pub fn state(&self) -> BarrierState {
        self.state
    }

    pub fn counters(&self) -> &BarrierCounters {
        &self.counters
    }

    /// Applies transitions that fall due strictly before `cycle`, so that the
    /// machine may be stepped sparsely.
    fn settle(&mut self, cycle: u64) {
        loop {
            self.state = match self.state {
                BarrierState::Fire { at } if cycle > at => BarrierState::Refractory { until: at + 1 + self.refractory },
                BarrierState::Refractory { until } if cycle >= until => BarrierState::Idle,
                BarrierState::Collecting { since, .. } if cycle > since + self.timeout => {
                    let at = since + self.timeout;
                    self.counters.timeout_cycles.push(at);
                    BarrierState::Refractory { until: at + 1 + self.refractory }
                }
                _ => return,
            };
        }
    }

    /// Advances to `cycle` and handles the requests received in it.
    pub fn step(&mut self, cycle: u64, requests: &[NodeId]) -> BarrierOutput {
        self.settle(cycle);
        let mut out = BarrierOutput::default();
        for &node in requests {
            self.counters.requests += 1;
            if !self.participants.contains(node) {
                self.counters.ignored_non_participant += 1;
                continue;
            }
            self.state = match self.state {
                BarrierState::Idle => {
                    BarrierState::Collecting { pending: self.participants.without(node), since: cycle }
                }
                BarrierState::Collecting { pending, since } => {
                    if !pending.contains(node) {
                        self.counters.duplicate_requests += 1;
                    }
                    BarrierState::Collecting { pending: pending.without(node), since }
                }
                s @ (BarrierState::Fire { .. } | BarrierState::Refractory { .. }) => {
                    self.counters.ignored_refractory += 1;
                    s
                }
            };
        }
        if let BarrierState::Collecting { pending, since } = self.state {
            if pending.is_empty() {
                self.state = BarrierState::Fire { at: cycle };
                self.counters.fire_cycles.push(cycle);
                out.fired = true;
            } else if cycle >= since + self.timeout {
                self.counters.timeout_cycles.push(cycle);
                self.state = BarrierState::Refractory { until: cycle + 1 + self.refractory };
                out.timed_out = true;
            }
        }
        out
    }

    /// Next cycle at which the state changes without new input.
    pub fn next_deadline(&self) -> Option<u64> {
        match self.state {
            BarrierState::Idle => None,
            BarrierState::Collecting { since, .. } => Some(since + self.timeout),
            BarrierState::Fire { at } => Some(at + 1),
            BarrierState::Refractory { until } => Some(until),
        }
    }
}

/// Real-time start cycle of every node for a sync pulse fired at `fire_cycle`.
pub fn distribute_sync(fire_cycle: u64, params: &BarrierParams, node_count: usize) -> Vec<u64> {
    (0..node_count).map(|i| fire_cycle + params.sync_distribution_cycles + params.skew(i)).collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AggregatorCounters {
    pub events_in: u64,
    pub commands_in: u64,
    /// Events whose source has no enabled route.
    pub unrouted: u64,
    pub copies_enqueued: u64,
    pub copies_dropped: u64,
    pub copies_sent: u64,
}

/// Outcome of one Aggregator tick relevant to the engine.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AggregatorStep {
    /// System cycle of a sync pulse fired this tick.
    pub fired: Option<u64>,
    pub timed_out: bool,
}

#[derive(Debug, Clone)]
pub struct Aggregator {
    params: AggregatorParams,
    routes: RouteMatrix,
    inputs: Vec<DelayLine<Flit>>,
    commands: DelayLine<NodeId>,
    outputs: Vec<BoundedQueue<Flit>>,
    rr: Vec<usize>,
    downlinks: Vec<Link<Flit>>,
    barrier: BarrierFsm,
    counters: AggregatorCounters,
    ready: Vec<Vec<Flit>>,
}

impl Aggregator {
    pub fn new(params: AggregatorParams, routes: RouteMatrix, downlink: LinkParams, barrier: BarrierFsm) -> Self {
        let n = routes.node_count();
        Self {
            params,
            inputs: vec![DelayLine::default(); n],
            commands: DelayLine::default(),
            outputs: (0..n).map(|_| BoundedQueue::new(params.queue_depth)).collect(),
            rr: vec![0; n],
            downlinks: (0..n).map(|_| Link::new(downlink)).collect(),
            barrier,
            counters: AggregatorCounters::default(),
            ready: vec![Vec::new(); n],
            routes,
        }
    }

    pub fn routes(&self) -> &RouteMatrix {
        &self.routes
    }

    /// A word arriving from node `src` on its uplink.
    pub fn receive(&mut self, src: usize, flit: Flit, now: SimTime) {
        match flit.word {
            MgtWord::Event(_) => {
                self.counters.events_in += 1;
                if self.routes.fan_out(src) == 0 {
                    self.counters.unrouted += 1;
                } else {
                    self.inputs[src].push(now.plus(self.params.traversal_ticks()), flit);
                }
            }
            MgtWord::Command(code) => {
                self.counters.commands_in += 1;
                if code == CommandCode::BARRIER_REQUEST {
                    let node = NodeId::new(src as u32).expect("input lane index is a node id");
                    self.commands.push(now.plus(self.params.cdc_ticks), node);
                }
            }
            MgtWord::Pause => {}
        }
    }

    /// Arbitration, transmission and barrier handling for one tick.
    pub fn step(&mut self, now: SimTime) -> Result<AggregatorStep, LinkError> {
        let n = self.routes.node_count();
        let mut any_ready = false;
        for (input, ready) in self.inputs.iter_mut().zip(&mut self.ready) {
            while let Some(f) = input.pop_ready(now) {
                ready.push(f);
                any_ready = true;
            }
        }
        if any_ready {
            for o in 0..n {
                let mut last = None;
                for k in 0..n {
                    let i = (self.rr[o] + k) % n;
                    if self.ready[i].is_empty() || !self.routes.enabled(i, o) {
                        continue;
                    }
                    for &f in &self.ready[i] {
                        self.counters.copies_enqueued += 1;
                        if self.outputs[o].push(f, now).is_err() {
                            self.counters.copies_dropped += 1;
                        }
                    }
                    last = Some(i);
                }
                if let Some(i) = last {
                    self.rr[o] = (i + 1) % n;
                }
            }
            self.ready.iter_mut().for_each(Vec::clear);
        }
        for (queue, link) in self.outputs.iter_mut().zip(&mut self.downlinks) {
            if let Some(&head) = queue.front() {
                match link.try_send(head, now)? {
                    SendOutcome::Accepted { .. } => {
                        queue.pop();
                        self.counters.copies_sent += 1;
                    }
                    SendOutcome::BackPressured => {}
                }
            }
            if !queue.is_empty() {
                queue.note_stall(now);
            }
        }

        let mut step = AggregatorStep::default();
        if now.is_system_edge() {
            let mut requests = Vec::new();
            while let Some(node) = self.commands.pop_ready(now) {
                requests.push(node);
            }
            let due = self.barrier.next_deadline().is_some_and(|d| d <= now.system_cycle());
            if !requests.is_empty() || due {
                let out = self.barrier.step(now.system_cycle(), &requests);
                step.timed_out = out.timed_out;
                if out.fired {
                    step.fired = Some(now.system_cycle());
                }
            }
        }
        Ok(step)
    }

    pub fn poll_downlink(&mut self, dst: usize, now: SimTime) -> Option<Flit> {
        self.downlinks[dst].poll(now)
    }

    pub fn next_activity(&self, now: SimTime) -> Option<SimTime> {
        let soon = now.plus(1);
        if self.outputs.iter().any(|q| !q.is_empty()) {
            return Some(soon);
        }
        let system = |t: SimTime| t.max(soon).next_system_edge();
        self.inputs
            .iter()
            .filter_map(DelayLine::next_ready)
            .chain(self.downlinks.iter().filter_map(Link::next_delivery))
            .map(|t| t.max(soon))
            .chain(self.commands.next_ready().map(system))
            .chain(self.barrier.next_deadline().map(|c| system(SimTime::from_system_cycles(c))))
            .min()
    }

    /// Event copies still inside the Aggregator or on its downlinks, and
    /// events not yet replicated.
    pub fn in_flight(&self) -> (u64, u64) {
        let pending: usize = self.inputs.iter().map(DelayLine::len).sum();
        let queued: usize = self.outputs.iter().map(BoundedQueue::len).sum();
        let on_links: usize = self.downlinks.iter().map(Link::in_flight_len).sum();
        (pending as u64, (queued + on_links) as u64)
    }

    /// Events waiting in the input pipelines, with their pending fan-out.
    pub fn pending_fan_out(&self) -> u64 {
        self.inputs.iter().enumerate().map(|(i, line)| line.len() as u64 * u64::from(self.routes.fan_out(i))).sum()
    }

    pub fn counters(&self) -> &AggregatorCounters {
        &self.counters
    }

    pub fn barrier(&self) -> &BarrierFsm {
        &self.barrier
    }

    pub fn output_stats(&self, dst: usize) -> &QueueStats {
        self.outputs[dst].stats()
    }

    pub fn downlink_counters(&self, dst: usize) -> &LinkCounters {
        self.downlinks[dst].counters()
    }
}
