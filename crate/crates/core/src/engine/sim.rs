// SPDX-License-Identifier: Apache-2.0

//! Tick-driven simulation kernel.
//!
//! Every executed tick advances the components in one fixed order: chip
//! sources and layer-1 egress, chip-to-node links, node outbound paths, node
//! uplinks, the Aggregator, Aggregator downlinks, node inbound paths, and
//! node-to-chip links feeding the jitter buffers and trace recorders.
//! Ticks in which no component has work are skipped.

use thiserror::Error;

use super::config::SimConfig;
use super::report::{Conservation, LaneThroughput, LatencySummary, NodeReport, RunReport, REPORT_FORMAT_VERSION};
use crate::aggregator::{distribute_sync, Aggregator, BarrierFsm};
use crate::chip::Chip;
use crate::link::LinkError;
use crate::netcompiler::FabricProgram;
use crate::node::Node;
use crate::types::{NodeId, SimTime, TICK_NS};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("invalid configuration: {}", .0.join("; "))]
    Config(Vec<String>),
    #[error("simulation contract violated: {0}")]
    Link(#[from] LinkError),
}

/// Point-in-time counters for monitoring a running simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Snapshot {
    pub now: SimTime,
    pub conservation: Conservation,
    /// Loss at the layer-1 chip egress.
    pub layer1_dropped: u64,
    /// Loss at node egress, Aggregator output and node ingress queues.
    pub mgt_path_dropped: u64,
    /// Cycles with waiting entries, summed over the same queues.
    pub mgt_path_stalled: u64,
}

#[derive(Debug, Clone)]
pub struct Simulation {
    chips: Vec<Chip>,
    nodes: Vec<Node>,
    aggregator: Aggregator,
    config: SimConfig,
    /// Next tick to execute.
    now: SimTime,
    pending_sync: Vec<(SimTime, usize)>,
    quiescent: bool,
}

impl Simulation {
    pub fn new(config: &SimConfig, program: &FabricProgram) -> Result<Self, EngineError> {
        let mut errors = config.validate();
        if errors.is_empty() && program.node_count() != config.node_count {
            errors.push(format!(
                "fabric program covers {} nodes, config has {}",
                program.node_count(),
                config.node_count
            ));
        }
        if !errors.is_empty() {
            return Err(EngineError::Config(errors));
        }

        let cal = &config.calibration;
        let n = config.node_count;
        let mgt = cal.mgt_link.params();
        let mut chips = Vec::with_capacity(n);
        let mut nodes = Vec::with_capacity(n);
        for i in 0..n {
            let id = NodeId::new(i as u32).expect("node_count validated");
            let nc = config.node(i);
            chips.push(Chip::new(id, cal.chip, cal.jitter_buffer(), cal.chip_link, nc.sources.clone()));
            let start = nc.joins_barrier.then(|| SimTime::from_system_cycles(nc.barrier_request_cycle));
            let mut node = Node::new(id, cal.node, mgt, cal.chip_link, nc.playback.clone(), start);
            node.configure_luts(program.outbound[i].clone(), program.inbound[i].clone())
                .expect("nodes start outside real time");
            nodes.push(node);
        }
        let barrier = BarrierFsm::new(
            config.barrier.participant_set(n),
            config.barrier.timeout_cycles,
            config.barrier.refractory_cycles,
        );
        let aggregator = Aggregator::new(cal.aggregator, program.routes.clone(), mgt, barrier);
        Ok(Self {
            chips,
            nodes,
            aggregator,
            config: config.clone(),
            now: SimTime::ZERO,
            pending_sync: Vec::new(),
            quiescent: false,
        })
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    /// True once nothing is left to do or the tick budget is spent.
    pub fn is_finished(&self) -> bool {
        self.quiescent || self.now.ticks() >= self.config.run_ticks
    }

    fn tick(&mut self, now: SimTime) -> Result<(), EngineError> {
        let n = self.nodes.len();
        self.pending_sync.retain(|&(at, i)| {
            if at > now {
                return true;
            }
            debug_assert_eq!(at, now);
            let node = &mut self.nodes[i];
            node.observe_sync(now);
            if node.realtime_start() == Some(now) {
                self.chips[i].start_realtime(now);
                if let Some(end) = node.scheduled_end() {
                    self.chips[i].end_realtime(end);
                }
            }
            false
        });

        let mut tapped = Vec::with_capacity(n);
        for chip in &mut self.chips {
            chip.step_egress(now)?;
            tapped.push(chip.poll_uplink(now));
        }
        for (node, tap) in self.nodes.iter_mut().zip(tapped) {
            node.execute_playback(now);
            node.outbound_step(now, tap)?;
        }
        for (i, node) in self.nodes.iter_mut().enumerate() {
            if let Some(flit) = node.poll_uplink(now) {
                self.aggregator.receive(i, flit, now);
            }
        }
        let step = self.aggregator.step(now)?;
        if let Some(cycle) = step.fired {
            for (i, start) in distribute_sync(cycle, &self.config.barrier, n).into_iter().enumerate() {
                self.pending_sync.push((SimTime::from_system_cycles(start), i));
            }
        }
        for (i, (node, chip)) in self.nodes.iter_mut().zip(&mut self.chips).enumerate() {
            let rx = self.aggregator.poll_downlink(i, now);
            node.inbound_step(now, rx)?;
            chip.step_ingress(now, node.poll_downlink(now));
        }
        Ok(())
    }

    fn next_activity(&self, now: SimTime) -> Option<SimTime> {
        self.chips
            .iter()
            .filter_map(|c| c.next_activity(now))
            .chain(self.nodes.iter().filter_map(|n| n.next_activity(now)))
            .chain(self.aggregator.next_activity(now))
            .chain(self.pending_sync.iter().map(|&(t, _)| t))
            .min()
    }

    /// Executes every tick before `target` (bounded by `run_ticks`).
    pub fn advance_to(&mut self, target: SimTime) -> Result<(), EngineError> {
        let end = SimTime(target.ticks().min(self.config.run_ticks));
        while self.now < end && !self.quiescent {
            let now = self.now;
            self.tick(now)?;
            match self.next_activity(now) {
                Some(next) => {
                    debug_assert!(next > now);
                    self.now = next.min(end.max(now.plus(1)));
                }
                None => {
                    self.quiescent = true;
                    self.now = now.plus(1);
                }
            }
        }
        Ok(())
    }

    pub fn run_to_end(&mut self) -> Result<(), EngineError> {
        self.advance_to(SimTime(self.config.run_ticks))
    }

    pub fn conservation(&self) -> Conservation {
        let agg = self.aggregator.counters();
        let (agg_inputs, agg_copies) = self.aggregator.in_flight();
        let mut c = Conservation {
            unrouted: agg.unrouted,
            aggregator_dropped: agg.copies_dropped,
            replicated: agg.copies_enqueued - (agg.events_in - agg.unrouted - agg_inputs),
            in_flight: agg_inputs + agg_copies,
            ..Conservation::default()
        };
        for (chip, node) in self.chips.iter().zip(&self.nodes) {
            let cc = chip.counters();
            let nc = node.counters();
            c.generated += cc.generated;
            c.traced += cc.traced;
            c.layer1_dropped += cc.layer1_dropped;
            c.outbound_filtered += nc.outbound_filtered;
            c.egress_dropped += node.egress_event_drops();
            c.inbound_filtered += nc.inbound_filtered;
            c.ingress_dropped += node.ingress_stats().dropped;
            c.in_flight += chip.routed_in_flight() + node.routed_in_flight();
        }
        c
    }

    pub fn snapshot(&self) -> Snapshot {
        let conservation = self.conservation();
        let mut stalled = 0;
        for (i, node) in self.nodes.iter().enumerate() {
            stalled += node.egress_stats().stalled_cycles
                + node.ingress_stats().stalled_cycles
                + self.aggregator.output_stats(i).stalled_cycles;
        }
        Snapshot {
            now: self.now,
            layer1_dropped: conservation.layer1_dropped,
            mgt_path_dropped: conservation.egress_dropped
                + conservation.aggregator_dropped
                + conservation.ingress_dropped,
            mgt_path_stalled: stalled,
            conservation,
        }
    }

    pub fn finish(mut self) -> RunReport {
        let conservation = self.conservation();
        let traces: Vec<_> = self.chips.iter_mut().map(Chip::take_trace).collect();
        let records = || traces.iter().flatten();
        let latency = LatencySummary::from_ns(records().map(|r| r.latency_ticks() * TICK_NS));
        let link_latency =
            LatencySummary::from_ns(records().map(|r| (r.link_arrived_at.ticks() - r.emitted_at.ticks()) * TICK_NS));
        let nodes = (0..self.nodes.len())
            .map(|i| {
                let node = &self.nodes[i];
                NodeReport {
                    index: i,
                    realtime_start_tick: node.realtime_start().map(SimTime::ticks),
                    chip: *self.chips[i].counters(),
                    node: *node.counters(),
                    egress: *node.egress_stats(),
                    ingress: *node.ingress_stats(),
                    aggregator_output: *self.aggregator.output_stats(i),
                    uplink: LaneThroughput::from_counters(node.uplink_counters()),
                    downlink: LaneThroughput::from_counters(self.aggregator.downlink_counters(i)),
                }
            })
            .collect();
        RunReport {
            format_version: REPORT_FORMAT_VERSION,
            node_count: self.nodes.len(),
            end_tick: self.now.ticks(),
            quiescent: self.quiescent,
            nodes,
            aggregator: *self.aggregator.counters(),
            barrier: self.aggregator.barrier().counters().clone(),
            conservation,
            latency,
            link_latency,
            traces,
        }
    }
}

/// Runs `config` with routing tables `program` to completion.
pub fn run(config: &SimConfig, program: &FabricProgram) -> Result<RunReport, EngineError> {
    let mut sim = Simulation::new(config, program)?;
    sim.run_to_end()?;
    Ok(sim.finish())
}
