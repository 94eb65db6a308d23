// SPDX-License-Identifier: Apache-2.0

//! Node-FPGA multi-chip extension.
//!
//! Outbound, the node taps the layer-2 stream coming from its chip, drops the
//! timestamps, unpacks the groups and pushes every event through a full
//! 16-bit lookup whose top bit is the routing enable. Surviving events cross
//! into the MGT clock domain and leave one per MGT cycle.
//!
//! Inbound, every fabric label goes through a 15-to-17-bit reverse lookup
//! (again with an enable bit), gets packed, crosses back into the system
//! domain, receives the low byte of the system time and is merged with the
//! playback stream onto the chip link.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flit::{EventMeta, Flit, L2Transfer, Origin};
use crate::link::{ChipLink, ChipLinkParams, Link, LinkCounters, LinkError, LinkParams, SendOutcome};
use crate::pipeline::{BoundedQueue, DelayLine, QueueStats};
use crate::types::{
    system_time_low8, ChipLabel, CommandCode, FabricLabel, MgtWord, NodeId, SimTime, Timestamp8, TICKS_PER_SYSTEM_CYCLE,
};

const OUT_ENABLE: u16 = 0x8000;
const IN_ENABLE: u32 = 0x1_0000;

/// Chip label to fabric label table: 2^16 entries of `{enable, label[14:0]}`.
#[derive(Clone, PartialEq, Eq)]
pub struct OutboundLut {
    table: Vec<u16>,
}

impl std::fmt::Debug for OutboundLut {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let enabled = self.table.iter().filter(|&&e| e & OUT_ENABLE != 0).count();
        f.debug_struct("OutboundLut").field("enabled", &enabled).finish()
    }
}

impl Default for OutboundLut {
    fn default() -> Self {
        Self::disabled()
    }
}

impl OutboundLut {
    pub const ENTRIES: usize = 1 << 16;

    pub fn disabled() -> Self {
        Self { table: vec![0; Self::ENTRIES] }
    }

    /// Maps every label below 2^15 onto the same fabric label.
    pub fn identity() -> Self {
        let mut lut = Self::disabled();
        for l in 0..FabricLabel::COUNT {
            lut.table[l] = OUT_ENABLE | l as u16;
        }
        lut
    }

    pub fn from_raw(table: Vec<u16>) -> Option<Self> {
        (table.len() == Self::ENTRIES).then_some(Self { table })
    }

    pub fn raw(&self) -> &[u16] {
        &self.table
    }

    pub fn raw_mut(&mut self) -> &mut [u16] {
        &mut self.table
    }

    pub fn set(&mut self, label: ChipLabel, target: Option<FabricLabel>) {
        self.table[usize::from(label.get())] = target.map_or(0, |f| OUT_ENABLE | f.get());
    }

    pub fn lookup(&self, label: ChipLabel) -> Option<FabricLabel> {
        let e = self.table[usize::from(label.get())];
        (e & OUT_ENABLE != 0).then(|| FabricLabel::new(u32::from(e & !OUT_ENABLE)).expect("15-bit field"))
    }

    pub fn enabled(&self) -> impl Iterator<Item = (ChipLabel, FabricLabel)> + '_ {
        (0..Self::ENTRIES).filter_map(|l| {
            let label = ChipLabel::from_u16(l as u16);
            self.lookup(label).map(|f| (label, f))
        })
    }
}

/// Fabric label to chip label table: 2^15 entries of `{enable, label[15:0]}`.
#[derive(Clone, PartialEq, Eq)]
pub struct InboundLut {
    table: Vec<u32>,
}

impl std::fmt::Debug for InboundLut {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let enabled = self.table.iter().filter(|&&e| e & IN_ENABLE != 0).count();
        f.debug_struct("InboundLut").field("enabled", &enabled).finish()
    }
}

impl Default for InboundLut {
    fn default() -> Self {
        Self::disabled()
    }
}

impl InboundLut {
    pub const ENTRIES: usize = FabricLabel::COUNT;

    pub fn disabled() -> Self {
        Self { table: vec![0; Self::ENTRIES] }
    }

    pub fn identity() -> Self {
        Self { table: (0..Self::ENTRIES as u32).map(|l| IN_ENABLE | l).collect() }
    }

    /// Entries wider than 17 bits are rejected.
    pub fn from_raw(table: Vec<u32>) -> Option<Self> {
        (table.len() == Self::ENTRIES && table.iter().all(|&e| e < (1 << 17))).then_some(Self { table })
    }

    pub fn raw(&self) -> &[u32] {
        &self.table
    }

    pub fn raw_mut(&mut self) -> &mut [u32] {
        &mut self.table
    }

    pub fn set(&mut self, label: FabricLabel, target: Option<ChipLabel>) {
        self.table[label.index()] = target.map_or(0, |l| IN_ENABLE | u32::from(l.get()));
    }

    pub fn lookup(&self, label: FabricLabel) -> Option<ChipLabel> {
        let e = self.table[label.index()];
        (e & IN_ENABLE != 0).then(|| ChipLabel::from_u16((e & 0xFFFF) as u16))
    }

    pub fn enabled(&self) -> impl Iterator<Item = (FabricLabel, ChipLabel)> + '_ {
        (0..Self::ENTRIES).filter_map(|f| {
            let label = FabricLabel::new(f as u32).expect("index below 2^15");
            self.lookup(label).map(|l| (label, l))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NodeParams {
    /// System cycles for the system-to-MGT clock-domain crossing.
    pub cdc_out_cycles: u64,
    /// System cycles for the MGT-to-system clock-domain crossing.
    pub cdc_in_cycles: u64,
    /// MGT cycles through the Block-RAM lookup, per direction.
    pub lut_pipeline_cycles: u64,
    /// System cycles an open packing group waits for more events.
    pub pack_latency_cycles: u64,
    pub egress_depth: usize,
    pub ingress_depth: usize,
    /// Playback events win ties against routed events on the chip link.
    pub playback_priority: bool,
}

impl Default for NodeParams {
    fn default() -> Self {
        Self {
            cdc_out_cycles: 5,
            cdc_in_cycles: 5,
            lut_pipeline_cycles: 5,
            pack_latency_cycles: 3,
            egress_depth: 16,
            ingress_depth: 16,
            playback_priority: true,
        }
    }
}

impl NodeParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.egress_depth == 0 || self.ingress_depth == 0 {
            return Err("node queue depths must be >= 1".into());
        }
        Ok(())
    }

    /// Ticks from layer-2 tap to MGT transmit for an uncontended event.
    pub fn outbound_ticks(&self) -> u64 {
        self.cdc_out_cycles * TICKS_PER_SYSTEM_CYCLE + self.lut_pipeline_cycles
    }

    /// Ticks from MGT receive to the system-domain hand-off for a lone event
    /// arriving at tick `arrival`.
    pub fn inbound_exit(&self, arrival: SimTime) -> SimTime {
        let packed = arrival.plus(self.lut_pipeline_cycles + self.pack_latency_cycles * TICKS_PER_SYSTEM_CYCLE);
        packed.plus(self.cdc_in_cycles * TICKS_PER_SYSTEM_CYCLE).next_system_edge()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum PlaybackCommand {
    BarrierSync,
    /// Spikes sent to the local chip `at_cycle` system cycles after the synchronized start.
    EmitSpikes {
        at_cycle: u64,
        labels: Vec<ChipLabel>,
    },
    EndOfRealtime {
        at_cycle: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlaybackError {
    #[error("playback program must start with a barrier sync")]
    MissingBarrier,
    #[error("playback program has more than one barrier sync (command {0})")]
    ExtraBarrier(usize),
    #[error("playback command {0} goes back in time")]
    NotMonotonic(usize),
    #[error("playback command {0} emits {1} spikes, a group holds 1 to 3")]
    GroupSize(usize, usize),
    #[error("end of real-time section must be the last command")]
    EndNotLast,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<PlaybackCommand>", into = "Vec<PlaybackCommand>")]
pub struct PlaybackProgram {
    commands: Vec<PlaybackCommand>,
}

impl PlaybackProgram {
    pub fn new(commands: Vec<PlaybackCommand>) -> Result<Self, PlaybackError> {
        let program = Self { commands };
        program.validate()?;
        Ok(program)
    }

    /// A program that only synchronizes and then runs for the rest of the simulation.
    pub fn barrier_only() -> Self {
        Self { commands: vec![PlaybackCommand::BarrierSync] }
    }

    pub fn commands(&self) -> &[PlaybackCommand] {
        &self.commands
    }

    pub fn validate(&self) -> Result<(), PlaybackError> {
        if self.commands.first() != Some(&PlaybackCommand::BarrierSync) {
            return Err(PlaybackError::MissingBarrier);
        }
        let mut last = 0;
        for (i, cmd) in self.commands.iter().enumerate().skip(1) {
            let at = match cmd {
                PlaybackCommand::BarrierSync => return Err(PlaybackError::ExtraBarrier(i)),
                PlaybackCommand::EmitSpikes { at_cycle, labels } => {
                    if labels.is_empty() || labels.len() > 3 {
                        return Err(PlaybackError::GroupSize(i, labels.len()));
                    }
                    *at_cycle
                }
                PlaybackCommand::EndOfRealtime { at_cycle } => {
                    if i + 1 != self.commands.len() {
                        return Err(PlaybackError::EndNotLast);
                    }
                    *at_cycle
                }
            };
            if at < last {
                return Err(PlaybackError::NotMonotonic(i));
            }
            last = at;
        }
        Ok(())
    }
}

impl TryFrom<Vec<PlaybackCommand>> for PlaybackProgram {
    type Error = PlaybackError;

    fn try_from(commands: Vec<PlaybackCommand>) -> Result<Self, Self::Error> {
        Self::new(commands)
    }
}

impl From<PlaybackProgram> for Vec<PlaybackCommand> {
    fn from(p: PlaybackProgram) -> Self {
        p.commands
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NodeError {
    #[error("node {0}: lookup tables cannot be replaced during the real-time section")]
    ReconfigureDuringRealtime(NodeId),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeCounters {
    pub tapped: u64,
    pub outbound_filtered: u64,
    pub transmitted_events: u64,
    pub commands_sent: u64,
    pub commands_dropped: u64,
    pub inbound_received: u64,
    pub inbound_filtered: u64,
    pub packed_groups: u64,
    pub routed_to_chip: u64,
    pub playback_to_chip: u64,
    pub playback_stalls: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    /// Playback not started yet.
    Idle,
    /// Barrier request sent, waiting for the external sync signal.
    WaitingSync,
    Realtime {
        start: SimTime,
    },
    Finished {
        start: SimTime,
        end: SimTime,
    },
}

/// Things the engine must act on after a node step.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NodeSignals {
    pub end_of_realtime: Option<SimTime>,
}

#[derive(Debug, Clone, Copy)]
struct Inbound {
    label: ChipLabel,
    meta: EventMeta,
}

#[derive(Debug, Clone)]
pub struct Node {
    id: NodeId,
    params: NodeParams,
    out_lut: OutboundLut,
    in_lut: InboundLut,

    program: PlaybackProgram,
    playback_start: Option<SimTime>,
    pc: usize,
    phase: Phase,

    cdc_out: DelayLine<(ChipLabel, EventMeta)>,
    lut_out: DelayLine<Flit>,
    egress: BoundedQueue<Flit>,
    uplink: Link<Flit>,

    lut_in: DelayLine<Inbound>,
    packer: Option<(SimTime, Vec<Inbound>)>,
    cdc_in: DelayLine<Vec<Inbound>>,
    ingress: BoundedQueue<(Inbound, Timestamp8)>,
    playback_due: VecDeque<Vec<ChipLabel>>,
    downlink: ChipLink<L2Transfer>,

    counters: NodeCounters,
}

impl Node {
    /// `playback_start` is when the node begins executing its playback
    /// program; `None` models a node that never reaches its barrier.
    pub fn new(
        id: NodeId,
        params: NodeParams,
        uplink: LinkParams,
        chip_link: ChipLinkParams,
        program: PlaybackProgram,
        playback_start: Option<SimTime>,
    ) -> Self {
        Self {
            id,
            params,
            out_lut: OutboundLut::disabled(),
            in_lut: InboundLut::disabled(),
            program,
            playback_start,
            pc: 0,
            phase: Phase::Idle,
            cdc_out: DelayLine::default(),
            lut_out: DelayLine::default(),
            egress: BoundedQueue::new(params.egress_depth),
            uplink: Link::new(uplink),
            lut_in: DelayLine::default(),
            packer: None,
            cdc_in: DelayLine::default(),
            ingress: BoundedQueue::new(params.ingress_depth),
            playback_due: VecDeque::new(),
            downlink: ChipLink::new(chip_link),
            counters: NodeCounters::default(),
        }
    }

    pub fn id(&self) -> NodeId {
        self.id
    }

    pub fn params(&self) -> &NodeParams {
        &self.params
    }

    pub fn in_realtime(&self) -> bool {
        matches!(self.phase, Phase::Realtime { .. })
    }

    /// End of the real-time section as programmed, once the start is known.
    pub fn scheduled_end(&self) -> Option<SimTime> {
        let start = self.realtime_start()?;
        self.program.commands().iter().find_map(|c| match c {
            PlaybackCommand::EndOfRealtime { at_cycle } => Some(start.plus(at_cycle * TICKS_PER_SYSTEM_CYCLE)),
            _ => None,
        })
    }

    pub fn realtime_start(&self) -> Option<SimTime> {
        match self.phase {
            Phase::Realtime { start } | Phase::Finished { start, .. } => Some(start),
            _ => None,
        }
    }

    pub fn configure_luts(&mut self, out: OutboundLut, inbound: InboundLut) -> Result<(), NodeError> {
        if self.in_realtime() {
            return Err(NodeError::ReconfigureDuringRealtime(self.id));
        }
        self.out_lut = out;
        self.in_lut = inbound;
        Ok(())
    }

    pub fn luts(&self) -> (&OutboundLut, &InboundLut) {
        (&self.out_lut, &self.in_lut)
    }

    /// The external sync signal reached this node.
    pub fn observe_sync(&mut self, now: SimTime) {
        if self.phase == Phase::WaitingSync {
            debug_assert!(now.is_system_edge());
            self.phase = Phase::Realtime { start: now };
            self.pc = 1;
        }
    }

    /// Playback execution for one tick: issues the barrier request and, once
    /// synchronized, queues due spike groups for the chip link.
    pub fn execute_playback(&mut self, now: SimTime) -> NodeSignals {
        let mut signals = NodeSignals::default();
        if !now.is_system_edge() {
            return signals;
        }
        match self.phase {
            Phase::Idle => {
                if self.playback_start.is_some_and(|t| now >= t) {
                    let flit = Flit { word: MgtWord::Command(CommandCode::BARRIER_REQUEST), emitted_at: now };
                    match self.egress.push(flit, now) {
                        Ok(()) => self.counters.commands_sent += 1,
                        Err(_) => self.counters.commands_dropped += 1,
                    }
                    self.phase = Phase::WaitingSync;
                }
            }
            Phase::Realtime { start } => {
                while let Some(cmd) = self.program.commands().get(self.pc) {
                    match cmd {
                        PlaybackCommand::EmitSpikes { at_cycle, labels } => {
                            if now < start.plus(at_cycle * TICKS_PER_SYSTEM_CYCLE) {
                                break;
                            }
                            self.playback_due.push_back(labels.clone());
                        }
                        PlaybackCommand::EndOfRealtime { at_cycle } => {
                            let end = start.plus(at_cycle * TICKS_PER_SYSTEM_CYCLE);
                            if now < end {
                                break;
                            }
                            self.phase = Phase::Finished { start, end };
                            signals.end_of_realtime = Some(end);
                        }
                        PlaybackCommand::BarrierSync => unreachable!("validated: barrier only at index 0"),
                    }
                    self.pc += 1;
                }
            }
            Phase::WaitingSync | Phase::Finished { .. } => {}
        }
        signals
    }

    /// Outbound path for one tick. `tapped` is the layer-2 transfer arriving
    /// from the chip, if any.
    pub fn outbound_step(&mut self, now: SimTime, tapped: Option<L2Transfer>) -> Result<(), LinkError> {
        if let Some(transfer) = tapped {
            let ready = now.plus(self.params.cdc_out_cycles * TICKS_PER_SYSTEM_CYCLE);
            for (label, _ts, meta) in transfer.events() {
                self.counters.tapped += 1;
                self.cdc_out.push(ready, (label, meta));
            }
        }
        // MGT domain: one event per cycle.
        if let Some((label, meta)) = self.cdc_out.pop_ready(now) {
            match self.out_lut.lookup(label) {
                Some(f) => self.lut_out.push(
                    now.plus(self.params.lut_pipeline_cycles),
                    Flit { word: MgtWord::Event(f), emitted_at: meta.emitted_at },
                ),
                None => self.counters.outbound_filtered += 1,
            }
        }
        while let Some(flit) = self.lut_out.pop_ready(now) {
            // overflow is counted inside the queue
            let _ = self.egress.push(flit, now);
        }
        if let Some(&head) = self.egress.front() {
            match self.uplink.try_send(head, now)? {
                SendOutcome::Accepted { .. } => {
                    self.egress.pop();
                    if head.is_event() {
                        self.counters.transmitted_events += 1;
                    }
                }
                SendOutcome::BackPressured => {}
            }
        }
        if !self.egress.is_empty() {
            self.egress.note_stall(now);
        }
        Ok(())
    }

    pub fn poll_uplink(&mut self, now: SimTime) -> Option<Flit> {
        self.uplink.poll(now)
    }

    /// Inbound path for one tick. `received` is the word coming from the
    /// Aggregator, if any.
    pub fn inbound_step(&mut self, now: SimTime, received: Option<Flit>) -> Result<(), LinkError> {
        if let Some(flit) = received {
            if let MgtWord::Event(f) = flit.word {
                self.counters.inbound_received += 1;
                match self.in_lut.lookup(f) {
                    Some(label) => {
                        let meta = EventMeta { emitted_at: flit.emitted_at, origin: Origin::Routed };
                        self.lut_in.push(now.plus(self.params.lut_pipeline_cycles), Inbound { label, meta });
                    }
                    None => self.counters.inbound_filtered += 1,
                }
            }
        }

        let window = self.params.pack_latency_cycles * TICKS_PER_SYSTEM_CYCLE;
        if self.packer.as_ref().is_some_and(|(opened, _)| now >= opened.plus(window)) {
            self.flush_packer(now);
        }
        while let Some(ev) = self.lut_in.pop_ready(now) {
            let (_, group) = self.packer.get_or_insert_with(|| (now, Vec::with_capacity(3)));
            group.push(ev);
            if group.len() == 3 || window == 0 {
                self.flush_packer(now);
            }
        }

        if !now.is_system_edge() {
            return Ok(());
        }
        let ts = system_time_low8(now);
        while let Some(group) = self.cdc_in.pop_ready(now) {
            for ev in group {
                let _ = self.ingress.push((ev, ts), now);
            }
        }
        self.transmit_to_chip(now)
    }

    fn flush_packer(&mut self, now: SimTime) {
        if let Some((_, group)) = self.packer.take() {
            self.counters.packed_groups += 1;
            self.cdc_in.push(now.plus(self.params.cdc_in_cycles * TICKS_PER_SYSTEM_CYCLE), group);
        }
    }

    fn transmit_to_chip(&mut self, now: SimTime) -> Result<(), LinkError> {
        if self.playback_due.is_empty() && self.ingress.is_empty() {
            return Ok(());
        }
        let cap = self.downlink.capacity(now) as usize;
        let ts = system_time_low8(now);
        let mut batch: Vec<(ChipLabel, Timestamp8, EventMeta)> = Vec::with_capacity(3);
        let playback = EventMeta { emitted_at: now, origin: Origin::Playback };

        let take_playback = |batch: &mut Vec<_>, due: &mut VecDeque<Vec<ChipLabel>>| {
            while let Some(group) = due.front() {
                if batch.len() + group.len() > cap {
                    return true;
                }
                batch.extend(group.iter().map(|&l| (l, ts, playback)));
                due.pop_front();
            }
            false
        };
        let take_routed = |batch: &mut Vec<_>, q: &mut BoundedQueue<(Inbound, Timestamp8)>| {
            while batch.len() < cap {
                match q.pop() {
                    Some((ev, ev_ts)) => batch.push((ev.label, ev_ts, ev.meta)),
                    None => break,
                }
            }
        };

        let playback_stalled = if self.params.playback_priority {
            let stalled = take_playback(&mut batch, &mut self.playback_due);
            if !stalled {
                take_routed(&mut batch, &mut self.ingress);
            }
            stalled
        } else {
            take_routed(&mut batch, &mut self.ingress);
            take_playback(&mut batch, &mut self.playback_due)
        };
        if playback_stalled {
            self.counters.playback_stalls += 1;
        }
        if !self.ingress.is_empty() {
            self.ingress.note_stall(now);
        }
        if batch.is_empty() {
            return Ok(());
        }
        for (_, _, meta) in &batch {
            match meta.origin {
                Origin::Routed => self.counters.routed_to_chip += 1,
                Origin::Playback => self.counters.playback_to_chip += 1,
            }
        }
        let n = batch.len() as u32;
        self.downlink.send(L2Transfer::new(&batch), n, now)?;
        Ok(())
    }

    pub fn poll_downlink(&mut self, now: SimTime) -> Option<L2Transfer> {
        self.downlink.poll(now)
    }

    /// Earliest future tick at which this node has work to do.
    pub fn next_activity(&self, now: SimTime) -> Option<SimTime> {
        let soon = now.plus(1);
        let busy = !self.egress.is_empty()
            || self.cdc_out.next_ready().is_some_and(|t| t <= now)
            || self.lut_in.next_ready().is_some_and(|t| t <= now);
        if busy {
            return Some(soon);
        }
        let mut next: Option<SimTime> = None;
        let mut consider = |t: Option<SimTime>, system: bool| {
            if let Some(t) = t {
                let mut t = t.max(soon);
                if system {
                    t = t.next_system_edge();
                }
                next = Some(next.map_or(t, |n| n.min(t)));
            }
        };
        if !self.ingress.is_empty() || !self.playback_due.is_empty() {
            consider(Some(soon), true);
        }
        consider(self.cdc_out.next_ready(), false);
        consider(self.lut_out.next_ready(), false);
        consider(self.uplink.next_delivery(), false);
        consider(self.lut_in.next_ready(), false);
        let window = self.params.pack_latency_cycles * TICKS_PER_SYSTEM_CYCLE;
        consider(self.packer.as_ref().map(|(opened, _)| opened.plus(window)), false);
        consider(self.cdc_in.next_ready(), true);
        consider(self.downlink.next_delivery(), false);
        match self.phase {
            Phase::Idle => consider(self.playback_start, true),
            Phase::Realtime { start } => {
                if let Some(
                    PlaybackCommand::EmitSpikes { at_cycle, .. } | PlaybackCommand::EndOfRealtime { at_cycle },
                ) = self.program.commands().get(self.pc)
                {
                    consider(Some(start.plus(at_cycle * TICKS_PER_SYSTEM_CYCLE)), true)
                }
            }
            _ => {}
        }
        next
    }

    /// Routed events currently buffered anywhere inside the node or on its
    /// outgoing links.
    pub fn routed_in_flight(&self) -> u64 {
        let uplink = self.uplink.in_flight().filter(|f| f.is_event()).count();
        let egress = self.egress.iter().filter(|f| f.is_event()).count();
        let packer = self.packer.as_ref().map_or(0, |(_, g)| g.len());
        let cdc_in: usize = self.cdc_in.iter().map(Vec::len).sum();
        let downlink: usize =
            self.downlink.in_flight().map(|t| t.meta().iter().filter(|m| m.origin == Origin::Routed).count()).sum();
        (self.cdc_out.len()
            + self.lut_out.len()
            + egress
            + uplink
            + self.lut_in.len()
            + packer
            + cdc_in
            + self.ingress.len()
            + downlink) as u64
    }

    pub fn is_waiting_for_sync(&self) -> bool {
        self.phase == Phase::WaitingSync
    }

    pub fn counters(&self) -> &NodeCounters {
        &self.counters
    }

    /// Events (not commands) lost at the full egress queue.
    pub fn egress_event_drops(&self) -> u64 {
        self.egress.stats().dropped - self.counters.commands_dropped
    }

    pub fn egress_stats(&self) -> &QueueStats {
        self.egress.stats()
    }

    pub fn ingress_stats(&self) -> &QueueStats {
        self.ingress.stats()
    }

    pub fn uplink_counters(&self) -> &LinkCounters {
        self.uplink.counters()
    }

    pub fn downlink_counters(&self) -> &LinkCounters {
        self.downlink.counters()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn node(params: NodeParams) -> Node {
        let mut n = Node::new(
            NodeId::new(0).unwrap(),
            params,
            LinkParams { latency_ticks: 1, clock_compensation: None },
            ChipLinkParams::default(),
            PlaybackProgram::barrier_only(),
            None,
        );
        n.configure_luts(OutboundLut::disabled(), InboundLut::disabled()).unwrap();
        n
    }

    fn tap(labels: &[u16], ts: u8) -> L2Transfer {
        let meta = EventMeta { emitted_at: SimTime(0), origin: Origin::Routed };
        let events: Vec<_> = labels.iter().map(|&l| (ChipLabel::from_u16(l), Timestamp8(ts), meta)).collect();
        L2Transfer::new(&events)
    }

    /// Runs the outbound path and returns (tick, word) pairs put on the uplink.
    fn run_outbound(n: &mut Node, inputs: &[(u64, L2Transfer)], until: u64) -> Vec<(u64, MgtWord)> {
        let mut sent = Vec::new();
        for t in 0..until {
            let now = SimTime(t);
            let tapped = inputs.iter().find(|(at, _)| *at == t).map(|(_, g)| g.clone());
            let before = n.uplink.counters().accepted;
            n.outbound_step(now, tapped).unwrap();
            if n.uplink.counters().accepted > before {
                sent.push((t, n.uplink.in_flight().last().unwrap().word));
            }
        }
        sent
    }

    #[test]
    fn lut_entry_layouts() {
        let mut out = OutboundLut::disabled();
        out.set(ChipLabel::from_u16(5), Some(FabricLabel::new(12).unwrap()));
        assert_eq!(out.raw()[5], 0x800C);
        assert_eq!(out.lookup(ChipLabel::from_u16(5)), Some(FabricLabel::new(12).unwrap()));
        assert_eq!(out.lookup(ChipLabel::from_u16(6)), None);
        let mut inb = InboundLut::disabled();
        inb.set(FabricLabel::new(12).unwrap(), Some(ChipLabel::from_u16(300)));
        assert_eq!(inb.raw()[12], 0x1_012C);
        // a disabled entry is ignored whatever its label bits hold
        let mut raw = OutboundLut::disabled();
        raw.raw_mut()[7] = 0x7FFF;
        assert_eq!(raw.lookup(ChipLabel::from_u16(7)), None);
        assert_eq!(OutboundLut::identity().lookup(ChipLabel::from_u16(40000)), None);
        assert_eq!(InboundLut::identity().enabled().count(), 1 << 15);
    }

    #[test]
    fn disabled_lut_blocks_all_traffic() {
        let mut n = node(NodeParams::default());
        let sent = run_outbound(&mut n, &[(0, tap(&[1, 2, 3], 0)), (2, tap(&[9], 0))], 100);
        assert!(sent.is_empty());
        assert_eq!(n.counters().outbound_filtered, 4);
    }

    #[test]
    fn outbound_delay_matches_pipeline_sum() {
        let params = NodeParams::default();
        let mut n = node(params);
        let mut out = OutboundLut::disabled();
        out.set(ChipLabel::from_u16(5), Some(FabricLabel::new(12).unwrap()));
        n.configure_luts(out, InboundLut::disabled()).unwrap();
        let sent = run_outbound(&mut n, &[(10, tap(&[5], 0))], 100);
        // cdc_out x 2 + lut pipeline ticks
        let expected = 10 + params.cdc_out_cycles * 2 + params.lut_pipeline_cycles;
        assert_eq!(sent, vec![(expected, MgtWord::Event(FabricLabel::new(12).unwrap()))]);
        assert_eq!(params.outbound_ticks(), expected - 10);
    }

    #[test]
    fn group_of_three_leaves_on_consecutive_mgt_cycles() {
        let mut n = node(NodeParams::default());
        n.configure_luts(OutboundLut::identity(), InboundLut::disabled()).unwrap();
        let sent = run_outbound(&mut n, &[(0, tap(&[1, 2, 3], 0))], 100);
        let ticks: Vec<u64> = sent.iter().map(|&(t, _)| t).collect();
        assert_eq!(ticks, vec![15, 16, 17]);
        let labels: Vec<_> = sent.iter().map(|&(_, w)| w).collect();
        assert_eq!(labels, (1..=3).map(|l| MgtWord::Event(FabricLabel::new(l).unwrap())).collect::<Vec<_>>());
    }

    fn inbound_word(f: u16) -> Flit {
        Flit { word: MgtWord::Event(FabricLabel::new(f.into()).unwrap()), emitted_at: SimTime(0) }
    }

    /// Runs the inbound path and returns (tick, transfer) pairs sent to the chip.
    fn run_inbound(n: &mut Node, inputs: &[(u64, Flit)], until: u64) -> Vec<(u64, L2Transfer)> {
        let mut out = Vec::new();
        for t in 0..until {
            let now = SimTime(t);
            let rx = inputs.iter().find(|(at, _)| *at == t).map(|&(_, f)| f);
            n.inbound_step(now, rx).unwrap();
            if let Some(g) = n.poll_downlink(now) {
                out.push((t - ChipLinkParams::default().latency_ticks, g));
            }
        }
        out
    }

    #[test]
    fn inbound_lookup_pack_and_timestamp() {
        let params = NodeParams::default();
        let mut n = node(params);
        let mut inb = InboundLut::disabled();
        inb.set(FabricLabel::new(12).unwrap(), Some(ChipLabel::from_u16(300)));
        n.configure_luts(OutboundLut::disabled(), inb).unwrap();
        let out = run_inbound(&mut n, &[(101, inbound_word(12))], 400);
        assert_eq!(out.len(), 1);
        let (sent_at, g) = &out[0];
        // Pipeline-sum oracle: lut 5 -> 106, pack window 6 -> 112, cdc_in 10 -> 122 (system edge).
        assert_eq!(*sent_at, 122);
        assert_eq!(params.inbound_exit(SimTime(101)), SimTime(122));
        assert_eq!(g.group().entries(), &[(ChipLabel::from_u16(300), system_time_low8(SimTime(122)))]);
    }

    #[test]
    fn inbound_disabled_entry_is_filtered() {
        let mut n = node(NodeParams::default());
        let out = run_inbound(&mut n, &[(4, inbound_word(12))], 200);
        assert!(out.is_empty());
        assert_eq!(n.counters().inbound_filtered, 1);
    }

    #[test]
    fn three_consecutive_words_become_one_group() {
        let mut n = node(NodeParams::default());
        n.configure_luts(OutboundLut::disabled(), InboundLut::identity()).unwrap();
        let inputs = [(20, inbound_word(1)), (21, inbound_word(2)), (22, inbound_word(3))];
        let out = run_inbound(&mut n, &inputs, 300);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].1.len(), 3);
        assert_eq!(n.counters().packed_groups, 1);
    }

    #[test]
    fn playback_program_validation() {
        use PlaybackCommand::*;
        assert_eq!(PlaybackProgram::new(vec![]), Err(PlaybackError::MissingBarrier));
        assert_eq!(PlaybackProgram::new(vec![BarrierSync, BarrierSync]), Err(PlaybackError::ExtraBarrier(1)));
        let l = vec![ChipLabel::from_u16(1)];
        assert_eq!(
            PlaybackProgram::new(vec![
                BarrierSync,
                EmitSpikes { at_cycle: 5, labels: l.clone() },
                EmitSpikes { at_cycle: 4, labels: l.clone() }
            ]),
            Err(PlaybackError::NotMonotonic(2))
        );
        assert_eq!(
            PlaybackProgram::new(vec![
                BarrierSync,
                EndOfRealtime { at_cycle: 1 },
                EmitSpikes { at_cycle: 2, labels: l }
            ]),
            Err(PlaybackError::EndNotLast)
        );
        assert_eq!(
            PlaybackProgram::new(vec![BarrierSync, EmitSpikes { at_cycle: 0, labels: vec![] }]),
            Err(PlaybackError::GroupSize(1, 0))
        );
    }

    fn playback_node(commands: Vec<PlaybackCommand>) -> Node {
        Node::new(
            NodeId::new(0).unwrap(),
            NodeParams::default(),
            LinkParams { latency_ticks: 1, clock_compensation: None },
            ChipLinkParams::default(),
            PlaybackProgram::new(commands).unwrap(),
            Some(SimTime(0)),
        )
    }

    fn drive_playback(n: &mut Node, sync_at: u64, until: u64) -> (Vec<(u64, L2Transfer)>, Option<SimTime>) {
        let mut out = Vec::new();
        let mut end = None;
        for t in 0..until {
            let now = SimTime(t);
            if t == sync_at {
                n.observe_sync(now);
            }
            if let Some(e) = n.execute_playback(now).end_of_realtime {
                end = Some(e);
            }
            n.outbound_step(now, None).unwrap();
            n.inbound_step(now, None).unwrap();
            if let Some(g) = n.poll_downlink(now) {
                out.push((t - ChipLinkParams::default().latency_ticks, g));
            }
        }
        (out, end)
    }

    #[test]
    fn barrier_then_end_emits_nothing() {
        let mut n = playback_node(vec![PlaybackCommand::BarrierSync, PlaybackCommand::EndOfRealtime { at_cycle: 0 }]);
        let (out, end) = drive_playback(&mut n, 40, 200);
        assert!(out.is_empty());
        assert_eq!(end, Some(SimTime(40)));
        assert_eq!(n.counters().commands_sent, 1);
        assert_eq!(n.uplink_counters().accepted, 1);
    }

    #[test]
    fn playback_emits_relative_to_sync() {
        let labels = vec![ChipLabel::from_u16(7)];
        let mut n =
            playback_node(vec![PlaybackCommand::BarrierSync, PlaybackCommand::EmitSpikes { at_cycle: 100, labels }]);
        let (out, _) = drive_playback(&mut n, 40, 600);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].0, 40 + 2 * 100);
    }

    #[test]
    fn oversized_playback_cycle_stalls_second_group() {
        let two = vec![ChipLabel::from_u16(1), ChipLabel::from_u16(2)];
        let mut n = playback_node(vec![
            PlaybackCommand::BarrierSync,
            PlaybackCommand::EmitSpikes { at_cycle: 10, labels: two.clone() },
            PlaybackCommand::EmitSpikes { at_cycle: 10, labels: two },
        ]);
        let (out, _) = drive_playback(&mut n, 40, 400);
        let times: Vec<u64> = out.iter().map(|(t, _)| *t).collect();
        assert_eq!(times, vec![60, 62]);
        assert_eq!(n.counters().playback_stalls, 1);
    }

    #[test]
    fn reconfiguration_rejected_during_realtime() {
        let mut n = playback_node(vec![PlaybackCommand::BarrierSync]);
        n.execute_playback(SimTime(0));
        n.observe_sync(SimTime(10));
        assert_eq!(
            n.configure_luts(OutboundLut::identity(), InboundLut::identity()),
            Err(NodeError::ReconfigureDuringRealtime(NodeId::new(0).unwrap()))
        );
    }
}
