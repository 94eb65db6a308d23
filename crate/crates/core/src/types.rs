// SPDX-License-Identifier: Apache-2.0

//! Shared domain vocabulary: labels, times, MGT words and node identifiers.
//!
//! Simulation time is counted in 4 ns ticks, the period of the 250 MHz
//! transceiver user clock. The 125 MHz system clock advances on every even
//! tick.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Duration of one simulation tick in nanoseconds.
pub const TICK_NS: u64 = 4;
/// Ticks per system clock cycle (8 ns).
pub const TICKS_PER_SYSTEM_CYCLE: u64 = 2;
/// Upper bound on the number of Aggregator lanes (12 backplane nodes + 4 extension lanes).
pub const MAX_NODES: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RangeError {
    #[error("chip label {0} does not fit in 16 bits")]
    ChipLabel(u64),
    #[error("fabric label {0} does not fit in 15 bits")]
    FabricLabel(u64),
    #[error("timestamp {0} does not fit in 8 bits")]
    Timestamp(u64),
    #[error("command code {0:#x} does not fit in 15 bits")]
    CommandCode(u64),
    #[error("node index {0} is out of range (max {max})", max = MAX_NODES - 1)]
    Node(u64),
    #[error("layer-2 group must hold 1 to 3 entries, got {0}")]
    GroupSize(usize),
}

/// 16-bit spike label in the address space of a chip.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct ChipLabel(u16);

impl ChipLabel {
    pub const MAX: u32 = u16::MAX as u32;

    pub fn new(value: u32) -> Result<Self, RangeError> {
        u16::try_from(value).map(Self).map_err(|_| RangeError::ChipLabel(value.into()))
    }

    pub const fn from_u16(value: u16) -> Self {
        Self(value)
    }

    pub const fn get(self) -> u16 {
        self.0
    }
}

impl TryFrom<u32> for ChipLabel {
    type Error = RangeError;
    fn try_from(value: u32) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<ChipLabel> for u32 {
    fn from(label: ChipLabel) -> Self {
        label.0.into()
    }
}

impl fmt::Display for ChipLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// 15-bit spike label on the Aggregator fabric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct FabricLabel(u16);

impl FabricLabel {
    pub const BITS: u32 = 15;
    pub const COUNT: usize = 1 << Self::BITS;
    pub const MAX: u16 = (1 << Self::BITS) - 1;

    pub fn new(value: u32) -> Result<Self, RangeError> {
        if value <= u32::from(Self::MAX) {
            Ok(Self(value as u16))
        } else {
            Err(RangeError::FabricLabel(value.into()))
        }
    }

    pub const fn get(self) -> u16 {
        self.0
    }

    pub const fn index(self) -> usize {
        self.0 as usize
    }
}

impl TryFrom<u32> for FabricLabel {
    type Error = RangeError;
    fn try_from(value: u32) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<FabricLabel> for u32 {
    fn from(label: FabricLabel) -> Self {
        label.0.into()
    }
}

impl fmt::Display for FabricLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Lower eight bits of the system-clock cycle counter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct Timestamp8(pub u8);

impl Timestamp8 {
    pub fn new(value: u32) -> Result<Self, RangeError> {
        u8::try_from(value).map(Self).map_err(|_| RangeError::Timestamp(value.into()))
    }

    pub const fn get(self) -> u8 {
        self.0
    }
}

/// Absolute simulation time in 4 ns ticks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SimTime(pub u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    pub const fn ticks(self) -> u64 {
        self.0
    }

    pub const fn from_system_cycles(cycles: u64) -> Self {
        Self(cycles * TICKS_PER_SYSTEM_CYCLE)
    }

    /// Whether the system clock has an edge on this tick.
    pub const fn is_system_edge(self) -> bool {
        self.0 % TICKS_PER_SYSTEM_CYCLE == 0
    }

    /// Index of the system cycle this tick falls into.
    pub const fn system_cycle(self) -> u64 {
        self.0 / TICKS_PER_SYSTEM_CYCLE
    }

    /// First system-clock edge at or after this tick.
    pub const fn next_system_edge(self) -> SimTime {
        SimTime(self.0.div_ceil(TICKS_PER_SYSTEM_CYCLE) * TICKS_PER_SYSTEM_CYCLE)
    }

    pub const fn as_ns(self) -> u64 {
        self.0 * TICK_NS
    }

    pub const fn plus(self, ticks: u64) -> SimTime {
        SimTime(self.0 + ticks)
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ns", self.as_ns())
    }
}

/// Low byte of the system time, as attached to layer-2 events.
pub fn system_time_low8(t: SimTime) -> Timestamp8 {
    Timestamp8((t.system_cycle() % 256) as u8)
}

/// A spike leaving a source neuron. `emitted_at` is simulation metadata and
/// never travels on a wire.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SpikeEvent {
    pub label: ChipLabel,
    pub emitted_at: SimTime,
}

/// 15-bit command payload carried by command words on an MGT link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CommandCode(u16);

impl CommandCode {
    pub const BARRIER_REQUEST: CommandCode = CommandCode(0x0001);
    pub const NOOP: CommandCode = CommandCode(0x7FFF);

    pub fn new(value: u32) -> Result<Self, RangeError> {
        if value <= u32::from(FabricLabel::MAX) {
            Ok(Self(value as u16))
        } else {
            Err(RangeError::CommandCode(value.into()))
        }
    }

    pub const fn get(self) -> u16 {
        self.0
    }
}

/// One 16-bit user word on an Aggregator link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MgtWord {
    Event(FabricLabel),
    Command(CommandCode),
    /// Clock-compensation filler; carries no payload and is never delivered.
    Pause,
}

/// Index of a Node-FPGA (equivalently, of its Aggregator lane).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct NodeId(u8);

impl NodeId {
    pub fn new(index: u32) -> Result<Self, RangeError> {
        if (index as usize) < MAX_NODES {
            Ok(Self(index as u8))
        } else {
            Err(RangeError::Node(index.into()))
        }
    }

    pub const fn index(self) -> usize {
        self.0 as usize
    }

    /// Checks the id against a configured node count.
    pub fn within(self, node_count: usize) -> bool {
        self.index() < node_count
    }
}

impl TryFrom<u32> for NodeId {
    type Error = RangeError;
    fn try_from(value: u32) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<NodeId> for u32 {
    fn from(id: NodeId) -> Self {
        id.0.into()
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

/// Up to three (label, timestamp) pairs moved over the chip link in one transfer.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Layer2Group {
    entries: Vec<(ChipLabel, Timestamp8)>,
}

impl Layer2Group {
    pub const CAPACITY: usize = 3;

    pub fn new(entries: Vec<(ChipLabel, Timestamp8)>) -> Result<Self, RangeError> {
        if entries.is_empty() || entries.len() > Self::CAPACITY {
            return Err(RangeError::GroupSize(entries.len()));
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[(ChipLabel, Timestamp8)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn into_entries(self) -> Vec<(ChipLabel, Timestamp8)> {
        self.entries
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low8_examples() {
        assert_eq!(system_time_low8(SimTime(0)), Timestamp8(0));
        assert_eq!(system_time_low8(SimTime(2)), Timestamp8(1));
        assert_eq!(system_time_low8(SimTime(514)), Timestamp8(1));
    }

    #[test]
    fn low8_period_is_512_ticks() {
        for t in 0..4096u64 {
            assert_eq!(system_time_low8(SimTime(t)), system_time_low8(SimTime(t + 512)));
        }
        // and not shorter: 256 ticks is only half a period
        assert_ne!(system_time_low8(SimTime(0)), system_time_low8(SimTime(256)));
    }

    #[test]
    fn constructors_reject_out_of_range() {
        assert!(ChipLabel::new(65_535).is_ok());
        assert_eq!(ChipLabel::new(65_536), Err(RangeError::ChipLabel(65_536)));
        assert!(FabricLabel::new(32_767).is_ok());
        assert!(FabricLabel::new(32_768).is_err());
        assert!(Timestamp8::new(255).is_ok());
        assert!(Timestamp8::new(256).is_err());
        assert!(CommandCode::new(0x8000).is_err());
        assert!(NodeId::new(15).is_ok());
        assert!(NodeId::new(16).is_err());
        assert!(Layer2Group::new(vec![]).is_err());
    }

    #[test]
    fn system_edges() {
        assert!(SimTime(4).is_system_edge());
        assert!(!SimTime(5).is_system_edge());
        assert_eq!(SimTime(5).next_system_edge(), SimTime(6));
        assert_eq!(SimTime(6).next_system_edge(), SimTime(6));
    }
}
