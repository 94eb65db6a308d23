// SPDX-License-Identifier: Apache-2.0

//! Wire payloads tagged with out-of-band simulation metadata.
//!
//! The metadata (emission time, origin) never influences routing; it exists
//! so that latency can be measured at the receiver.

use crate::codec::{pack_layer2, unpack_layer2};
use crate::types::{ChipLabel, Layer2Group, MgtWord, SimTime, Timestamp8};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Origin {
    /// A spike generated by a source neuron and routed over the fabric.
    Routed,
    /// A spike injected from a node's playback memory.
    Playback,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EventMeta {
    pub emitted_at: SimTime,
    pub origin: Origin,
}

/// One layer-2 transfer on a chip link.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct L2Transfer {
    group: Layer2Group,
    meta: Vec<EventMeta>,
}

impl L2Transfer {
    pub fn new(events: &[(ChipLabel, Timestamp8, EventMeta)]) -> Self {
        let entries: Vec<_> = events.iter().map(|&(label, ts, _)| (label, ts)).collect();
        let group = pack_layer2(&entries).expect("chip link transfers carry 1 to 3 events");
        Self { group, meta: events.iter().map(|&(_, _, m)| m).collect() }
    }

    pub fn group(&self) -> &Layer2Group {
        &self.group
    }

    pub fn len(&self) -> usize {
        self.meta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.meta.is_empty()
    }

    pub fn meta(&self) -> &[EventMeta] {
        &self.meta
    }

    pub fn events(&self) -> impl Iterator<Item = (ChipLabel, Timestamp8, EventMeta)> + '_ {
        unpack_layer2(&self.group).into_iter().zip(&self.meta).map(|((l, ts), &m)| (l, ts, m))
    }
}

/// An MGT word in flight together with the emission time of the spike it carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Flit {
    pub word: MgtWord,
    pub emitted_at: SimTime,
}

impl Flit {
    pub fn is_event(&self) -> bool {
        matches!(self.word, MgtWord::Event(_))
    }
}
