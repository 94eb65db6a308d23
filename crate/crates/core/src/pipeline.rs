// SPDX-License-Identifier: Apache-2.0

//! Fixed-latency pipeline stages and bounded queues shared by the components.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::types::SimTime;

/// A fixed-latency pipeline. Items leave in insertion order once their ready
/// time has been reached.
#[derive(Debug, Clone)]
pub struct DelayLine<T> {
    items: VecDeque<(SimTime, T)>,
}

impl<T> Default for DelayLine<T> {
    fn default() -> Self {
        Self { items: VecDeque::new() }
    }
}

impl<T> DelayLine<T> {
    pub fn push(&mut self, ready_at: SimTime, item: T) {
        debug_assert!(self.items.back().is_none_or(|&(t, _)| t <= ready_at), "delay line out of order");
        self.items.push_back((ready_at, item));
    }

    pub fn pop_ready(&mut self, now: SimTime) -> Option<T> {
        match self.items.front() {
            Some(&(t, _)) if t <= now => self.items.pop_front().map(|(_, item)| item),
            _ => None,
        }
    }

    pub fn next_ready(&self) -> Option<SimTime> {
        self.items.front().map(|&(t, _)| t)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.items.iter().map(|(_, item)| item)
    }
}

/// Occupancy statistics of a bounded queue.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueueStats {
    pub enqueued: u64,
    pub dropped: u64,
    pub max_occupancy: u64,
    /// Cycles that ended with entries still waiting, i.e. the queue held
    /// traffic back instead of passing it on.
    pub stalled_cycles: u64,
    pub first_stall: Option<u64>,
    pub first_drop: Option<u64>,
}

impl QueueStats {
    pub fn merge(&mut self, other: &QueueStats) {
        self.enqueued += other.enqueued;
        self.dropped += other.dropped;
        self.max_occupancy = self.max_occupancy.max(other.max_occupancy);
        self.stalled_cycles += other.stalled_cycles;
        self.first_stall = min_opt(self.first_stall, other.first_stall);
        self.first_drop = min_opt(self.first_drop, other.first_drop);
    }
}

fn min_opt(a: Option<u64>, b: Option<u64>) -> Option<u64> {
    match (a, b) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    }
}

/// FIFO with a hard capacity; pushes beyond it are dropped and counted.
#[derive(Debug, Clone)]
pub struct BoundedQueue<T> {
    items: VecDeque<T>,
    depth: usize,
    stats: QueueStats,
}

impl<T> BoundedQueue<T> {
    pub fn new(depth: usize) -> Self {
        Self { items: VecDeque::with_capacity(depth), depth, stats: QueueStats::default() }
    }

    /// Returns the item back if the queue is full.
    pub fn push(&mut self, item: T, now: SimTime) -> Result<(), T> {
        if self.items.len() >= self.depth {
            self.stats.dropped += 1;
            self.stats.first_drop.get_or_insert(now.ticks());
            return Err(item);
        }
        self.items.push_back(item);
        self.stats.enqueued += 1;
        self.stats.max_occupancy = self.stats.max_occupancy.max(self.items.len() as u64);
        Ok(())
    }

    pub fn front(&self) -> Option<&T> {
        self.items.front()
    }

    pub fn pop(&mut self) -> Option<T> {
        self.items.pop_front()
    }

    /// Records that entries had to wait this cycle.
    pub fn note_stall(&mut self, now: SimTime) {
        self.stats.stalled_cycles += 1;
        self.stats.first_stall.get_or_insert(now.ticks());
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.items.iter()
    }

    pub fn stats(&self) -> &QueueStats {
        &self.stats
    }
}
