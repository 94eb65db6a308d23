// SPDX-License-Identifier: Apache-2.0

//! Unidirectional serial lanes.
//!
//! A [`Link`] moves one word per MGT cycle with a fixed transport latency.
//! After every `interval_words` accepted words the transceiver inserts
//! `length_cycles` clock-compensation pause cycles during which the sender
//! is back-pressured. The chip link reuses the same lane with a token bucket
//! in front of it that caps the sustained event rate.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClockCompensation {
    pub interval_words: u64,
    pub length_cycles: u64,
}

impl Default for ClockCompensation {
    fn default() -> Self {
        Self { interval_words: 5000, length_cycles: 2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkParams {
    pub latency_ticks: u64,
    /// `None` disables clock compensation entirely.
    pub clock_compensation: Option<ClockCompensation>,
}

impl Default for LinkParams {
    fn default() -> Self {
        Self { latency_ticks: 37, clock_compensation: Some(ClockCompensation::default()) }
    }
}

impl LinkParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.latency_ticks == 0 {
            return Err("link latency must be at least one tick".into());
        }
        if let Some(cc) = self.clock_compensation {
            if cc.interval_words == 0 || cc.length_cycles == 0 {
                return Err("clock-compensation interval and length must be at least 1".into());
            }
        }
        Ok(())
    }

    /// Long-run words per cycle for a saturating sender.
    pub fn sustained_fraction(&self) -> f64 {
        match self.clock_compensation {
            None => 1.0,
            Some(cc) => cc.interval_words as f64 / (cc.interval_words + cc.length_cycles) as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SendOutcome {
    Accepted { deliver_at: SimTime },
    BackPressured,
}

impl SendOutcome {
    pub fn is_accepted(self) -> bool {
        matches!(self, SendOutcome::Accepted { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinkError {
    #[error("second injection attempt on one link in cycle {0}")]
    DoubleInjection(u64),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkCounters {
    pub accepted: u64,
    pub delivered: u64,
    pub back_pressured: u64,
    pub first_delivery: Option<u64>,
    pub last_delivery: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct Link<T> {
    params: LinkParams,
    in_flight: VecDeque<(SimTime, T)>,
    words_since_cc: u64,
    pause_until: u64,
    last_attempt: Option<u64>,
    counters: LinkCounters,
}

impl<T> Link<T> {
    pub fn new(params: LinkParams) -> Self {
        Self {
            params,
            in_flight: VecDeque::new(),
            words_since_cc: 0,
            pause_until: 0,
            last_attempt: None,
            counters: LinkCounters::default(),
        }
    }

    pub fn params(&self) -> &LinkParams {
        &self.params
    }

    /// Whether `now` falls inside a clock-compensation pause.
    pub fn is_paused(&self, now: SimTime) -> bool {
        now.ticks() < self.pause_until
    }

    pub fn try_send(&mut self, word: T, now: SimTime) -> Result<SendOutcome, LinkError> {
        if self.last_attempt == Some(now.ticks()) {
            return Err(LinkError::DoubleInjection(now.ticks()));
        }
        self.last_attempt = Some(now.ticks());
        if self.is_paused(now) {
            self.counters.back_pressured += 1;
            return Ok(SendOutcome::BackPressured);
        }
        let deliver_at = now.plus(self.params.latency_ticks);
        self.in_flight.push_back((deliver_at, word));
        self.counters.accepted += 1;
        if let Some(cc) = self.params.clock_compensation {
            self.words_since_cc += 1;
            if self.words_since_cc == cc.interval_words {
                self.words_since_cc = 0;
                self.pause_until = now.ticks() + 1 + cc.length_cycles;
            }
        }
        Ok(SendOutcome::Accepted { deliver_at })
    }

    pub fn poll(&mut self, now: SimTime) -> Option<T> {
        match self.in_flight.front() {
            Some(&(at, _)) if at <= now => {
                debug_assert_eq!(at, now, "link polled after a delivery cycle was skipped");
                self.counters.delivered += 1;
                self.counters.first_delivery.get_or_insert(now.ticks());
                self.counters.last_delivery = Some(now.ticks());
                self.in_flight.pop_front().map(|(_, w)| w)
            }
            _ => None,
        }
    }

    pub fn next_delivery(&self) -> Option<SimTime> {
        self.in_flight.front().map(|&(at, _)| at)
    }

    pub fn in_flight(&self) -> impl Iterator<Item = &T> {
        self.in_flight.iter().map(|(_, w)| w)
    }

    pub fn in_flight_len(&self) -> usize {
        self.in_flight.len()
    }

    pub fn counters(&self) -> &LinkCounters {
        &self.counters
    }
}

/// Event-rate limiter for the chip link, refilled once per system cycle.
#[derive(Debug, Clone)]
pub struct TokenBucket {
    burst: u32,
    refill_per_cycle: u32,
    tokens: u32,
    last_cycle: Option<u64>,
}

impl TokenBucket {
    pub fn new(burst: u32, refill_per_cycle: u32) -> Self {
        Self { burst, refill_per_cycle, tokens: burst, last_cycle: None }
    }

    /// Tokens available in `cycle`, applying every refill since the last call.
    pub fn available(&mut self, cycle: u64) -> u32 {
        if let Some(last) = self.last_cycle {
            let elapsed = cycle.saturating_sub(last);
            let refill = elapsed.saturating_mul(self.refill_per_cycle.into());
            self.tokens = (u64::from(self.tokens) + refill).min(self.burst.into()) as u32;
        }
        self.last_cycle = Some(cycle);
        self.tokens
    }

    pub fn take(&mut self, n: u32) {
        assert!(n <= self.tokens, "token bucket overdrawn");
        self.tokens -= n;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChipLinkParams {
    pub latency_ticks: u64,
    /// Events the link can absorb in one system cycle after an idle period.
    pub burst_events: u32,
    /// Sustained events per system cycle.
    pub events_per_cycle: u32,
}

impl Default for ChipLinkParams {
    fn default() -> Self {
        Self { latency_ticks: 52, burst_events: 3, events_per_cycle: 2 }
    }
}

impl ChipLinkParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.latency_ticks == 0 || self.latency_ticks % 2 != 0 {
            return Err("chip link latency must be a positive whole number of system cycles (even ticks)".into());
        }
        if self.events_per_cycle == 0 || self.burst_events < self.events_per_cycle || self.burst_events > 3 {
            return Err("chip link needs 1 <= events_per_cycle <= burst_events <= 3".into());
        }
        Ok(())
    }
}

/// Layer-2 link between a chip and its Node-FPGA: one group per system cycle,
/// rate-limited by a token bucket.
#[derive(Debug, Clone)]
pub struct ChipLink<G> {
    lane: Link<G>,
    bucket: TokenBucket,
}

impl<G> ChipLink<G> {
    pub fn new(params: ChipLinkParams) -> Self {
        let lane = Link::new(LinkParams { latency_ticks: params.latency_ticks, clock_compensation: None });
        Self { lane, bucket: TokenBucket::new(params.burst_events, params.events_per_cycle) }
    }

    /// Events that may be sent in the system cycle starting at `now`.
    pub fn capacity(&mut self, now: SimTime) -> u32 {
        debug_assert!(now.is_system_edge());
        self.bucket.available(now.system_cycle()).min(3)
    }

    /// Sends a group of `events` entries; the caller must stay within [`capacity`](Self::capacity).
    pub fn send(&mut self, group: G, events: u32, now: SimTime) -> Result<SimTime, LinkError> {
        self.bucket.take(events);
        match self.lane.try_send(group, now)? {
            SendOutcome::Accepted { deliver_at } => Ok(deliver_at),
            SendOutcome::BackPressured => unreachable!("chip link has no clock compensation"),
        }
    }

    pub fn poll(&mut self, now: SimTime) -> Option<G> {
        self.lane.poll(now)
    }

    pub fn next_delivery(&self) -> Option<SimTime> {
        self.lane.next_delivery()
    }

    pub fn in_flight(&self) -> impl Iterator<Item = &G> {
        self.lane.in_flight()
    }

    pub fn counters(&self) -> &LinkCounters {
        self.lane.counters()
    }
}
