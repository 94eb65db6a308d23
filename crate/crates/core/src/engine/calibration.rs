// SPDX-License-Identifier: Apache-2.0

//! Timing and buffering parameters of every component.
//!
//! Defaults place the two MGT hops at 74 ticks (296 ns), the four clock-domain
//! crossings at 38 ticks (19 system cycles) and the chip-to-chip median at
//! 262 ticks (1048 ns). See `docs/calibration.md` for the derivation.

use serde::{Deserialize, Serialize};

use crate::aggregator::AggregatorParams;
use crate::chip::{ChipParams, JitterBufferParams};
use crate::link::{ChipLinkParams, ClockCompensation, LinkParams};
use crate::node::NodeParams;

/// MGT lane parameters as they appear in configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MgtLinkConfig {
    pub latency_ticks: u64,
    pub cc_enabled: bool,
    pub cc_interval_words: u64,
    pub cc_length_cycles: u64,
}

impl Default for MgtLinkConfig {
    fn default() -> Self {
        let link = LinkParams::default();
        let cc = ClockCompensation::default();
        Self {
            latency_ticks: link.latency_ticks,
            cc_enabled: true,
            cc_interval_words: cc.interval_words,
            cc_length_cycles: cc.length_cycles,
        }
    }
}

impl MgtLinkConfig {
    pub fn params(&self) -> LinkParams {
        LinkParams {
            latency_ticks: self.latency_ticks,
            clock_compensation: self.cc_enabled.then_some(ClockCompensation {
                interval_words: self.cc_interval_words,
                length_cycles: self.cc_length_cycles,
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Calibration {
    pub chip: ChipParams,
    pub chip_link: ChipLinkParams,
    pub node: NodeParams,
    pub mgt_link: MgtLinkConfig,
    pub aggregator: AggregatorParams,
}

impl Calibration {
    pub fn validate(&self) -> Result<(), String> {
        self.chip_link.validate()?;
        self.node.validate()?;
        self.mgt_link.params().validate()?;
        if self.aggregator.queue_depth == 0 {
            return Err("aggregator queue depth must be >= 1".into());
        }
        if self.chip.egress_depth == 0 {
            return Err("chip egress depth must be >= 1".into());
        }
        if let Some(j) = self.jitter_buffer() {
            if j.depth == 0 {
                return Err("jitter buffer depth must be >= 1".into());
            }
            if j.expected_delay >= 256 {
                return Err("expected chip-link delay must stay below 256 system cycles".into());
            }
        }
        Ok(())
    }

    /// Jitter-buffer parameters, or `None` when compensation is disabled.
    pub fn jitter_buffer(&self) -> Option<JitterBufferParams> {
        let j = self.chip.jitter;
        j.enabled.then(|| JitterBufferParams {
            expected_delay: j.expected_delay_cycles.unwrap_or(self.chip_link.latency_ticks / 2 + j.margin_cycles),
            depth: j.depth,
        })
    }
}
