// SPDX-License-Identifier: Apache-2.0

//! Closed-form zero-contention chip-to-chip delay.

use serde::{Deserialize, Serialize};

use super::calibration::Calibration;
use crate::types::{SimTime, TICKS_PER_SYSTEM_CYCLE, TICK_NS};

/// Per-stage ticks for one spike on an otherwise idle fabric. The sum equals
/// the latency the simulator measures for that spike.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathBreakdown {
    pub chip_egress: u64,
    pub chip_link_up: u64,
    pub node_out_cdc: u64,
    pub node_out_lut: u64,
    pub mgt_up: u64,
    pub aggregator: u64,
    pub mgt_down: u64,
    pub node_in_lut: u64,
    pub node_in_pack: u64,
    /// Includes the wait for the next system-clock edge.
    pub node_in_cdc: u64,
    pub chip_link_down: u64,
    pub jitter_hold: u64,
    pub chip_ingress: u64,
}

impl PathBreakdown {
    pub fn total_ticks(&self) -> u64 {
        self.chip_egress
            + self.chip_link_up
            + self.inter_fpga_ticks()
            + self.chip_link_down
            + self.jitter_hold
            + self.chip_ingress
    }

    /// From the layer-2 tap on the source node to the chip-link transmit on
    /// the destination node.
    pub fn inter_fpga_ticks(&self) -> u64 {
        self.node_out_cdc
            + self.node_out_lut
            + self.mgt_up
            + self.aggregator
            + self.mgt_down
            + self.node_in_lut
            + self.node_in_pack
            + self.node_in_cdc
    }

    pub fn link_hop_ticks(&self) -> u64 {
        self.mgt_up + self.mgt_down
    }

    pub fn total_ns(&self) -> u64 {
        self.total_ticks() * TICK_NS
    }
}

/// Delay of a spike emitted on a system edge and routed over the Aggregator.
///
/// Every node and the Aggregator share one calibration, so the delay is the
/// same for any source/destination pair, loopback included.
pub fn path_delay(cal: &Calibration) -> PathBreakdown {
    let sys = TICKS_PER_SYSTEM_CYCLE;
    let node = &cal.node;
    let mgt = cal.mgt_link.latency_ticks;

    let chip_egress = cal.chip.layer1_egress_cycles * sys;
    let chip_link = cal.chip_link.latency_ticks;
    let node_out_cdc = node.cdc_out_cycles * sys;
    let node_out_lut = node.lut_pipeline_cycles;
    let aggregator = cal.aggregator.traversal_ticks();

    // tick at which the packer releases the group, relative to emission
    let packed = chip_egress
        + chip_link
        + node_out_cdc
        + node_out_lut
        + mgt
        + aggregator
        + mgt
        + node.lut_pipeline_cycles
        + node.pack_latency_cycles * sys;
    let to_chip = SimTime(packed + node.cdc_in_cycles * sys).next_system_edge().ticks();
    let arrive = to_chip + chip_link;
    let release = match cal.jitter_buffer() {
        Some(j) => arrive.max(to_chip + j.expected_delay * sys),
        None => arrive,
    };

    PathBreakdown {
        chip_egress,
        chip_link_up: chip_link,
        node_out_cdc,
        node_out_lut,
        mgt_up: mgt,
        aggregator,
        mgt_down: mgt,
        node_in_lut: node.lut_pipeline_cycles,
        node_in_pack: node.pack_latency_cycles * sys,
        node_in_cdc: to_chip - packed,
        chip_link_down: chip_link,
        jitter_hold: release - arrive,
        chip_ingress: cal.chip.layer1_ingress_cycles * sys,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_calibration_budget() {
        let p = path_delay(&Calibration::default());
        assert_eq!(p.link_hop_ticks(), 74);
        assert_eq!(p.link_hop_ticks() * TICK_NS, 296);
        assert_eq!(p.inter_fpga_ticks(), 138);
        assert_eq!(p.total_ticks(), 262);
        assert_eq!(p.jitter_hold, 4);
        let cdc = p.node_out_cdc + p.node_in_cdc + Calibration::default().aggregator.cdc_ticks;
        assert_eq!(cdc, 38);
    }

    #[test]
    fn link_latency_is_linear() {
        let base = path_delay(&Calibration::default()).total_ticks();
        let mut cal = Calibration::default();
        cal.mgt_link.latency_ticks *= 2;
        assert_eq!(path_delay(&cal).total_ticks(), base + 2 * 37);
    }

    #[test]
    fn odd_packer_exit_waits_for_system_edge() {
        let mut cal = Calibration::default();
        assert_eq!(path_delay(&cal).node_in_cdc, 10);
        cal.aggregator.arbitration_ticks = 11;
        assert_eq!(path_delay(&cal).node_in_cdc, 11);
    }
}
