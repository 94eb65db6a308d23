// SPDX-License-Identifier: Apache-2.0

//! Barrier start-up scenarios with randomized request offsets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::engine::{run, Calibration, SimConfig};
use crate::netcompiler::compile;
use crate::types::{SimTime, TICKS_PER_SYSTEM_CYCLE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum BarrierScenario {
    /// Every node requests within the spread window.
    AllRequest,
    /// The last node never requests; the barrier times out.
    MissingNode,
    /// The last node requests `straggler_delay_cycles` after the latest other node.
    Straggler,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BarrierBenchSpec {
    pub scenario: BarrierScenario,
    pub node_count: usize,
    pub seed: u64,
    /// Request offsets are drawn uniformly from `0..=spread_cycles`.
    pub spread_cycles: u64,
    pub straggler_delay_cycles: u64,
}

impl Default for BarrierBenchSpec {
    fn default() -> Self {
        Self {
            scenario: BarrierScenario::AllRequest,
            node_count: 12,
            seed: 0,
            spread_cycles: 1000,
            straggler_delay_cycles: 5000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BarrierReport {
    pub spec: BarrierBenchSpec,
    /// System cycle of each node's request; `None` for a node that never asks.
    pub request_cycles: Vec<Option<u64>>,
    /// Cycle at which each request reaches the barrier logic.
    pub seen_cycles: Vec<Option<u64>>,
    pub fire_cycles: Vec<u64>,
    /// Independent prediction from request offsets and calibrated latencies.
    pub expected_fire_cycle: Option<u64>,
    pub timeouts: usize,
    /// System cycle at which each node entered real time.
    pub start_cycles: Vec<Option<u64>>,
    /// Largest difference between any two start cycles.
    pub start_spread_cycles: Option<u64>,
}

impl BarrierReport {
    pub fn matches_prediction(&self) -> bool {
        self.fire_cycles.first().copied() == self.expected_fire_cycle
    }
}

/// System cycle at which a request sent in cycle `request` enters the barrier:
/// one MGT hop, then the Aggregator command crossing, then the next edge.
pub fn request_seen_cycle(cal: &Calibration, request: u64) -> u64 {
    let arrive = SimTime::from_system_cycles(request).plus(cal.mgt_link.latency_ticks + cal.aggregator.cdc_ticks);
    arrive.next_system_edge().system_cycle()
}

fn request_offsets(spec: &BarrierBenchSpec) -> Vec<Option<u64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut offsets: Vec<Option<u64>> =
        (0..spec.node_count).map(|_| Some(rng.gen_range(0..=spec.spread_cycles))).collect();
    let last = spec.node_count - 1;
    match spec.scenario {
        BarrierScenario::AllRequest => {}
        BarrierScenario::MissingNode => offsets[last] = None,
        BarrierScenario::Straggler => {
            let latest = offsets[..last].iter().flatten().max().copied().unwrap_or(0);
            offsets[last] = Some(latest + spec.straggler_delay_cycles);
        }
    }
    offsets
}

/// Runs one barrier scenario under the calibration and barrier settings of `base`.
pub fn barrier_bench(base: &SimConfig, spec: &BarrierBenchSpec) -> Result<BarrierReport, HarnessError> {
    if !(2..=crate::types::MAX_NODES).contains(&spec.node_count) {
        return Err(HarnessError::Spec(format!("barrier bench needs 2..=16 nodes, got {}", spec.node_count)));
    }
    let n = spec.node_count;
    let requests = request_offsets(spec);
    let mut cfg = base.clone();
    cfg.node_count = n;
    cfg.nodes = vec![Default::default(); n];
    cfg.fabric = Default::default();
    cfg.barrier.participants = None;
    for (node, r) in cfg.nodes.iter_mut().zip(&requests) {
        match r {
            Some(c) => node.barrier_request_cycle = *c,
            None => node.joins_barrier = false,
        }
    }
    let latest = requests.iter().flatten().max().copied().unwrap_or(0);
    cfg.run_ticks = (latest + 2 * cfg.barrier.timeout_cycles + 10_000) * TICKS_PER_SYSTEM_CYCLE;

    let report = run(&cfg, &compile(&[], n)?)?;
    let cal = &cfg.calibration;
    let seen: Vec<Option<u64>> = requests.iter().map(|r| r.map(|c| request_seen_cycle(cal, c))).collect();
    let expected_fire_cycle = match seen.iter().copied().collect::<Option<Vec<u64>>>() {
        Some(s) => {
            let (lo, hi) = (*s.iter().min().unwrap(), *s.iter().max().unwrap());
            (hi - lo <= cfg.barrier.timeout_cycles).then_some(hi)
        }
        None => None,
    };
    let start_cycles: Vec<Option<u64>> =
        report.realtime_starts().into_iter().map(|t| t.map(|t| SimTime(t).system_cycle())).collect();
    let started: Vec<u64> = start_cycles.iter().flatten().copied().collect();
    let start_spread_cycles = match (started.iter().min(), started.iter().max()) {
        (Some(a), Some(b)) => Some(b - a),
        _ => None,
    };
    Ok(BarrierReport {
        spec: spec.clone(),
        request_cycles: requests,
        seen_cycles: seen,
        fire_cycles: report.barrier.fire_cycles.clone(),
        expected_fire_cycle,
        timeouts: report.barrier.timeout_cycles.len(),
        start_cycles,
        start_spread_cycles,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bench(scenario: BarrierScenario, seed: u64) -> BarrierReport {
        let spec = BarrierBenchSpec { scenario, seed, ..BarrierBenchSpec::default() };
        barrier_bench(&SimConfig::new(1, 1), &spec).unwrap()
    }

    #[test]
    fn request_pipeline_is_28_cycles() {
        assert_eq!(request_seen_cycle(&Calibration::default(), 0), 28);
        assert_eq!(request_seen_cycle(&Calibration::default(), 100), 128);
    }

    #[test]
    fn all_request_fires_once_at_the_last_request() {
        for seed in 0..5 {
            let r = bench(BarrierScenario::AllRequest, seed);
            assert_eq!(r.fire_cycles.len(), 1);
            assert!(r.matches_prediction(), "{r:?}");
            assert_eq!(r.timeouts, 0);
            assert!(r.start_cycles.iter().all(Option::is_some));
            assert_eq!(r.start_spread_cycles, Some(0));
            assert_eq!(r.start_cycles[0], Some(r.fire_cycles[0] + 2));
        }
    }

    #[test]
    fn missing_node_times_out_without_starting_anyone() {
        let r = bench(BarrierScenario::MissingNode, 1);
        assert!(r.fire_cycles.is_empty());
        assert_eq!(r.expected_fire_cycle, None);
        assert_eq!(r.timeouts, 1);
        assert!(r.start_cycles.iter().all(Option::is_none));
    }

    #[test]
    fn straggler_beyond_timeout_is_not_synchronized() {
        let spec = BarrierBenchSpec {
            scenario: BarrierScenario::Straggler,
            straggler_delay_cycles: 20_000,
            ..BarrierBenchSpec::default()
        };
        let r = barrier_bench(&SimConfig::new(1, 1), &spec).unwrap();
        assert!(r.fire_cycles.is_empty() && r.expected_fire_cycle.is_none());
        assert!(r.timeouts >= 1);
        let ok = bench(BarrierScenario::Straggler, 2);
        assert!(ok.matches_prediction() && ok.fire_cycles.len() == 1);
    }
}
