// SPDX-License-Identifier: Apache-2.0

//! Oracles shared by the integration suites.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use spikefabric::aggregator::{BarrierFsm, NodeSet};
use spikefabric::chip::SourceSpec;
use spikefabric::engine::{run, SimConfig};
use spikefabric::netcompiler::{FabricProgram, LogicalConnection};
use spikefabric::types::{ChipLabel, NodeId};

/// Random connectivity on at most 4 nodes and 64 edges. Labels come from a
/// small pool so that multicast, convergence and duplicates are common; a
/// (source, receiver) pair never asks for two chip labels, which keeps every
/// topology feasible.
pub fn random_topology(rng: &mut ChaCha8Rng) -> (usize, Vec<LogicalConnection>) {
    let n = rng.gen_range(1..=4usize);
    let edges = rng.gen_range(0..=64usize);
    let pool = rng.gen_range(1..=24u16);
    let wide = |rng: &mut ChaCha8Rng| if rng.gen_bool(0.1) { rng.gen() } else { rng.gen_range(0..pool) };
    let mut chosen: BTreeMap<(u8, u16, u8), u16> = BTreeMap::new();
    let mut conns = Vec::with_capacity(edges);
    for _ in 0..edges {
        let s = rng.gen_range(0..n) as u8;
        let d = rng.gen_range(0..n) as u8;
        let sl = wide(rng);
        let dl = wide(rng);
        let dl = *chosen.entry((s, sl, d)).or_insert(dl);
        conns.push(LogicalConnection::new(s, sl, d, dl));
    }
    (n, conns)
}

const SPACING_TICKS: u64 = 16;

/// Emits one spike per listed source on a quiet fabric and returns the
/// connections observed at the receivers, sorted, with multiplicity.
pub fn timed_delivery(n: usize, program: &FabricProgram, sources: &[(u8, u16)]) -> Vec<LogicalConnection> {
    let mut cfg = SimConfig::new(n, 1 << 24);
    for (k, &(node, label)) in sources.iter().enumerate() {
        cfg.nodes[usize::from(node)].sources.push(SourceSpec {
            label: ChipLabel::from_u16(label),
            period_ticks: 1,
            count: 1,
            start_offset: k as u64 * SPACING_TICKS,
        });
    }
    let report = run(&cfg, program).expect("valid config");
    assert!(report.quiescent, "fabric did not drain");
    assert_eq!(report.total_dropped(), 0, "quiet fabric lost events");
    let starts = report.realtime_starts();
    let start = starts[0].expect("barrier fired");
    assert!(starts.iter().all(|&s| s == Some(start)), "nodes started apart");
    let mut out = Vec::new();
    for (dst, trace) in report.traces.iter().enumerate() {
        for r in trace {
            let k = (r.emitted_at.ticks() - start) / SPACING_TICKS;
            let (sn, sl) = sources[k as usize];
            out.push(LogicalConnection::new(sn, sl, dst as u8, r.label.get()));
        }
    }
    out.sort();
    out
}

/// Distinct source endpoints of `conns` plus a few unconnected ones.
pub fn probe_sources(rng: &mut ChaCha8Rng, n: usize, conns: &[LogicalConnection]) -> Vec<(u8, u16)> {
    let mut set: BTreeSet<(u8, u16)> = conns.iter().map(|c| (u32::from(c.src.node) as u8, c.src.label.get())).collect();
    for _ in 0..rng.gen_range(0..4) {
        set.insert((rng.gen_range(0..n) as u8, rng.gen()));
    }
    set.into_iter().collect()
}

/// Deduplicated, sorted logical connectivity.
pub fn logical_set(conns: &[LogicalConnection]) -> Vec<LogicalConnection> {
    conns.iter().copied().collect::<BTreeSet<_>>().into_iter().collect()
}

/// Outcome of one barrier round under a declarative model: the round opens
/// at the first participant request; it fires at the last participant's
/// request if every participant asked within `timeout` cycles of the
/// opening, and otherwise times out at `opening + timeout`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Round {
    Nothing,
    Fire(u64),
    Timeout(u64),
}

pub fn model_round(requests: &[Option<u64>], participants: &[bool], timeout: u64) -> Round {
    let asked: Vec<Option<u64>> = requests.iter().zip(participants).filter(|(_, &p)| p).map(|(r, _)| *r).collect();
    let Some(open) = asked.iter().flatten().min().copied() else { return Round::Nothing };
    match asked.iter().copied().collect::<Option<Vec<u64>>>() {
        Some(all) if all.iter().max().unwrap() - open <= timeout => Round::Fire(*all.iter().max().unwrap()),
        _ => Round::Timeout(open + timeout),
    }
}

fn drive(fsm: &mut BarrierFsm, requests: &[Option<u64>], horizon: u64, dense: bool) -> Round {
    let mut by_cycle: BTreeMap<u64, Vec<NodeId>> = BTreeMap::new();
    for (i, r) in requests.iter().enumerate() {
        if let Some(c) = r {
            by_cycle.entry(*c).or_default().push(NodeId::new(i as u32).unwrap());
        }
    }
    let cycles: Vec<u64> =
        if dense { (0..=horizon).collect() } else { by_cycle.keys().copied().chain([horizon]).collect() };
    for c in cycles {
        let reqs = by_cycle.get(&c).map(Vec::as_slice).unwrap_or(&[]);
        fsm.step(c, reqs);
    }
    let k = fsm.counters();
    match (k.fire_cycles.as_slice(), k.timeout_cycles.as_slice()) {
        ([], []) => Round::Nothing,
        ([f], []) => Round::Fire(*f),
        ([], [t]) => Round::Timeout(*t),
        other => panic!("one round produced {other:?}"),
    }
}

/// Every request schedule of four nodes (three participants) over cycles
/// 0..=6, for several timeouts, stepped densely and sparsely. Returns the
/// number of schedules checked.
pub fn exhaustive_barrier() -> Result<u64, String> {
    let participants = [true, true, false, true];
    let mask = NodeSet(0b1011);
    let choices: Vec<Option<u64>> = std::iter::once(None).chain((0..=6).map(Some)).collect();
    let mut checked = 0;
    for timeout in [0, 1, 2, 3, 5, 8] {
        for a in &choices {
            for b in &choices {
                for c in &choices {
                    for d in &choices {
                        let reqs = [*a, *b, *c, *d];
                        let want = model_round(&reqs, &participants, timeout);
                        for dense in [true, false] {
                            let mut fsm = BarrierFsm::new(mask, timeout, 50);
                            let got = drive(&mut fsm, &reqs, 40, dense);
                            if got != want {
                                return Err(format!(
                                    "{reqs:?} timeout {timeout} dense {dense}: got {got:?}, want {want:?}"
                                ));
                            }
                        }
                        checked += 1;
                    }
                }
            }
        }
    }
    Ok(checked)
}

/// After a fire at cycle `f`, a full second round at `f + gap` must be
/// ignored while `gap <= refractory` and fire otherwise.
pub fn refractory_check() -> Result<u64, String> {
    let mut checked = 0;
    for refractory in [0, 1, 4, 9] {
        for gap in 1..=refractory + 3 {
            let mut fsm = BarrierFsm::new(NodeSet(0b11), 10, refractory);
            let ids = [NodeId::new(0).unwrap(), NodeId::new(1).unwrap()];
            fsm.step(3, &ids);
            fsm.step(3 + gap, &ids);
            fsm.step(3 + gap + 20, &[]);
            let fires = fsm.counters().fire_cycles.clone();
            let want = if gap > refractory { vec![3, 3 + gap] } else { vec![3] };
            if fires != want {
                return Err(format!("refractory {refractory} gap {gap}: fires {fires:?}, want {want:?}"));
            }
            checked += 1;
        }
    }
    Ok(checked)
}
