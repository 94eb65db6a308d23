// SPDX-License-Identifier: Apache-2.0

//! Routing-table compiler.
//!
//! Every (source node, chip label) pair that appears in the connectivity gets
//! one 15-bit fabric label. A receiver's inbound table is keyed on the fabric
//! label alone, so all sources routed to a receiver share its namespace: a
//! fabric label must translate to the same chip label, or be filtered, for
//! every source that uses it at that receiver.
//!
//! Labels are assigned greedily in key order, each key taking the least
//! label whose existing per-receiver constraints agree with what the key
//! needs at every receiver its source is routed to.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aggregator::RouteMatrix;
use crate::node::{InboundLut, OutboundLut};
use crate::types::{ChipLabel, FabricLabel, NodeId, MAX_NODES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Endpoint {
    pub node: NodeId,
    pub label: ChipLabel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LogicalConnection {
    pub src: Endpoint,
    pub dst: Endpoint,
}

impl LogicalConnection {
    pub fn new(src_node: u8, src_label: u16, dst_node: u8, dst_label: u16) -> Self {
        let node = |i: u8| NodeId::new(i.into()).expect("node index below 16");
        Self {
            src: Endpoint { node: node(src_node), label: ChipLabel::from_u16(src_label) },
            dst: Endpoint { node: node(dst_node), label: ChipLabel::from_u16(dst_label) },
        }
    }
}

impl fmt::Display for LogicalConnection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let node = |n: NodeId| u32::from(n);
        write!(f, "{} {} -> {} {}", node(self.src.node), self.src.label, node(self.dst.node), self.dst.label)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LabelAssignment {
    pub node: NodeId,
    pub chip_label: ChipLabel,
    pub fabric_label: FabricLabel,
}

/// Compiled routing state for all nodes and the Aggregator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FabricProgram {
    pub routes: RouteMatrix,
    pub outbound: Vec<OutboundLut>,
    pub inbound: Vec<InboundLut>,
    /// Sorted by (node, chip label).
    pub assignments: Vec<LabelAssignment>,
}

impl FabricProgram {
    /// All tables disabled.
    pub fn empty(node_count: usize) -> Self {
        Self {
            routes: RouteMatrix::new(node_count),
            outbound: vec![OutboundLut::disabled(); node_count],
            inbound: vec![InboundLut::disabled(); node_count],
            assignments: Vec::new(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.routes.node_count()
    }

    /// Human-readable overview.
    pub fn summary(&self) -> String {
        let n = self.node_count();
        let mut s = format!("nodes: {n}\nfabric labels assigned: {}\n", self.assignments.len());
        s.push_str("routes (src: dsts):\n");
        for src in 0..n {
            let dsts: Vec<String> = self.routes.destinations(src).map(|d| d.to_string()).collect();
            s.push_str(&format!("  {src}: [{}]\n", dsts.join(", ")));
        }
        s.push_str("enabled entries (node: outbound, inbound):\n");
        for i in 0..n {
            s.push_str(&format!(
                "  {i}: {}, {}\n",
                self.outbound[i].enabled().count(),
                self.inbound[i].enabled().count()
            ));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompileError {
    #[error("node count {0} outside 1..=16")]
    NodeCount(usize),
    #[error("connection `{0}` references a node outside the configured {1}")]
    NodeOutOfRange(LogicalConnection, usize),
    #[error("{}", .0)]
    Infeasible(Infeasibility),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InfeasibilityKind {
    /// One source label needs two different chip labels at the same receiver.
    SplitAtReceiver,
    /// No fabric label is compatible with every receiver of the source.
    NamespaceExhausted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Infeasibility {
    pub kind: InfeasibilityKind,
    pub conflicting: Vec<LogicalConnection>,
}

impl fmt::Display for Infeasibility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let what = match self.kind {
            InfeasibilityKind::SplitAtReceiver => {
                "a source label is mapped to several chip labels at one receiver, \
                 but a fabric label translates to a single chip label"
            }
            InfeasibilityKind::NamespaceExhausted => "no fabric label is free at all receivers of the source",
        };
        let list: Vec<String> = self.conflicting.iter().map(|c| format!("`{c}`")).collect();
        write!(f, "infeasible: {what}; conflicting connections: {}", list.join(", "))
    }
}

const WORDS: usize = FabricLabel::COUNT / 64;

/// Fabric-label constraints at one receiver.
#[derive(Clone)]
struct Receiver {
    /// Labels some source routed here already uses.
    constrained: Vec<u64>,
    /// The subset of `constrained` translated to a chip label.
    mapped: Vec<u64>,
    by_chip_label: HashMap<ChipLabel, Vec<u16>>,
}

impl Receiver {
    fn new() -> Self {
        Self { constrained: vec![0; WORDS], mapped: vec![0; WORDS], by_chip_label: HashMap::new() }
    }

    /// ORs the labels incompatible with `want` into `blocked`.
    fn block(&self, want: Option<ChipLabel>, blocked: &mut [u64]) {
        match want {
            None => blocked.iter_mut().zip(&self.mapped).for_each(|(b, m)| *b |= m),
            Some(l) => {
                let mut inc = self.constrained.clone();
                for &f in self.by_chip_label.get(&l).into_iter().flatten() {
                    inc[usize::from(f) / 64] &= !(1 << (f % 64));
                }
                blocked.iter_mut().zip(&inc).for_each(|(b, m)| *b |= m);
            }
        }
    }

    fn claim(&mut self, f: u16, want: Option<ChipLabel>) {
        let (w, bit) = (usize::from(f) / 64, 1u64 << (f % 64));
        if self.constrained[w] & bit != 0 {
            return;
        }
        self.constrained[w] |= bit;
        if let Some(l) = want {
            self.mapped[w] |= bit;
            self.by_chip_label.entry(l).or_default().push(f);
        }
    }
}

fn first_zero(bits: &[u64]) -> Option<u16> {
    bits.iter().enumerate().find(|(_, w)| **w != u64::MAX).map(|(i, w)| (i * 64 + w.trailing_ones() as usize) as u16)
}

/// Compiles `connections` for `node_count` nodes. Duplicate connections are
/// treated as one.
pub fn compile(connections: &[LogicalConnection], node_count: usize) -> Result<FabricProgram, CompileError> {
    if node_count == 0 || node_count > MAX_NODES {
        return Err(CompileError::NodeCount(node_count));
    }
    if let Some(c) = connections.iter().find(|c| !c.src.node.within(node_count) || !c.dst.node.within(node_count)) {
        return Err(CompileError::NodeOutOfRange(*c, node_count));
    }

    let mut program = FabricProgram::empty(node_count);
    // key -> receiver -> destination chip labels
    let mut keys: BTreeMap<Endpoint, BTreeMap<usize, BTreeSet<ChipLabel>>> = BTreeMap::new();
    for c in connections {
        program.routes.set(c.src.node.index(), c.dst.node.index(), true);
        keys.entry(c.src).or_default().entry(c.dst.node.index()).or_default().insert(c.dst.label);
    }
    for (src, per_rx) in &keys {
        if let Some((&rx, labels)) = per_rx.iter().find(|(_, l)| l.len() > 1) {
            let conflicting = labels
                .iter()
                .map(|&label| LogicalConnection {
                    src: *src,
                    dst: Endpoint { node: NodeId::new(rx as u32).unwrap(), label },
                })
                .collect();
            return Err(CompileError::Infeasible(Infeasibility {
                kind: InfeasibilityKind::SplitAtReceiver,
                conflicting,
            }));
        }
    }

    let mut receivers = vec![Receiver::new(); node_count];
    let mut blocked = vec![0u64; WORDS];
    for (src, per_rx) in &keys {
        let s = src.node.index();
        let wants: Vec<(usize, Option<ChipLabel>)> =
            program.routes.destinations(s).map(|r| (r, per_rx.get(&r).and_then(|l| l.first().copied()))).collect();
        blocked.fill(0);
        for &(r, want) in &wants {
            receivers[r].block(want, &mut blocked);
        }
        let Some(f) = first_zero(&blocked) else {
            let conflicting = per_rx
                .iter()
                .flat_map(|(&r, labels)| {
                    labels.iter().map(move |&label| LogicalConnection {
                        src: *src,
                        dst: Endpoint { node: NodeId::new(r as u32).unwrap(), label },
                    })
                })
                .collect();
            return Err(CompileError::Infeasible(Infeasibility {
                kind: InfeasibilityKind::NamespaceExhausted,
                conflicting,
            }));
        };
        let fabric = FabricLabel::new(f.into()).expect("first_zero stays below 2^15");
        for &(r, want) in &wants {
            receivers[r].claim(f, want);
            if let Some(l) = want {
                program.inbound[r].set(fabric, Some(l));
            }
        }
        program.outbound[s].set(src.label, Some(fabric));
        program.assignments.push(LabelAssignment { node: src.node, chip_label: src.label, fabric_label: fabric });
    }
    Ok(program)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mislabel {
    pub expected: LogicalConnection,
    pub delivered: ChipLabel,
}

/// Differences between the connectivity a program realizes and the one requested.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub missing: Vec<LogicalConnection>,
    pub spurious: Vec<LogicalConnection>,
    pub mislabeled: Vec<Mislabel>,
}

impl VerifyReport {
    pub fn is_empty(&self) -> bool {
        self.missing.is_empty() && self.spurious.is_empty() && self.mislabeled.is_empty()
    }
}

/// Every connection the program realizes, found by pushing each enabled
/// outbound entry through the route matrix and the inbound tables.
pub fn delivered_connections(program: &FabricProgram) -> BTreeSet<LogicalConnection> {
    let mut out = BTreeSet::new();
    for s in 0..program.node_count() {
        let src_node = NodeId::new(s as u32).unwrap();
        for (label, fabric) in program.outbound[s].enabled() {
            for d in program.routes.destinations(s) {
                if let Some(dst_label) = program.inbound[d].lookup(fabric) {
                    out.insert(LogicalConnection {
                        src: Endpoint { node: src_node, label },
                        dst: Endpoint { node: NodeId::new(d as u32).unwrap(), label: dst_label },
                    });
                }
            }
        }
    }
    out
}

pub fn verify(program: &FabricProgram, connections: &[LogicalConnection]) -> VerifyReport {
    let expected: BTreeSet<LogicalConnection> = connections.iter().copied().collect();
    let delivered = delivered_connections(program);
    let mut report = VerifyReport::default();
    let mut missing: Vec<_> = expected.difference(&delivered).copied().collect();
    let mut spurious: Vec<_> = delivered.difference(&expected).copied().collect();
    // A missing and a spurious connection sharing source and receiver node are
    // one wrong translation.
    spurious.retain(|sp| {
        let twin = missing.iter().position(|m| m.src == sp.src && m.dst.node == sp.dst.node);
        match twin {
            Some(i) => {
                let expected = missing.remove(i);
                report.mislabeled.push(Mislabel { expected, delivered: sp.dst.label });
                false
            }
            None => true,
        }
    });
    report.missing = missing;
    report.spurious = spurious;
    report
}
