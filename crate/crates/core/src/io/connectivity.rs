// SPDX-License-Identifier: Apache-2.0

//! Line-oriented connectivity text: `src_node src_label -> dst_node dst_label`.

use std::collections::BTreeSet;

use super::IoError;
use crate::netcompiler::{Endpoint, LogicalConnection};
use crate::types::{ChipLabel, NodeId};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Connectivity {
    /// In order of first appearance.
    pub connections: Vec<LogicalConnection>,
    /// One entry per dropped duplicate.
    pub warnings: Vec<String>,
}

fn field<T>(line: usize, token: &str, what: &str, conv: impl Fn(u32) -> Option<T>) -> Result<T, IoError> {
    let err = |reason: String| IoError::Parse { line, reason };
    let v: u64 = token.parse().map_err(|_| err(format!("{what} `{token}` is not a non-negative integer")))?;
    u32::try_from(v).ok().and_then(&conv).ok_or_else(|| err(format!("{what} {v} out of range")))
}

fn parse_line(line: usize, text: &str) -> Result<LogicalConnection, IoError> {
    let spaced = text.replace("->", " -> ");
    let tokens: Vec<&str> = spaced.split_whitespace().collect();
    if tokens.len() != 5 || tokens[2] != "->" {
        return Err(IoError::Parse {
            line,
            reason: format!("expected `src_node src_label -> dst_node dst_label`, got `{}`", text.trim()),
        });
    }
    let node = |t, what| field(line, t, what, |v| NodeId::new(v).ok());
    let label = |t, what| field(line, t, what, |v| ChipLabel::new(v).ok());
    Ok(LogicalConnection {
        src: Endpoint { node: node(tokens[0], "source node")?, label: label(tokens[1], "source label")? },
        dst: Endpoint { node: node(tokens[3], "destination node")?, label: label(tokens[4], "destination label")? },
    })
}

/// Parses connectivity text; lines are 1-based in errors and warnings.
pub fn parse_connectivity(text: &str) -> Result<Connectivity, IoError> {
    let mut out = Connectivity::default();
    let mut seen = BTreeSet::new();
    for (i, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("");
        if content.trim().is_empty() {
            continue;
        }
        let c = parse_line(i + 1, content)?;
        if seen.insert(c) {
            out.connections.push(c);
        } else {
            out.warnings.push(format!("line {}: duplicate connection `{c}` ignored", i + 1));
        }
    }
    Ok(out)
}

/// Canonical form: sorted, deduplicated, one connection per line.
pub fn serialize_connectivity(connections: &[LogicalConnection]) -> String {
    let set: BTreeSet<_> = connections.iter().copied().collect();
    let mut s = String::from("# src_node src_label -> dst_node dst_label\n");
    for c in set {
        s.push_str(&c.to_string());
        s.push('\n');
    }
    s
}
