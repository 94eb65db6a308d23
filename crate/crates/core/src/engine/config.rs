// SPDX-License-Identifier: Apache-2.0

//! Declarative experiment description.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::calibration::Calibration;
use crate::aggregator::BarrierParams;
use crate::chip::SourceSpec;
use crate::node::PlaybackProgram;
use crate::types::MAX_NODES;

pub const CONFIG_FORMAT_VERSION: u32 = 1;

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeConfig {
    #[serde(default)]
    pub sources: Vec<SourceSpec>,
    #[serde(default = "PlaybackProgram::barrier_only")]
    pub playback: PlaybackProgram,
    /// System cycle at which the node starts its playback program and sends
    /// its barrier request.
    #[serde(default)]
    pub barrier_request_cycle: u64,
    /// A node that never joins stays idle and never sends its request.
    #[serde(default = "default_true")]
    pub joins_barrier: bool,
}

impl Default for NodeConfig {
    fn default() -> Self {
        Self {
            sources: Vec::new(),
            playback: PlaybackProgram::barrier_only(),
            barrier_request_cycle: 0,
            joins_barrier: true,
        }
    }
}

/// Where the routing tables come from.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FabricSpec {
    /// Inline connections in connectivity-file syntax, e.g. `"0 5 -> 1 300"`.
    pub connections: Vec<String>,
    /// Connectivity file, relative to the config file.
    pub connectivity_file: Option<PathBuf>,
    /// Precompiled program file, relative to the config file.
    pub program_file: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub format_version: u32,
    pub node_count: usize,
    /// Hard stop; the run also ends as soon as the fabric is quiescent.
    pub run_ticks: u64,
    /// Reserved; the model is fully deterministic.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub calibration: Calibration,
    #[serde(default)]
    pub barrier: BarrierParams,
    #[serde(default)]
    pub fabric: FabricSpec,
    /// Per-node settings; missing trailing nodes use the defaults.
    #[serde(default)]
    pub nodes: Vec<NodeConfig>,
}

impl SimConfig {
    pub fn new(node_count: usize, run_ticks: u64) -> Self {
        Self {
            format_version: CONFIG_FORMAT_VERSION,
            node_count,
            run_ticks,
            seed: 0,
            calibration: Calibration::default(),
            barrier: BarrierParams::default(),
            fabric: FabricSpec::default(),
            nodes: vec![NodeConfig::default(); node_count],
        }
    }

    pub fn node(&self, i: usize) -> NodeConfig {
        self.nodes.get(i).cloned().unwrap_or_default()
    }

    /// All problems found, in a stable order.
    pub fn validate(&self) -> Vec<String> {
        let mut errors = Vec::new();
        if self.format_version != CONFIG_FORMAT_VERSION {
            errors.push(format!(
                "format_version {} is not supported (expected {CONFIG_FORMAT_VERSION})",
                self.format_version
            ));
        }
        if self.node_count == 0 || self.node_count > MAX_NODES {
            errors.push(format!("node_count {} outside 1..={MAX_NODES}", self.node_count));
            return errors;
        }
        if self.run_ticks == 0 {
            errors.push("run_ticks must be > 0".into());
        }
        if self.nodes.len() > self.node_count {
            errors.push(format!("{} node entries for {} nodes", self.nodes.len(), self.node_count));
        }
        if let Err(e) = self.calibration.validate() {
            errors.push(format!("calibration: {e}"));
        }
        if let Err(e) = self.barrier.validate(self.node_count) {
            errors.push(format!("barrier: {e}"));
        }
        for (i, n) in self.nodes.iter().enumerate() {
            for s in &n.sources {
                if let Err(e) = s.validate() {
                    errors.push(format!("node {i}: {e}"));
                }
            }
        }
        errors
    }

    /// Sets a dotted `key` to `value`, parsed as a TOML value when possible
    /// and as a plain string otherwise. Keys not naming a top-level field
    /// are taken relative to `calibration`.
    pub fn apply_override(&mut self, key: &str, value: &str) -> Result<(), String> {
        const TOP: [&str; 8] =
            ["format_version", "node_count", "run_ticks", "seed", "calibration", "barrier", "fabric", "nodes"];
        let first = key.split('.').next().unwrap_or_default();
        let path = if TOP.contains(&first) { key.to_string() } else { format!("calibration.{key}") };

        let parsed = toml::from_str::<toml::Table>(&format!("v = {value}"))
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(value.to_string()));

        let mut root = toml::Value::try_from(&*self).map_err(|e| e.to_string())?;
        let mut cur = &mut root;
        let parts: Vec<&str> = path.split('.').collect();
        for (depth, part) in parts.iter().enumerate() {
            let last = depth + 1 == parts.len();
            cur = match cur {
                toml::Value::Table(t) => {
                    if last {
                        t.insert(part.to_string(), parsed);
                        break;
                    }
                    t.entry(part.to_string()).or_insert_with(|| toml::Value::Table(Default::default()))
                }
                toml::Value::Array(a) => {
                    let idx: usize = part.parse().map_err(|_| format!("`{key}`: `{part}` is not an index"))?;
                    let len = a.len();
                    let slot = a.get_mut(idx).ok_or_else(|| format!("`{key}`: index {idx} out of {len}"))?;
                    if last {
                        *slot = parsed;
                        break;
                    }
                    slot
                }
                _ => return Err(format!("`{key}`: `{part}` is not a table")),
            };
        }
        *self = root.try_into().map_err(|e: toml::de::Error| format!("`{key}`: {}", e.message()))?;
        Ok(())
    }
}
