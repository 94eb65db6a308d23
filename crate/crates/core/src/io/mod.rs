// SPDX-License-Identifier: Apache-2.0

//! External file formats: connectivity text, FabricProgram binary, SimConfig
//! TOML and RunReport directories. Every loader returns a value or an
//! [`IoError`]; none panics on malformed input.

pub mod config;
pub mod connectivity;
pub mod container;
pub mod program;
pub mod report;

use std::path::Path;

use thiserror::Error;

use crate::engine::SimConfig;
use crate::netcompiler::{compile, verify, FabricProgram, LogicalConnection};

pub use config::{load_config, store_config};
pub use connectivity::{parse_connectivity, serialize_connectivity, Connectivity};
pub use program::{load_program, store_program};
pub use report::{load_report, report_files, report_from_files, store_report};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IoError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("not a spikefabric file of the expected kind")]
    Magic,
    #[error("format version {found} is not supported (expected {supported})")]
    Version { found: u32, supported: u32 },
    #[error("truncated: needed {needed} bytes, found {found}")]
    Truncated { needed: u64, found: u64 },
    #[error("checksum mismatch: stored {stored:08x}, computed {computed:08x}")]
    Checksum { stored: u32, computed: u32 },
    #[error("malformed contents: {0}")]
    Malformed(String),
    #[error("missing file {0}")]
    Missing(String),
    #[error("toml: {0}")]
    Toml(String),
    #[error("json: {0}")]
    Json(String),
    #[error("csv: {0}")]
    Csv(String),
    #[error("{path}: {reason}")]
    Fs { path: String, reason: String },
}

impl From<csv::Error> for IoError {
    fn from(e: csv::Error) -> Self {
        IoError::Csv(e.to_string())
    }
}

impl IoError {
    pub fn fs(path: &Path, e: std::io::Error) -> Self {
        IoError::Fs { path: path.display().to_string(), reason: e.to_string() }
    }
}

pub fn read_bytes(path: &Path) -> Result<Vec<u8>, IoError> {
    std::fs::read(path).map_err(|e| IoError::fs(path, e))
}

pub fn read_text(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|e| IoError::fs(path, e))
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    std::fs::write(path, bytes).map_err(|e| IoError::fs(path, e))
}

/// Routing tables for a config, with the connectivity they were checked against.
#[derive(Debug, Clone)]
pub struct ResolvedProgram {
    pub program: FabricProgram,
    /// Inline and file connections; `None` when the config names only a program file.
    pub connections: Option<Vec<LogicalConnection>>,
    pub warnings: Vec<String>,
}

/// Builds the routing tables a config asks for. Relative paths resolve
/// against `base_dir`. A program file given together with connections must
/// realize exactly those connections.
pub fn resolve_program(config: &SimConfig, base_dir: &Path) -> Result<ResolvedProgram, crate::Error> {
    let fabric = &config.fabric;
    let mut text = fabric.connections.join("\n");
    if let Some(f) = &fabric.connectivity_file {
        text.push('\n');
        text.push_str(&read_text(&base_dir.join(f))?);
    }
    let has_connections = !fabric.connections.is_empty() || fabric.connectivity_file.is_some();
    let parsed = parse_connectivity(&text)?;
    let program = match &fabric.program_file {
        Some(f) => {
            let program = load_program(&read_bytes(&base_dir.join(f))?)?;
            if has_connections {
                let report = verify(&program, &parsed.connections);
                if !report.is_empty() {
                    return Err(crate::Error::Verify(report));
                }
            }
            program
        }
        None => compile(&parsed.connections, config.node_count)?,
    };
    Ok(ResolvedProgram {
        program,
        connections: has_connections.then_some(parsed.connections),
        warnings: parsed.warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resolves_inline_file_and_program_sources() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("net.txt"), "1 2 -> 0 3\n0 5 -> 1 300\n").unwrap();
        let mut cfg = SimConfig::new(2, 100);
        cfg.fabric.connections = vec!["0 5 -> 1 300".into()];
        cfg.fabric.connectivity_file = Some("net.txt".into());
        let r = resolve_program(&cfg, dir.path()).unwrap();
        assert_eq!(r.connections.as_ref().unwrap().len(), 2);
        assert_eq!(r.warnings.len(), 1);

        write_file(&dir.path().join("net.sfp"), &store_program(&r.program)).unwrap();
        cfg.fabric.program_file = Some("net.sfp".into());
        assert_eq!(resolve_program(&cfg, dir.path()).unwrap().program, r.program);

        cfg.fabric.connections = vec!["0 5 -> 1 301".into()];
        assert!(matches!(resolve_program(&cfg, dir.path()), Err(crate::Error::Verify(_))));
        cfg.fabric = Default::default();
        cfg.fabric.program_file = Some("net.sfp".into());
        assert!(resolve_program(&cfg, dir.path()).unwrap().connections.is_none());
        cfg.fabric.program_file = Some("absent.sfp".into());
        assert!(matches!(resolve_program(&cfg, dir.path()), Err(crate::Error::Io(IoError::Fs { .. }))));
    }
}
