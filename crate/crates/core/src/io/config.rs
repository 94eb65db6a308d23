// SPDX-License-Identifier: Apache-2.0

//! SimConfig as TOML, with an optional checksum header line.

use super::container::{unwrap_text, wrap_text};
use super::IoError;
use crate::engine::{SimConfig, CONFIG_FORMAT_VERSION};

const KIND: &str = "config";

/// Parses a config file. A leading `# spikefabric-config v1 ...` line, when
/// present, is verified; hand-written files may omit it.
pub fn load_config(text: &str) -> Result<SimConfig, IoError> {
    let body = unwrap_text(KIND, CONFIG_FORMAT_VERSION, text, false)?;
    let value: toml::Table = toml::from_str(body).map_err(|e| IoError::Toml(e.to_string()))?;
    match value.get("format_version").and_then(toml::Value::as_integer) {
        Some(v) if v == i64::from(CONFIG_FORMAT_VERSION) => {}
        Some(v) => {
            return Err(IoError::Version {
                found: u32::try_from(v).unwrap_or(u32::MAX),
                supported: CONFIG_FORMAT_VERSION,
            })
        }
        None => return Err(IoError::Toml("missing integer `format_version`".into())),
    }
    toml::Value::Table(value).try_into().map_err(|e: toml::de::Error| IoError::Toml(e.to_string()))
}

/// Serializes with a checksum header.
pub fn store_config(config: &SimConfig) -> Result<String, IoError> {
    let body = toml::to_string(config).map_err(|e| IoError::Toml(e.to_string()))?;
    Ok(wrap_text(KIND, CONFIG_FORMAT_VERSION, &body))
}
