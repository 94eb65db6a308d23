// SPDX-License-Identifier: Apache-2.0

//! Simulation kernel, configuration and results.

pub mod calibration;
pub mod config;
pub mod path;
pub mod report;
mod sim;

pub use calibration::{Calibration, MgtLinkConfig};
pub use config::{FabricSpec, NodeConfig, SimConfig, CONFIG_FORMAT_VERSION};
pub use path::{path_delay, PathBreakdown};
pub use report::{Conservation, LatencySummary, Percentiles, RunReport, BIN_NS};
pub use sim::{run, EngineError, Simulation, Snapshot};
