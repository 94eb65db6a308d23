// SPDX-License-Identifier: Apache-2.0

//! Cycle-level model of a star-topology spike interconnect: neuromorphic
//! chips attached to Node-FPGAs, which exchange events over serial links
//! through a central Aggregator FPGA.

pub mod aggregator;
pub mod chip;
pub mod codec;
pub mod engine;
mod error;
pub mod flit;
pub mod harness;
pub mod io;
pub mod link;
pub mod netcompiler;
pub mod node;
pub mod pipeline;
pub mod types;

pub use error::{Error, Result};
