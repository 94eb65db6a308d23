// SPDX-License-Identifier: Apache-2.0

//! Experiment drivers built on the engine: latency sweeps, link throughput
//! and barrier scenarios.

pub mod barrier;
pub mod sweep;
pub mod throughput;

use thiserror::Error;

use crate::engine::EngineError;
use crate::link::LinkError;
use crate::netcompiler::CompileError;

pub use barrier::{barrier_bench, BarrierBenchSpec, BarrierReport, BarrierScenario};
pub use sweep::{
    fan_in_config, fan_in_connections, latency_sweep, period_for_rate, SweepPoint, SweepResult, SweepSpec,
};
pub use throughput::{bench_throughput, Lane, ThroughputResult};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid experiment: {0}")]
    Spec(String),
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Link(#[from] LinkError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Io(String),
}
