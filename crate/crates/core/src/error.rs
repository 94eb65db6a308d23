// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

use crate::engine::EngineError;
use crate::harness::HarnessError;
use crate::io::IoError;
use crate::netcompiler::{CompileError, VerifyReport};

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error(
        "program does not realize the connectivity: {} missing, {} spurious, {} mislabeled",
        .0.missing.len(), .0.spurious.len(), .0.mislabeled.len()
    )]
    Verify(VerifyReport),
    #[error("{0}")]
    Usage(String),
}

impl Error {
    /// Stable identifier for machine-readable error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io(IoError::Parse { .. }) => "parse",
            Error::Io(IoError::Checksum { .. }) => "checksum",
            Error::Io(IoError::Truncated { .. }) => "truncated",
            Error::Io(IoError::Version { .. }) => "version",
            Error::Io(IoError::Magic) => "magic",
            Error::Io(IoError::Fs { .. }) => "file",
            Error::Io(_) => "format",
            Error::Compile(_) => "compile",
            Error::Engine(EngineError::Config(_)) | Error::Harness(HarnessError::Engine(EngineError::Config(_))) => {
                "config"
            }
            Error::Engine(_) => "engine",
            Error::Harness(HarnessError::Compile(_)) => "compile",
            Error::Harness(_) => "harness",
            Error::Verify(_) => "verify",
            Error::Usage(_) => "usage",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
