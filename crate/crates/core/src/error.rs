//! Top-level error and the process exit-code contract.

use std::io;
use std::path::PathBuf;

use thiserror::Error;

use crate::engine::EngineError;
use crate::observables::ScanError;

pub mod exit {
    pub const OK: i32 = 0;
    pub const SPEC: i32 = 1;
    pub const IO: i32 = 2;
    pub const TOLERANCE: i32 = 3;
}

#[derive(Debug, Error)]
pub enum Error {
    /// Rendered diagnostics or an invalid request.
    #[error("{0}")]
    Spec(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Scan(#[from] ScanError),
    #[error("tolerance check failed: {0}")]
    Tolerance(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// 1 for anything wrong with the experiment, 2 for I/O, 3 when the
    /// engines disagree beyond tolerance.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Spec(_) | Error::Engine(_) | Error::Scan(_) => exit::SPEC,
            Error::Io { .. } => exit::IO,
            Error::Tolerance(_) => exit::TOLERANCE,
        }
    }
}
