//! Batch front-end: reads a run config, executes one subcommand and writes a
//! JSON summary plus per-state CSV traces.

pub mod config;
pub mod record;
pub mod run;

pub use config::RunConfig;
pub use run::{execute, Command, Outcome};

use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_PARSE: i32 = 3;
pub const EXIT_NOT_CONVERGED: i32 = 4;
pub const EXIT_INVARIANT: i32 = 5;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("could not read integrals: {0}")]
    Parse(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("did not converge: {0}")]
    NotConverged(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => EXIT_CONFIG,
            RunError::Parse(_) => EXIT_PARSE,
            RunError::Invariant(_) => EXIT_INVARIANT,
            RunError::NotConverged(_) => EXIT_NOT_CONVERGED,
            RunError::Io(_) => EXIT_IO,
        }
    }
}

impl From<ssvqd_core::Error> for RunError {
    fn from(e: ssvqd_core::Error) -> Self {
        use ssvqd_core::Error as E;
        match e {
            E::MissingHeaderKey(_)
            | E::MalformedHeader(_)
            | E::Parse { .. }
            | E::IndexOutOfRange { .. }
            | E::InconsistentEntry { .. } => RunError::Parse(e.to_string()),
            E::InvalidConfig(_) | E::InfeasibleSector(_) => RunError::Config(e.to_string()),
            E::NotConverged { .. } => RunError::NotConverged(e.to_string()),
            E::OrbitalOutOfRange { .. } | E::ShapeMismatch(_) | E::RankDeficient { .. } | E::NotOrthonormal { .. } => {
                RunError::Invariant(e.to_string())
            }
        }
    }
}

impl From<serde_json::Error> for RunError {
    fn from(e: serde_json::Error) -> Self {
        RunError::Io(e.into())
    }
}

impl From<csv::Error> for RunError {
    fn from(e: csv::Error) -> Self {
        RunError::Io(e.into())
    }
}
