//! Experiment harness behind the `menumatch` binary.
//!
//! The binary is a thin shell over this library: [`config`] parses and
//! validates experiment descriptions (hand-written JSON or a bundled
//! preset), [`runner`] expands the sweep grid and executes every
//! (cell, seed) pair on a worker pool, and [`output`] renders the results
//! as per-trial CSV, aggregate JSON, winner tables, and per-region rates.
//! Everything is exposed so integration tests can drive full benchmarks
//! in-process instead of shelling out.

pub mod config;
pub mod output;
pub mod runner;

use thiserror::Error;

/// A failed command, split by how the process should exit: usage problems
/// (bad config, unreadable files, unknown names) versus tripped size guards
/// that an explicit override flag would waive.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Guard(String),
}

impl CliError {
    /// Process exit code: 2 for usage errors, 3 for guard rejections.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Guard(_) => 3,
        }
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn guard(msg: impl Into<String>) -> Self {
        CliError::Guard(msg.into())
    }
}
