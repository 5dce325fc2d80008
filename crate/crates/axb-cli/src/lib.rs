//! Batch driver around `qaxb`: self-tests, convergence sweeps and
//! representation scenarios with JSON/CSV reports.

pub mod config;
pub mod report;
pub mod scenarios;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("infeasible scenario: {0}")]
    Infeasible(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_ERROR: i32 = 2;
