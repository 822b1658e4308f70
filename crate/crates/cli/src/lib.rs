//! Configuration parsing, scenario dispatch, and trace serialization for
//! the synthetic-lattice simulator binary.

// validation guards use `!(x > 0.0)` so that NaN inputs are rejected
// together with the out-of-range ones
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod output;
pub mod run;

use thiserror::Error;

/// CLI-level errors, mapped onto process exit codes:
/// configuration problems exit 2, numerical guard violations exit 3,
/// comparison tolerance breaches exit 4.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("numerical guard: {0}")]
    Numerical(pinemsim_core::Error),

    #[error("comparison tolerance breached: L2 = {l2:.3e} > {tolerance:.3e}")]
    Tolerance { l2: f64, tolerance: f64 },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl From<pinemsim_core::Error> for CliError {
    fn from(e: pinemsim_core::Error) -> Self {
        use pinemsim_core::Error::*;
        match e {
            WindowOverflow { .. }
            | CflViolation { .. }
            | BoundaryMass { .. }
            | StepTooLarge { .. } => CliError::Numerical(e),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Tolerance { .. } => 4,
            CliError::Io { .. } => 1,
        }
    }
}
