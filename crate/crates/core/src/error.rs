//! Error types shared across the solvers.

use thiserror::Error;

/// Everything that can go wrong in a solver or parameter derivation.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A physical input is outside its admissible range.
    #[error("domain error: {0}")]
    Domain(String),

    /// Population reached the edge of the sideband window.
    #[error(
        "window overflow at t = {time} fs: edge population {population:.3e} exceeds {limit:.1e}"
    )]
    WindowOverflow {
        time: f64,
        population: f64,
        limit: f64,
    },

    /// Integration step too large for the requested dynamics.
    #[error("step {step} fs exceeds stability bound {bound} fs")]
    StepTooLarge { step: f64, bound: f64 },

    /// Transport is under-resolved on the spatial grid.
    #[error("CFL violation: beta*dtau/dz = {ratio:.3} exceeds 1")]
    CflViolation { ratio: f64 },

    /// Too much wavefunction mass near the grid boundary for a valid
    /// sideband projection.
    #[error(
        "boundary mass {mass:.3e} in the outer {fraction:.0}% of the grid exceeds {limit:.1e}"
    )]
    BoundaryMass {
        mass: f64,
        fraction: f64,
        limit: f64,
    },

    /// The spatial domain cannot hold the requested wavepacket.
    #[error("domain too small: {0}")]
    DomainTooSmall(String),

    /// Invalid grid or window specification.
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    /// Two traces cannot be compared point by point.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// A scenario received parameters it cannot run with.
    #[error("scenario error: {0}")]
    Scenario(String),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Soft validity marker attached to closed-form results whose accuracy
/// assumptions are only marginally satisfied.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Validity {
    Ok,
    Warning(String),
}

impl Validity {
    pub fn is_ok(&self) -> bool {
        matches!(self, Validity::Ok)
    }
}
