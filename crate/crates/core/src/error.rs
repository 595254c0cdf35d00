//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by lattice construction, Gaussian simulation, and analytics.
#[derive(Debug, Error)]
pub enum Error {
    /// A structural precondition was violated (dimensions, parity, ranges).
    #[error("validation error: {0}")]
    Validation(String),

    /// Wedge partition does not tile the string loop.
    #[error("partition error: {0}")]
    Partition(String),

    /// A scalar parameter is outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Measurement pattern does not match the lattice.
    #[error("pattern error: {0}")]
    Pattern(String),

    /// An observable referenced a mode that does not exist (or was measured out).
    #[error("index error: {0}")]
    Index(String),

    /// A conditional variance or pivot collapsed below numerical resolution.
    #[error("numerical degeneracy: {0}")]
    NumericalDegeneracy(String),

    /// Requested lattice exceeds the dense-engine size cap.
    #[error("engine capacity exceeded: {modes} modes > cap {cap}; use the closed-form path")]
    EngineCapacity { modes: usize, cap: usize },

    /// Fixed-step integration failed its half-step convergence check.
    #[error("integrator step-size failure: {0}")]
    StepSize(String),
}

pub type Result<T> = std::result::Result<T, Error>;
