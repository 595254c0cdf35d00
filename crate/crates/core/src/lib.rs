//! Simulation and analysis toolkit for anonymous broadcasting over a
//! continuous-variable toric-code resource state.
//!
//! The crate has two computation paths that check each other:
//!
//! - [`gaussian`]: exact dense Gaussian simulation — build the cluster
//!   state, measure it down to the code state, displace, and read out arc
//!   observables;
//! - [`closed_form`] and [`anonymity`]: the analytic covariances, the
//!   Chebyshev-determinant identification bound, channel capacity, and the
//!   Bayesian attacker.
//!
//! [`lattice`] supplies the geometry, [`protocol`] runs broadcast rounds on
//! either path, [`resilience`] covers percolation-based wedge sizing and
//! the monitored-decay error-suppression regime, and [`calibration`]
//! converts hardware squeezing levels to the effective factor used
//! everywhere else.

pub mod anonymity;
pub mod calibration;
pub mod closed_form;
pub mod error;
pub mod gaussian;
pub mod lattice;
pub mod protocol;
pub mod resilience;

pub use error::{Error, Result};
