//! Frequency-wise L2 stability certificates for square MIMO LTI feedback loops.
//!
//! The crate evaluates, at each frequency of a grid, the quantities that the
//! gain and phase stability conditions are built from:
//!
//! - [`srg`]: scaled relative graphs of complex matrices, the maximum gain
//!   `σ_max` and the maximum singular angle `α̂_max`, and the τ-ray distance
//!   from the SRG to the point `-1`.
//! - [`numrange`]: numerical range boundaries, sectoriality classes and
//!   sectorial phases.
//! - [`stability`]: per-frequency verdicts and grid sweeps producing the
//!   small-gain, SRG small-phase, classic small-phase, mixed gain/phase and
//!   τ-SRG certificates, reconciled against a closed-loop eigenvalue oracle.
//! - [`lti`]: transfer matrices, realizations, feedback interconnection and
//!   the model JSON format.
//!
//! All frequencies are in rad/s and all angles in radians.

pub mod error;
pub mod linalg;
pub mod lti;
pub mod numrange;
pub mod rng;
pub mod srg;
pub mod stability;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Dense complex matrix used for frequency responses.
pub type CMatrix = nalgebra::DMatrix<Complex64>;
/// Dense complex vector.
pub type CVector = nalgebra::DVector<Complex64>;
/// Dense real matrix used for state-space data.
pub type RMatrix = nalgebra::DMatrix<f64>;
