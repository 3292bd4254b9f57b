//! Near-field MIMO radar toolkit: scenario synthesis, subarray variational
//! inference, message-passing fusion of location and velocity, Cramér-Rao
//! bounds, baseline estimators and a Monte Carlo harness.
//!
//! Indices of antennas, subarrays and pulses are zero-based throughout.

pub mod baselines;
pub mod circular;
pub mod crb;
mod error;
pub mod fusion;
pub mod geometry;
pub mod harness;
pub mod rng;
pub mod subvbi;
pub mod wavefield;

pub use error::{Error, Result};

/// Complex sample type used for every snapshot and steering vector.
pub type C64 = num_complex::Complex<f64>;
/// Cartesian 2-vector (m or m/s).
pub type Vec2 = nalgebra::Vector2<f64>;
/// 2×2 real matrix.
pub type Mat2 = nalgebra::Matrix2<f64>;
