//! Joint MIMO radar-communication transmit beamforming.
//!
//! The library covers the full pipeline for a dual-functional transmitter:
//!
//! * [`array_model`] — uniform linear array geometry, steering vectors and
//!   beampattern evaluation;
//! * [`channel`] — deterministic Rayleigh downlink channel generation;
//! * [`radar_covariance`] — least-squares beampattern matching of the radar
//!   covariance matrix under power and zero-forcing constraints;
//! * [`objectives`] — SINR-penalized weighted cost functions with analytic
//!   gradients, for both total-power (sphere) and per-antenna (oblique)
//!   formulations;
//! * [`manifolds`] — complex hypersphere and oblique manifold primitives;
//! * [`rcg_solver`] — Riemannian conjugate gradient engine with Armijo line
//!   search and flop accounting;
//! * [`metrics`] — composite beampatterns, PSLR/MSE and achieved-SINR
//!   statistics;
//! * [`harness`] — experiment configs, preset runs and Monte Carlo sweeps.

pub mod array_model;
pub mod channel;
pub mod error;
pub mod harness;
pub mod manifolds;
pub mod metrics;
pub mod objectives;
pub mod radar_covariance;
pub mod rcg_solver;

pub use error::RadcomError;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Dense complex matrix, the universal carrier for channels, beamformers and
/// covariances.
pub type CMat = DMatrix<Complex64>;
/// Dense complex column vector.
pub type CVec = DVector<Complex64>;

/// dBm to linear milliwatts.
pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

/// dB to linear power ratio.
pub fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Linear power ratio to dB.
pub fn lin_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}
