//! Simulation and parameter estimation for optical cavities containing a
//! photothermally absorptive crystal, optionally coupled to a suspended mirror.
//!
//! The crate is organized in three layers:
//!
//! * [`model`] — domain configuration types and the closed-form frequency-domain
//!   expressions (intracavity power, photothermal rates, cavity optical response,
//!   optical spring, effective susceptibility).
//! * [`sim`] — time-domain integration of the nonlinear detuning ODE: cavity
//!   scans, heater-driven self-locking, and small-signal probes that serve as an
//!   independent oracle for the linearized model.
//! * [`fit`] — weighted nonlinear least squares on phase-response data: the
//!   fixed-mirror and suspended-mirror estimation pipelines, detuning-curve and
//!   power-law aggregation, and the Monte-Carlo method comparison.
//!
//! All internal angular quantities are in rad/s; conversions to/from Hz happen
//! at the I/O boundary. Every function here is pure: identical inputs produce
//! bit-identical outputs.

pub mod error;
pub mod fit;
pub mod model;
pub mod sim;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Convert a frequency in Hz to an angular frequency in rad/s.
#[inline]
pub fn hz_to_rad(f_hz: f64) -> f64 {
    2.0 * std::f64::consts::PI * f_hz
}

/// Convert an angular frequency in rad/s to a frequency in Hz.
#[inline]
pub fn rad_to_hz(omega: f64) -> f64 {
    omega / (2.0 * std::f64::consts::PI)
}
