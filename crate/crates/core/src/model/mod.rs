//! Domain configuration types and the closed-form frequency-domain model.
//!
//! Everything in this module is a pure function of immutable configuration
//! values. Angular frequencies are rad/s throughout.

mod config;
mod response;
mod spring;

pub use config::{CavityConfig, CrystalConfig, MechanicalConfig, OperatingPoint};
pub use response::{
    cavity_optical_response, photothermal_forcing, photothermal_rates, physical_relaxation_rate,
    FrequencyResponse, PhotothermalRates, ResponseQuantity,
};
pub use spring::{
    effective_susceptibility, modified_complex_spring, modified_optical_spring,
    optical_damping_estimate, optical_damping_loss_angle, optical_spring_constant,
    optomechanical_response, ComplexSpring,
};

use crate::error::ensure_finite;
use crate::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Intracavity power for an overcoupled cavity near resonance, watts.
///
/// `P = (2F/pi) * P0 / (1 + xi^2)`: maximal at `xi = 0` and even in `xi`.
pub fn intracavity_power(cav: &CavityConfig, op: &OperatingPoint, xi: f64) -> Result<f64> {
    ensure_finite("xi", xi)?;
    Ok(2.0 * cav.finesse / std::f64::consts::PI * op.input_power / (1.0 + xi * xi))
}

/// Normalized cavity detuning produced by an effective cavity length change
/// `x` (meters): `xi = (2 F omega0 / (pi c)) * x`.
pub fn detuning_from_displacement(cav: &CavityConfig, x: f64) -> Result<f64> {
    ensure_finite("x", x)?;
    Ok(cav.detuning_per_meter() * x)
}

/// Detuning dependence `xi / (1 + xi^2)^2` shared by the photothermal
/// absorption rate and the optical spring constant.
pub fn detuning_shape(xi: f64) -> f64 {
    let d = 1.0 + xi * xi;
    xi / (d * d)
}

/// Detuning at which [`detuning_shape`] is maximal over `xi > 0` (`1/sqrt(3)`).
pub fn peak_detuning() -> f64 {
    1.0 / 3.0_f64.sqrt()
}

/// [`detuning_shape`] normalized so its peak over `xi > 0` equals one.
pub fn normalized_detuning_shape(xi: f64) -> f64 {
    detuning_shape(xi) / detuning_shape(peak_detuning())
}

pub(crate) fn positive(field: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::config(
            field,
            format!("must be finite and > 0, got {value}"),
        ))
    }
}

pub(crate) fn non_negative(field: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(Error::config(
            field,
            format!("must be finite and >= 0, got {value}"),
        ))
    }
}
