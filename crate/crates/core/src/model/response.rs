//! Photothermal rates and the linearized optical response of the cavity.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{detuning_shape, CavityConfig, CrystalConfig, OperatingPoint, SPEED_OF_LIGHT};
use crate::error::ensure_finite;
use crate::{Error, Result};

/// Photothermal absorption and relaxation rates at one operating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhotothermalRates {
    /// Absorption rate `omega_th`, rad/s. Sign follows the stationary
    /// detuning and the thermal expansion coefficient.
    pub absorption_rate: f64,
    /// Relaxation rate `gamma_th = 1/(k C)`, rad/s (> 0).
    pub relaxation_rate: f64,
}

impl PhotothermalRates {
    pub fn new(absorption_rate: f64, relaxation_rate: f64) -> Result<Self> {
        ensure_finite("absorption_rate", absorption_rate)?;
        if !(relaxation_rate.is_finite() && relaxation_rate > 0.0) {
            return Err(Error::config(
                "relaxation_rate",
                format!("must be finite and > 0, got {relaxation_rate}"),
            ));
        }
        Ok(Self {
            absorption_rate,
            relaxation_rate,
        })
    }

    /// Pole rate `omega_th + gamma_th` of the cavity optical response.
    pub fn pole_rate(&self) -> f64 {
        self.absorption_rate + self.relaxation_rate
    }
}

/// Strength of the absorption term in the detuning equation of motion,
/// `A = 4 F^2 omega0 alpha alpha' L'^2 P0 / (pi^2 c C)` (rad/s).
///
/// The absorption rate at a stationary detuning `xi0` is
/// `omega_th = 2 A * xi0 / (1 + xi0^2)^2`.
pub fn photothermal_forcing(cav: &CavityConfig, cry: &CrystalConfig, input_power: f64) -> f64 {
    4.0 * cav.finesse
        * cav.finesse
        * cav.carrier_angular_frequency
        * cry.thermal_expansion
        * cry.absorption_coefficient
        * cry.crystal_length
        * cry.crystal_length
        * input_power
        / (std::f64::consts::PI * std::f64::consts::PI * SPEED_OF_LIGHT * cry.heat_capacity)
}

/// Photothermal absorption and relaxation rates for an operating point.
pub fn photothermal_rates(
    cav: &CavityConfig,
    cry: &CrystalConfig,
    op: &OperatingPoint,
) -> Result<PhotothermalRates> {
    let absorption_rate = 2.0
        * photothermal_forcing(cav, cry, op.input_power)
        * detuning_shape(op.stationary_detuning);
    PhotothermalRates::new(absorption_rate, cry.relaxation_rate())
}

/// Optical response of the cavity with the photothermal effect,
/// `H_th(Omega) = (gamma_th + i Omega) / ((omega_th + gamma_th) + i Omega)`.
///
/// Evaluating exactly at `Omega = 0` with a vanishing pole rate is a
/// singularity and returns an error.
pub fn cavity_optical_response(rates: &PhotothermalRates, omega: f64) -> Result<Complex64> {
    ensure_finite("omega", omega)?;
    let den = Complex64::new(rates.pole_rate(), omega);
    if den.norm_sqr() == 0.0 {
        return Err(Error::Singularity(
            "cavity optical response evaluated at its pole (omega_th + gamma_th = 0, Omega = 0)"
                .into(),
        ));
    }
    Ok(Complex64::new(rates.relaxation_rate, omega) / den)
}

/// Photothermal relaxation rate predicted from bulk crystal properties,
/// `gamma_th = kappa_th / (rho C0 r0^2)` (rad/s).
pub fn physical_relaxation_rate(cry: &CrystalConfig) -> f64 {
    cry.thermal_conductivity
        / (cry.density * cry.specific_heat_capacity * cry.beam_radius * cry.beam_radius)
}

/// Which physical quantity a tabulated frequency response holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseQuantity {
    /// Dimensionless cavity optical response `H_th`.
    CavityOpticalResponse,
    /// Optomechanical response `chi_eff * H_th`, m/N.
    OptomechanicalResponse,
    /// Effective susceptibility `chi_eff`, m/N.
    Susceptibility,
}

/// Tabulated complex response over a strictly increasing positive frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyResponse {
    points: Vec<(f64, Complex64)>,
    quantity: ResponseQuantity,
}

impl FrequencyResponse {
    pub fn new(points: Vec<(f64, Complex64)>, quantity: ResponseQuantity) -> Result<Self> {
        let mut prev = 0.0;
        for &(omega, value) in &points {
            if !(omega.is_finite() && omega > prev) {
                return Err(Error::Data(format!(
                    "frequency grid must be strictly increasing and positive, got {omega} after {prev}"
                )));
            }
            if !value.re.is_finite() || !value.im.is_finite() {
                return Err(Error::Data(format!(
                    "non-finite response value at omega = {omega}"
                )));
            }
            prev = omega;
        }
        Ok(Self { points, quantity })
    }

    /// Tabulate a model function over an angular-frequency grid.
    pub fn tabulate<F>(omegas: &[f64], quantity: ResponseQuantity, mut f: F) -> Result<Self>
    where
        F: FnMut(f64) -> Result<Complex64>,
    {
        let points = omegas
            .iter()
            .map(|&w| Ok((w, f(w)?)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(points, quantity)
    }

    pub fn points(&self) -> &[(f64, Complex64)] {
        &self.points
    }

    pub fn quantity(&self) -> ResponseQuantity {
        self.quantity
    }
}
