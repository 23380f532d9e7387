//! Validated configuration types for the cavity, crystal, and suspension.

use serde::{Deserialize, Serialize};

use super::{non_negative, positive, ComplexSpring, SPEED_OF_LIGHT};
use crate::error::ensure_finite;
use crate::{Error, Result};

/// Fixed optical-cavity constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityConfig {
    /// Cavity finesse (dimensionless, > 0).
    pub finesse: f64,
    /// One-way cavity length, meters (> 0).
    pub one_way_length: f64,
    /// Carrier angular frequency, rad/s (> 0).
    pub carrier_angular_frequency: f64,
}

impl CavityConfig {
    pub fn new(finesse: f64, one_way_length: f64, carrier_angular_frequency: f64) -> Result<Self> {
        positive("cavity.finesse", finesse)?;
        positive("cavity.one_way_length", one_way_length)?;
        positive(
            "cavity.carrier_angular_frequency",
            carrier_angular_frequency,
        )?;
        Ok(Self {
            finesse,
            one_way_length,
            carrier_angular_frequency,
        })
    }

    /// Construct from the carrier vacuum wavelength in meters.
    pub fn from_wavelength(finesse: f64, one_way_length: f64, wavelength: f64) -> Result<Self> {
        positive("cavity.wavelength", wavelength)?;
        Self::new(
            finesse,
            one_way_length,
            2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / wavelength,
        )
    }

    /// Cavity decay rate `gamma = pi c / (2 F L)`, rad/s.
    pub fn decay_rate(&self) -> f64 {
        std::f64::consts::PI * SPEED_OF_LIGHT / (2.0 * self.finesse * self.one_way_length)
    }

    /// Normalized detuning per meter of effective cavity length change,
    /// `2 F omega0 / (pi c)` (1/m).
    pub fn detuning_per_meter(&self) -> f64 {
        2.0 * self.finesse * self.carrier_angular_frequency
            / (std::f64::consts::PI * SPEED_OF_LIGHT)
    }

    /// Effective cavity length change per unit normalized detuning, meters.
    pub fn meters_per_detuning(&self) -> f64 {
        1.0 / self.detuning_per_meter()
    }
}

/// Photothermal crystal constants.
///
/// `thermal_expansion` includes the thermo-optic contribution and may carry
/// either sign (zero disables the photothermal backaction entirely);
/// `absorption_coefficient` may be zero to model a lossless crystal. All other
/// fields are strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrystalConfig {
    /// Thermal expansion coefficient including thermo-optic effect, 1/K.
    pub thermal_expansion: f64,
    /// Optical absorption coefficient, 1/m (>= 0).
    pub absorption_coefficient: f64,
    /// Crystal length, meters.
    pub crystal_length: f64,
    /// Heat capacity of the absorbing region, J/K.
    pub heat_capacity: f64,
    /// Thermal resistance of the heat outflow path, K/W.
    pub thermal_resistance: f64,
    /// Bulk thermal conductivity, W/(m K).
    pub thermal_conductivity: f64,
    /// Bulk density, kg/m^3.
    pub density: f64,
    /// Bulk specific heat capacity, J/(kg K).
    pub specific_heat_capacity: f64,
    /// Beam radius in the absorbing region, meters.
    pub beam_radius: f64,
}

impl CrystalConfig {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        thermal_expansion: f64,
        absorption_coefficient: f64,
        crystal_length: f64,
        heat_capacity: f64,
        thermal_resistance: f64,
        thermal_conductivity: f64,
        density: f64,
        specific_heat_capacity: f64,
        beam_radius: f64,
    ) -> Result<Self> {
        ensure_finite("crystal.thermal_expansion", thermal_expansion)?;
        non_negative("crystal.absorption_coefficient", absorption_coefficient)?;
        positive("crystal.crystal_length", crystal_length)?;
        positive("crystal.heat_capacity", heat_capacity)?;
        positive("crystal.thermal_resistance", thermal_resistance)?;
        positive("crystal.thermal_conductivity", thermal_conductivity)?;
        positive("crystal.density", density)?;
        positive("crystal.specific_heat_capacity", specific_heat_capacity)?;
        positive("crystal.beam_radius", beam_radius)?;
        Ok(Self {
            thermal_expansion,
            absorption_coefficient,
            crystal_length,
            heat_capacity,
            thermal_resistance,
            thermal_conductivity,
            density,
            specific_heat_capacity,
            beam_radius,
        })
    }

    /// Photothermal relaxation rate `1/(k C)`, rad/s.
    pub fn relaxation_rate(&self) -> f64 {
        1.0 / (self.thermal_resistance * self.heat_capacity)
    }
}

/// Suspended-mirror constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MechanicalConfig {
    /// Effective mass, kg.
    pub effective_mass: f64,
    /// Mechanical resonance angular frequency, rad/s.
    pub resonance_angular_frequency: f64,
    /// Mechanical quality factor (dimensionless, finite).
    pub quality_factor: f64,
}

impl MechanicalConfig {
    pub fn new(
        effective_mass: f64,
        resonance_angular_frequency: f64,
        quality_factor: f64,
    ) -> Result<Self> {
        positive("mechanics.effective_mass", effective_mass)?;
        positive(
            "mechanics.resonance_angular_frequency",
            resonance_angular_frequency,
        )?;
        positive("mechanics.quality_factor", quality_factor)?;
        Ok(Self {
            effective_mass,
            resonance_angular_frequency,
            quality_factor,
        })
    }

    /// Mechanical spring constant `k_m = m Omega_m^2`, N/m.
    pub fn spring_constant(&self) -> f64 {
        self.effective_mass * self.resonance_angular_frequency * self.resonance_angular_frequency
    }

    /// Mechanical damping constant `Gamma_m = m Omega_m / Q_m`, N s/m.
    pub fn damping_constant(&self) -> f64 {
        self.effective_mass * self.resonance_angular_frequency / self.quality_factor
    }

    /// The complex mechanical spring `K_m(Omega) = k_m + i Gamma_m Omega`.
    pub fn complex_spring(&self) -> ComplexSpring {
        ComplexSpring {
            real_part: self.spring_constant(),
            imaginary_coefficient: self.damping_constant(),
        }
    }
}

/// Per-measurement operating settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    /// Carrier power incident on the cavity, watts (>= 0).
    pub input_power: f64,
    /// Stationary normalized detuning (any finite real; the sign selects the
    /// pole branch of the cavity optical response).
    pub stationary_detuning: f64,
}

impl OperatingPoint {
    pub fn new(input_power: f64, stationary_detuning: f64) -> Result<Self> {
        non_negative("operating_point.input_power", input_power)?;
        if !stationary_detuning.is_finite() {
            return Err(Error::config(
                "operating_point.stationary_detuning",
                format!("must be finite, got {stationary_detuning}"),
            ));
        }
        Ok(Self {
            input_power,
            stationary_detuning,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn decay_rate_matches_reference_hardware() {
        // Finesse 100, one-way length 0.43 m: gamma ~ 1.1e7 rad/s.
        let cav = CavityConfig::from_wavelength(100.0, 0.43, 1.064e-6).unwrap();
        assert_relative_eq!(cav.decay_rate(), 1.0951462600632867e7, max_relative = 1e-12);
    }

    #[test]
    fn invalid_cavity_rejected() {
        assert!(CavityConfig::new(0.0, 0.43, 1.0e15).is_err());
        assert!(CavityConfig::new(100.0, -1.0, 1.0e15).is_err());
        assert!(CavityConfig::new(100.0, 0.43, f64::NAN).is_err());
    }

    #[test]
    fn crystal_relaxation_rate_positive() {
        let cry = CrystalConfig::new(1e-5, 0.5, 0.01, 2e-2, 1.0, 2.2, 3.0e3, 690.0, 4e-5).unwrap();
        assert!(cry.relaxation_rate() > 0.0);
        assert_relative_eq!(
            cry.relaxation_rate(),
            1.0 / (1.0 * 2e-2),
            max_relative = 1e-15
        );
    }

    #[test]
    fn crystal_allows_negative_expansion_and_zero_absorption() {
        assert!(CrystalConfig::new(-1e-5, 0.0, 0.01, 2e-2, 1.0, 2.2, 3.0e3, 690.0, 4e-5).is_ok());
    }

    #[test]
    fn crystal_rejects_non_positive_bulk_properties() {
        assert!(CrystalConfig::new(1e-5, 0.5, 0.01, 0.0, 1.0, 2.2, 3.0e3, 690.0, 4e-5).is_err());
        assert!(CrystalConfig::new(1e-5, 0.5, 0.01, 2e-2, -1.0, 2.2, 3.0e3, 690.0, 4e-5).is_err());
        assert!(CrystalConfig::new(1e-5, 0.5, 0.01, 2e-2, 1.0, 2.2, 3.0e3, 690.0, 0.0).is_err());
    }

    #[test]
    fn mechanical_derived_constants() {
        let mech = MechanicalConfig::new(2.8e-4, 2.0 * std::f64::consts::PI * 14.2, 193.0).unwrap();
        let om = mech.resonance_angular_frequency;
        assert_relative_eq!(
            mech.spring_constant(),
            2.8e-4 * om * om,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            mech.damping_constant(),
            2.8e-4 * om / 193.0,
            max_relative = 1e-15
        );
    }

    #[test]
    fn operating_point_rejects_negative_power() {
        assert!(OperatingPoint::new(-0.1, 0.0).is_err());
        assert!(OperatingPoint::new(0.1, f64::INFINITY).is_err());
        assert!(OperatingPoint::new(0.0, -2.5).is_ok());
    }
}
