//! Optical and mechanical complex springs and the effective susceptibility
//! of the optomechanical oscillator.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{
    cavity_optical_response, detuning_shape, CavityConfig, MechanicalConfig, OperatingPoint,
    PhotothermalRates, SPEED_OF_LIGHT,
};
use crate::error::ensure_finite;
use crate::{Error, Result};

/// A complex spring `K(Omega) = real_part + i * imaginary_coefficient * Omega`.
///
/// Models both the mechanical spring (`k_m`, `Gamma_m`) and the optical spring
/// (`k_opt`, `Gamma_opt`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexSpring {
    /// Spring constant, N/m.
    pub real_part: f64,
    /// Damping constant, N s/m.
    pub imaginary_coefficient: f64,
}

impl ComplexSpring {
    pub fn new(real_part: f64, imaginary_coefficient: f64) -> Result<Self> {
        ensure_finite("spring.real_part", real_part)?;
        ensure_finite("spring.imaginary_coefficient", imaginary_coefficient)?;
        Ok(Self {
            real_part,
            imaginary_coefficient,
        })
    }

    /// Purely elastic spring with no damping term.
    pub fn elastic(real_part: f64) -> Result<Self> {
        Self::new(real_part, 0.0)
    }

    /// Evaluate `K(Omega)`. At `Omega = 0` the result is exactly the real part.
    pub fn evaluate(&self, omega: f64) -> Complex64 {
        Complex64::new(self.real_part, self.imaginary_coefficient * omega)
    }

    /// Force exerted by this spring for a given displacement of its reference
    /// coordinate: `delta F = -K(Omega) * delta_x`. For the optical spring the
    /// reference coordinate is the effective cavity length change.
    pub fn restoring_force(&self, omega: f64, delta_x: Complex64) -> Complex64 {
        -self.evaluate(omega) * delta_x
    }
}

/// Real component of the optical spring constant in the band well below the
/// cavity decay rate: `k_opt = 16 F^2 omega0 P0 / (pi^2 c^2) * xi0/(1+xi0^2)^2`
/// (N/m).
pub fn optical_spring_constant(cav: &CavityConfig, op: &OperatingPoint) -> f64 {
    16.0 * cav.finesse * cav.finesse * cav.carrier_angular_frequency * op.input_power
        / (std::f64::consts::PI * std::f64::consts::PI * SPEED_OF_LIGHT * SPEED_OF_LIGHT)
        * detuning_shape(op.stationary_detuning)
}

/// Leading-order optical damping constant `Gamma_opt = -k_opt / gamma`
/// (N s/m), used to confirm that bare optical damping is negligible.
///
/// The associated loss angle is `Gamma_opt/(m Omega_opt) = -Omega_opt/gamma`
/// with `Omega_opt = sqrt(k_opt/m)`.
pub fn optical_damping_estimate(cav: &CavityConfig, k_opt: f64, mech: &MechanicalConfig) -> f64 {
    let _ = mech;
    -k_opt / cav.decay_rate()
}

/// Loss angle of the bare optical damping, `-Omega_opt / gamma`.
pub fn optical_damping_loss_angle(cav: &CavityConfig, k_opt: f64, mech: &MechanicalConfig) -> f64 {
    let omega_opt = (k_opt / mech.effective_mass).sqrt();
    -omega_opt / cav.decay_rate()
}

/// Photothermally modified optical spring with the bare optical damping
/// neglected:
///
/// `K_opt-th(Omega) = k_opt * [(w+g)g + Omega^2 + i w Omega] / [(w+g)^2 + Omega^2]`
///
/// with `w = omega_th`, `g = gamma_th`. Algebraically identical to
/// `H_th(Omega) * k_opt`; kept as an explicit rational form so the identity can
/// be cross-checked against [`cavity_optical_response`].
pub fn modified_optical_spring(
    k_opt: f64,
    rates: &PhotothermalRates,
    omega: f64,
) -> Result<Complex64> {
    ensure_finite("k_opt", k_opt)?;
    ensure_finite("omega", omega)?;
    let w = rates.absorption_rate;
    let g = rates.relaxation_rate;
    let pole = w + g;
    let den = pole * pole + omega * omega;
    if den == 0.0 {
        return Err(Error::Singularity(
            "modified optical spring evaluated at its pole (omega_th + gamma_th = 0, Omega = 0)"
                .into(),
        ));
    }
    Ok(Complex64::new(pole * g + omega * omega, w * omega) * (k_opt / den))
}

/// Photothermally modified complex optical spring including a damping term,
/// `K_opt-th = H_th(Omega) * (k_opt + i Gamma_opt Omega)`.
pub fn modified_complex_spring(
    spring: &ComplexSpring,
    rates: &PhotothermalRates,
    omega: f64,
) -> Result<Complex64> {
    Ok(cavity_optical_response(rates, omega)? * spring.evaluate(omega))
}

/// Effective susceptibility of the optomechanical oscillator,
/// `chi_eff(Omega) = 1 / (-m Omega^2 + K_m(Omega) + K_opt-th(Omega))` (m/N).
pub fn effective_susceptibility(
    mech: &MechanicalConfig,
    k_opt: f64,
    rates: &PhotothermalRates,
    omega: f64,
) -> Result<Complex64> {
    ensure_finite("omega", omega)?;
    let springs =
        mech.complex_spring().evaluate(omega) + modified_optical_spring(k_opt, rates, omega)?;
    let den = springs - mech.effective_mass * omega * omega;
    if den.norm_sqr() == 0.0 {
        return Err(Error::Singularity(format!(
            "effective susceptibility has an exact pole at Omega = {omega} rad/s"
        )));
    }
    Ok(den.inv())
}

/// Optomechanical response function `chi_eff(Omega) * H_th(Omega)` (m/N):
/// effective cavity length change per unit external force on the test mass.
pub fn optomechanical_response(
    mech: &MechanicalConfig,
    k_opt: f64,
    rates: &PhotothermalRates,
    omega: f64,
) -> Result<Complex64> {
    Ok(effective_susceptibility(mech, k_opt, rates, omega)?
        * cavity_optical_response(rates, omega)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cavity() -> CavityConfig {
        CavityConfig::from_wavelength(100.0, 0.43, 1.064e-6).unwrap()
    }

    fn mech() -> MechanicalConfig {
        MechanicalConfig::new(2.8e-4, crate::hz_to_rad(14.2), 193.0).unwrap()
    }

    #[test]
    fn spring_is_exactly_real_at_dc() {
        let s = ComplexSpring::new(5.0, 3.0).unwrap();
        assert_eq!(s.evaluate(0.0), Complex64::new(5.0, 0.0));
    }

    #[test]
    fn restoring_force_opposes_displacement() {
        let s = ComplexSpring::elastic(2.0).unwrap();
        let f = s.restoring_force(0.0, Complex64::new(1.5, 0.0));
        assert_eq!(f, Complex64::new(-3.0, 0.0));
    }

    #[test]
    fn spring_constant_vanishes_on_resonance() {
        let op = OperatingPoint::new(0.6, 0.0).unwrap();
        assert_eq!(optical_spring_constant(&cavity(), &op), 0.0);
    }

    #[test]
    fn spring_constant_direct_arithmetic() {
        // Finesse 100, 0.6 W, xi0 = 1/sqrt(3), 1064 nm. Frozen from an
        // independent evaluation; the corresponding optical-spring resonance
        // for m = 2.8e-4 kg is 75.03 Hz, the same order as the measured
        // 56.1 Hz maximum.
        let op = OperatingPoint::new(0.6, super::super::peak_detuning()).unwrap();
        let k = optical_spring_constant(&cavity(), &op);
        assert_relative_eq!(k, 62.22299689555261, max_relative = 1e-12);
        let f_opt = crate::rad_to_hz((k / 2.8e-4).sqrt());
        assert_relative_eq!(f_opt, 75.02682672141168, max_relative = 1e-12);
        assert!(f_opt / 56.1 > 1.0 / 3.0 && f_opt / 56.1 < 3.0);
    }

    #[test]
    fn spring_constant_shares_detuning_dependence_with_absorption_rate() {
        let cav = cavity();
        let cry = super::super::CrystalConfig::new(
            2.0e-6, 0.5, 0.01, 2.0e-2, 0.66, 2.2, 3.0e3, 690.0, 4.0e-5,
        )
        .unwrap();
        let peak = super::super::peak_detuning();
        let k_ref = optical_spring_constant(&cav, &OperatingPoint::new(0.6, peak).unwrap());
        let w_ref =
            super::super::photothermal_rates(&cav, &cry, &OperatingPoint::new(0.6, peak).unwrap())
                .unwrap()
                .absorption_rate;
        for xi0 in [0.2, 0.7, 1.3, 2.4] {
            let op = OperatingPoint::new(0.6, xi0).unwrap();
            let k = optical_spring_constant(&cav, &op);
            let w = super::super::photothermal_rates(&cav, &cry, &op)
                .unwrap()
                .absorption_rate;
            assert_relative_eq!(k / k_ref, w / w_ref, max_relative = 1e-12);
        }
    }

    #[test]
    fn damping_estimate_sign_and_magnitude() {
        let cav = cavity();
        let m = mech();
        assert_eq!(optical_damping_estimate(&cav, 0.0, &m), 0.0);
        let k = 34.8; // ~56 Hz resonance for 2.8e-4 kg
        assert!(optical_damping_estimate(&cav, k, &m) < 0.0);
        let loss = optical_damping_loss_angle(&cav, k, &m);
        assert!(loss < 0.0);
        // -Omega_opt/gamma with gamma ~ 1.1e7 rad/s: about -3e-5
        assert!(
            loss.abs() > 1e-5 && loss.abs() < 1e-4,
            "loss angle ~ -1e-5, got {loss}"
        );
    }

    #[test]
    fn modified_spring_dc_and_identity_limits() {
        let rates = PhotothermalRates::new(200.0, 100.0).unwrap();
        let dc = modified_optical_spring(4.0, &rates, 0.0).unwrap();
        assert_relative_eq!(dc.re, 4.0 * 100.0 / 300.0, max_relative = 1e-14);
        assert_eq!(dc.im, 0.0);

        let none = PhotothermalRates::new(0.0, 100.0).unwrap();
        for omega in [0.0, 10.0, 1e4] {
            let k = modified_optical_spring(4.0, &none, omega).unwrap();
            assert_relative_eq!(k.re, 4.0, max_relative = 1e-14);
            assert_eq!(k.im, 0.0);
        }
    }

    #[test]
    fn modified_spring_imaginary_part_peaks_at_balanced_rates() {
        // At fixed relaxation rate, fixed spring constant, and Omega well
        // below both rates, Im K_opt-th is maximal when omega_th = gamma_th.
        let gamma_th = 1000.0;
        let omega = 1.0;
        let balanced = modified_optical_spring(
            1.0,
            &PhotothermalRates::new(gamma_th, gamma_th).unwrap(),
            omega,
        )
        .unwrap()
        .im;
        for ratio in [0.05, 0.3, 0.7, 0.9, 1.1, 1.5, 3.0, 20.0] {
            let rates = PhotothermalRates::new(ratio * gamma_th, gamma_th).unwrap();
            let im = modified_optical_spring(1.0, &rates, omega).unwrap().im;
            assert!(im <= balanced + 1e-18, "ratio {ratio}: {im} > {balanced}");
        }
    }

    #[test]
    fn susceptibility_bare_resonance_phase() {
        let m = mech();
        let rates = PhotothermalRates::new(0.0, 100.0).unwrap();
        let chi = effective_susceptibility(&m, 0.0, &rates, m.resonance_angular_frequency).unwrap();
        let expect = 1.0 / (m.damping_constant() * m.resonance_angular_frequency);
        assert_relative_eq!(chi.im, -expect, max_relative = 1e-12);
        assert!(chi.re.abs() < 1e-9 * chi.im.abs());
        assert_relative_eq!(chi.arg().to_degrees(), -90.0, max_relative = 1e-9);
    }

    #[test]
    fn susceptibility_static_compliance() {
        let m = mech();
        let rates = PhotothermalRates::new(0.0, 100.0).unwrap();
        let chi = effective_susceptibility(&m, 0.0, &rates, 0.0).unwrap();
        assert_relative_eq!(chi.re, 1.0 / m.spring_constant(), max_relative = 1e-14);
        assert_eq!(chi.im, 0.0);
    }

    #[test]
    fn optical_spring_shifts_resonance() {
        // With omega_th = 0 the real part of the denominator vanishes at
        // sqrt((k_m + k_opt)/m); bisect on it as an independent oracle.
        let m = mech();
        let rates = PhotothermalRates::new(0.0, 100.0).unwrap();
        let k_opt = 3.0 * m.spring_constant();
        let real_den = |omega: f64| {
            let s = m.complex_spring().evaluate(omega)
                + modified_optical_spring(k_opt, &rates, omega).unwrap();
            s.re - m.effective_mass * omega * omega
        };
        let (mut lo, mut hi) = (
            m.resonance_angular_frequency,
            10.0 * m.resonance_angular_frequency,
        );
        assert!(real_den(lo) > 0.0 && real_den(hi) < 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if real_den(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let root = 0.5 * (lo + hi);
        let expect = ((m.spring_constant() + k_opt) / m.effective_mass).sqrt();
        assert_relative_eq!(root, expect, max_relative = 1e-10);
    }

    #[test]
    fn exact_pole_is_a_singularity_error() {
        // a negative spring constant cancelling the DC stiffness puts the
        // denominator exactly at zero at Omega = 0
        let m = mech();
        let rates = PhotothermalRates::new(100.0, 100.0).unwrap();
        let dc_response = 100.0 / 200.0;
        let k_opt = -m.spring_constant() / dc_response;
        match effective_susceptibility(&m, k_opt, &rates, 0.0) {
            Err(crate::Error::Singularity(_)) => {}
            other => panic!("expected singularity, got {other:?}"),
        }
    }

    #[test]
    fn optomechanical_response_reduces_to_susceptibility() {
        let m = mech();
        let rates = PhotothermalRates::new(0.0, 100.0).unwrap();
        for omega in [1.0, 50.0, 500.0] {
            let full = optomechanical_response(&m, 1.0, &rates, omega).unwrap();
            let chi = effective_susceptibility(&m, 1.0, &rates, omega).unwrap();
            assert_relative_eq!(full.re, chi.re, max_relative = 1e-13);
            assert_relative_eq!(full.im, chi.im, max_relative = 1e-13);
        }
    }

    #[test]
    fn optomechanical_phase_is_sum_of_factor_phases() {
        let m = mech();
        let rates = PhotothermalRates::new(150.0, 180.0).unwrap();
        for omega in [5.0, 90.0, 400.0, 2000.0] {
            let full = optomechanical_response(&m, 2.0, &rates, omega).unwrap();
            let chi = effective_susceptibility(&m, 2.0, &rates, omega).unwrap();
            let h = cavity_optical_response(&rates, omega).unwrap();
            let lhs = full.arg();
            let mut rhs = chi.arg() + h.arg();
            // compare angles modulo 2 pi
            while rhs - lhs > std::f64::consts::PI {
                rhs -= 2.0 * std::f64::consts::PI;
            }
            while lhs - rhs > std::f64::consts::PI {
                rhs += 2.0 * std::f64::consts::PI;
            }
            assert_relative_eq!(lhs, rhs, epsilon = 1e-12);
        }
    }

    #[test]
    fn optomechanical_phase_exceeds_minus_180_with_absorption() {
        // Above the spring resonance the bare oscillator approaches -180 deg;
        // a positive absorption rate leads the phase beyond that.
        let m = mech();
        let k_opt = 34.8;
        let with = PhotothermalRates::new(crate::hz_to_rad(30.0), crate::hz_to_rad(30.0)).unwrap();
        let without = PhotothermalRates::new(0.0, crate::hz_to_rad(30.0)).unwrap();
        let omega = crate::hz_to_rad(500.0);
        let bare = optomechanical_response(&m, k_opt, &without, omega).unwrap();
        let led = optomechanical_response(&m, k_opt, &with, omega).unwrap();
        assert!(bare.arg() < 0.0 && bare.arg().to_degrees() > -180.0);
        assert!(led.arg().to_degrees() > bare.arg().to_degrees());
    }
}
