//! Small-signal transfer-function probe of the detuning equation.
//!
//! Drives the actuator sinusoidally about a stationary operating point,
//! discards transients, and demodulates the effective cavity length change at
//! the drive frequency. Serves as the independent time-domain oracle for the
//! linearized cavity optical response.

use num_complex::Complex64;

use super::{integrate, DetuningOde, DriveProfile, SolverSettings};
use crate::model::{photothermal_rates, CavityConfig, CrystalConfig, OperatingPoint};
use crate::{Error, Result};

/// Measure the complex response `delta x / delta x_act` at angular frequency
/// `omega` by time-domain simulation.
///
/// The drive amplitude must keep the detuning excursion inside the linear
/// regime, `|delta xi| < 0.05 (1 + xi0^2) / (2 |xi0|)`; violations are
/// rejected before (estimated) and after (measured) the run. Transients are
/// discarded for ten relaxation times of the slowest decay, and demodulation
/// spans an integer number of drive periods covering at least five periods
/// and `10 / min(gamma_th, omega)` seconds.
pub fn probe_small_signal(
    cav: &CavityConfig,
    cry: &CrystalConfig,
    op: &OperatingPoint,
    omega: f64,
    amplitude_m: f64,
) -> Result<Complex64> {
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::Domain(format!(
            "probe frequency must be > 0, got {omega}"
        )));
    }
    if !(amplitude_m.is_finite() && amplitude_m > 0.0) {
        return Err(Error::Domain(format!(
            "probe amplitude must be > 0, got {amplitude_m}"
        )));
    }

    let ode = DetuningOde::new(cav, cry, op.input_power);
    let rates = photothermal_rates(cav, cry, op)?;
    let gamma = rates.relaxation_rate;
    let pole = rates.pole_rate();
    if pole <= 0.0 {
        return Err(Error::Domain(format!(
            "operating point xi0 = {} is linearly unstable (omega_th + gamma_th = {pole} rad/s)",
            op.stationary_detuning
        )));
    }

    let xi0 = op.stationary_detuning;
    let s = ode.detuning_per_meter;
    // |H_th| is bounded by max(1, gamma/(omega_th+gamma)) over all frequencies
    let gain_bound = (gamma / pole).max(1.0);
    let excursion_estimate = 1.05 * s * amplitude_m * gain_bound;
    let guard = linearity_limit(xi0);
    if excursion_estimate > guard {
        return Err(Error::LinearityGuard {
            excursion: excursion_estimate,
            limit: guard,
            suggested_amplitude_m: 0.5 * guard / (s * gain_bound),
        });
    }

    // actuator bias holding the stationary detuning
    let bias_m = (xi0 - ode.forcing / (gamma * (1.0 + xi0 * xi0))) / s;
    let drive = DriveProfile::Sinusoid {
        bias_m,
        amplitude_m,
        angular_frequency: omega,
    };

    let period = 2.0 * std::f64::consts::PI / omega;
    let settle = 10.0 / gamma.min(pole);
    let t_meas_start = (settle / period).ceil().max(1.0) * period;
    let n_periods = (10.0 / (gamma.min(omega) * period)).ceil().max(5.0);
    let t_meas = n_periods * period;

    let solver = SolverSettings::for_fastest_rate(
        gamma
            .max(rates.absorption_rate.abs())
            .max(omega)
            .max(ode.fastest_rate()),
    );

    // settle phase: detuning only
    let mut rhs1 = |t: f64, y: &[f64; 1]| [ode.rate(t, y[0], &drive)];
    let settled = integrate(&mut rhs1, 0.0, [xi0], t_meas_start, &solver, |_| {})?;

    // measurement phase: detuning plus the two quadrature accumulators of
    // the effective cavity length change
    let mpd = 1.0 / s;
    let norm = 2.0 / t_meas;
    let mut rhs3 = |t: f64, y: &[f64; 3]| {
        let delta_x = (y[0] - xi0) * mpd;
        [
            ode.rate(t, y[0], &drive),
            norm * delta_x * (omega * t).sin(),
            norm * delta_x * (omega * t).cos(),
        ]
    };
    let mut max_excursion: f64 = 0.0;
    let end = integrate(
        &mut rhs3,
        t_meas_start,
        [settled[0], 0.0, 0.0],
        t_meas_start + t_meas,
        &solver,
        |step| {
            max_excursion = max_excursion.max((step.y1[0] - xi0).abs());
        },
    )?;

    if max_excursion > guard {
        return Err(Error::LinearityGuard {
            excursion: max_excursion,
            limit: guard,
            suggested_amplitude_m: 0.5 * amplitude_m * guard / max_excursion,
        });
    }

    Ok(Complex64::new(end[1], end[2]) / amplitude_m)
}

/// Detuning excursion limit of the linear regime about `xi0`.
pub fn linearity_limit(xi0: f64) -> f64 {
    if xi0 == 0.0 {
        f64::INFINITY
    } else {
        0.05 * (1.0 + xi0 * xi0) / (2.0 * xi0.abs())
    }
}

/// Largest drive amplitude (meters) that passes the pre-run linearity check
/// at this operating point, with a factor-of-two margin.
pub fn max_probe_amplitude(
    cav: &CavityConfig,
    cry: &CrystalConfig,
    op: &OperatingPoint,
) -> Result<f64> {
    let rates = photothermal_rates(cav, cry, op)?;
    let pole = rates.pole_rate();
    if pole <= 0.0 {
        return Err(Error::Domain(format!(
            "operating point xi0 = {} is linearly unstable",
            op.stationary_detuning
        )));
    }
    let gain_bound = (rates.relaxation_rate / pole).max(1.0);
    let guard = linearity_limit(op.stationary_detuning);
    if guard.is_infinite() {
        // resonance: no first-order nonlinearity; pick a small fixed excursion
        return Ok(0.01 / (cav.detuning_per_meter() * gain_bound));
    }
    Ok(0.5 * guard / (cav.detuning_per_meter() * gain_bound))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::cavity_optical_response;
    use approx::assert_relative_eq;

    fn cavity() -> CavityConfig {
        CavityConfig::from_wavelength(100.0, 0.43, 1.064e-6).unwrap()
    }

    /// gamma_th = 2 pi * 100 Hz; absorption scaled so that omega_th at
    /// (0.6 W, xi0 = 1) equals `ratio * gamma_th`.
    fn crystal_with_rate_ratio(ratio: f64) -> CrystalConfig {
        let gamma = crate::hz_to_rad(100.0);
        let heat_capacity = 2.0e-2;
        let base = CrystalConfig::new(
            2.0e-6,
            1.0,
            0.01,
            heat_capacity,
            1.0 / (gamma * heat_capacity),
            2.2,
            3.0e3,
            690.0,
            4.0e-5,
        )
        .unwrap();
        let op = OperatingPoint::new(0.6, 1.0).unwrap();
        let w = photothermal_rates(&cavity(), &base, &op)
            .unwrap()
            .absorption_rate;
        CrystalConfig {
            absorption_coefficient: ratio * gamma / w,
            ..base
        }
    }

    #[test]
    fn unit_response_without_absorption() {
        let cav = cavity();
        let cry = crystal_with_rate_ratio(0.0);
        let cry = CrystalConfig {
            absorption_coefficient: 0.0,
            ..cry
        };
        let op = OperatingPoint::new(0.6, 1.0).unwrap();
        let a = max_probe_amplitude(&cav, &cry, &op).unwrap();
        for f_hz in [30.0, 100.0, 400.0] {
            let h = probe_small_signal(&cav, &cry, &op, crate::hz_to_rad(f_hz), a).unwrap();
            assert_relative_eq!(h.norm(), 1.0, max_relative = 1e-3);
            assert!(
                h.arg().to_degrees().abs() < 0.06,
                "phase {}",
                h.arg().to_degrees()
            );
        }
    }

    #[test]
    fn probe_matches_linearized_response() {
        let cav = cavity();
        let cry = crystal_with_rate_ratio(1.5);
        let op = OperatingPoint::new(0.6, 1.0).unwrap();
        let rates = photothermal_rates(&cav, &cry, &op).unwrap();
        let a = max_probe_amplitude(&cav, &cry, &op).unwrap();
        for omega in [
            0.3 * rates.relaxation_rate,
            rates.relaxation_rate,
            8.0 * rates.relaxation_rate,
        ] {
            let measured = probe_small_signal(&cav, &cry, &op, omega, a).unwrap();
            let model = cavity_optical_response(&rates, omega).unwrap();
            assert_relative_eq!(measured.norm(), model.norm(), max_relative = 1e-2);
            let dphase = (measured.arg() - model.arg()).to_degrees().abs();
            assert!(dphase < 1.0, "phase error {dphase} deg at omega {omega}");
        }
    }

    #[test]
    fn halving_the_amplitude_is_a_linearity_certificate() {
        let cav = cavity();
        let cry = crystal_with_rate_ratio(1.5);
        let op = OperatingPoint::new(0.6, 1.0).unwrap();
        let rates = photothermal_rates(&cav, &cry, &op).unwrap();
        let a = max_probe_amplitude(&cav, &cry, &op).unwrap();
        let omega = rates.relaxation_rate;
        let full = probe_small_signal(&cav, &cry, &op, omega, a).unwrap();
        let half = probe_small_signal(&cav, &cry, &op, omega, 0.5 * a).unwrap();
        assert!((full - half).norm() / full.norm() < 2e-3);
    }

    #[test]
    fn oversized_amplitude_is_rejected_with_a_suggestion() {
        let cav = cavity();
        let cry = crystal_with_rate_ratio(1.5);
        let op = OperatingPoint::new(0.6, 1.0).unwrap();
        let a = max_probe_amplitude(&cav, &cry, &op).unwrap();
        let err =
            probe_small_signal(&cav, &cry, &op, crate::hz_to_rad(100.0), 10.0 * a).unwrap_err();
        match err {
            Error::LinearityGuard {
                suggested_amplitude_m,
                ..
            } => {
                assert!(suggested_amplitude_m < 10.0 * a);
                assert!(suggested_amplitude_m > 0.0);
            }
            other => panic!("expected linearity guard, got {other:?}"),
        }
    }

    #[test]
    fn unstable_operating_point_is_rejected() {
        let cav = cavity();
        let cry = crystal_with_rate_ratio(1.5);
        // omega_th(xi0 = -1) = -1.5 gamma_th: negative pole rate
        let op = OperatingPoint::new(0.6, -1.0).unwrap();
        assert!(probe_small_signal(&cav, &cry, &op, 100.0, 1e-12).is_err());
    }
}
