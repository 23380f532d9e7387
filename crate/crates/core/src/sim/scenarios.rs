//! Cavity-scan and self-locking scenarios built on the detuning integrator.

use serde::{Deserialize, Serialize};

use super::{integrate_detuning_ode, DetuningOde, DriveProfile, SolverSettings, TimeSeries};
use crate::model::{CavityConfig, CrystalConfig, OperatingPoint};
use crate::{Error, Result};

/// Time-axis convention of a scan trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanNormalization {
    /// Time in seconds as integrated.
    Raw,
    /// Time mapped to the actuator detuning, so the trace without the
    /// photothermal effect is the Lorentzian `1/(1+tau^2)` with unit
    /// half-width; power is already normalized to one at resonance.
    UnitHalfWidth,
}

/// Landmark times of a scan trace, extracted from the sampled trajectory by
/// linear interpolation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanMetrics {
    /// Largest sampled normalized power.
    pub peak_power: f64,
    /// Time of the power maximum, seconds.
    pub t_peak_s: f64,
    /// Width of the trace at half maximum, seconds (absent if the trace never
    /// reaches half maximum or never falls back below it).
    pub half_width_s: Option<f64>,
    /// Time from the first upward half-maximum crossing to the power peak,
    /// seconds.
    pub rise_s: Option<f64>,
}

impl ScanMetrics {
    pub fn from_series(series: &TimeSeries) -> Self {
        let p: Vec<(f64, f64)> = series
            .samples
            .iter()
            .map(|s| (s.time, s.transmitted_power_normalized))
            .collect();
        let (peak_idx, &(t_peak_s, peak_power)) = p
            .iter()
            .enumerate()
            .max_by(|a, b| a.1 .1.partial_cmp(&b.1 .1).unwrap())
            .expect("non-empty trajectory");

        let half = 0.5 * peak_power.max(1e-300);
        let cross = |a: (f64, f64), b: (f64, f64)| -> f64 {
            a.0 + (half - a.1) / (b.1 - a.1) * (b.0 - a.0)
        };
        let up = p[..=peak_idx]
            .windows(2)
            .find(|w| w[0].1 < half && w[1].1 >= half)
            .map(|w| cross(w[0], w[1]));
        let down = p[peak_idx..]
            .windows(2)
            .find(|w| w[0].1 >= half && w[1].1 < half)
            .map(|w| cross(w[0], w[1]));
        ScanMetrics {
            peak_power,
            t_peak_s,
            half_width_s: match (up, down) {
                (Some(u), Some(d)) => Some(d - u),
                _ => None,
            },
            rise_s: up.map(|u| t_peak_s - u),
        }
    }
}

/// A scan trajectory with its landmark metrics and optional normalized trace.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanOutput {
    pub series: TimeSeries,
    pub metrics: ScanMetrics,
    /// `(tau, normalized power)` pairs when [`ScanNormalization::UnitHalfWidth`]
    /// was requested; `tau` is the actuator detuning at each sample.
    pub normalized: Option<Vec<(f64, f64)>>,
}

/// Sweep the actuator at constant velocity across resonance.
///
/// The actuator detuning runs from `xi_span.0` to `xi_span.1`; the sign of
/// `velocity_m_per_s` must match the direction of the span. The initial state
/// is the stationary detuning for the held start position.
pub fn simulate_scan(
    cav: &CavityConfig,
    cry: &CrystalConfig,
    input_power_w: f64,
    velocity_m_per_s: f64,
    xi_span: (f64, f64),
    normalization: ScanNormalization,
    samples: usize,
) -> Result<ScanOutput> {
    if velocity_m_per_s == 0.0 || !velocity_m_per_s.is_finite() {
        return Err(Error::config(
            "scan.velocity_m_per_s",
            "must be finite and nonzero",
        ));
    }
    if samples < 16 {
        return Err(Error::config(
            "scan.samples",
            "need at least 16 output samples",
        ));
    }
    let ode = DetuningOde::new(cav, cry, input_power_w);
    let v_xi = velocity_m_per_s * ode.detuning_per_meter;
    let duration = (xi_span.1 - xi_span.0) / v_xi;
    if !(duration.is_finite() && duration > 0.0) {
        return Err(Error::config(
            "scan.xi_span",
            "span direction must match the velocity sign",
        ));
    }

    let xi0 = ode.held_equilibrium(xi_span.0);
    let op = OperatingPoint::new(input_power_w, xi0)?;
    let drive = DriveProfile::ConstantVelocity {
        start_m: xi_span.0 * cav.meters_per_detuning(),
        velocity_m_per_s,
    };
    let solver = SolverSettings::for_fastest_rate(ode.fastest_rate().max(v_xi.abs()));
    let series = integrate_detuning_ode(
        cav,
        cry,
        &op,
        &drive,
        (0.0, duration),
        &solver,
        duration / samples as f64,
    )?;

    let metrics = ScanMetrics::from_series(&series);
    let normalized = match normalization {
        ScanNormalization::Raw => None,
        ScanNormalization::UnitHalfWidth => Some(
            series
                .samples
                .iter()
                .map(|s| (xi_span.0 + v_xi * s.time, s.transmitted_power_normalized))
                .collect(),
        ),
    };
    Ok(ScanOutput {
        series,
        metrics,
        normalized,
    })
}

/// Heater pulse parameters for a self-locking run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelflockSpec {
    /// Detuning at which the actuator parks the cavity before heating.
    pub parked_detuning: f64,
    /// External heater inflow, watts.
    pub heater_power_w: f64,
    /// Heater switch-on time, seconds.
    pub t_on_s: f64,
    /// Heater switch-off time, seconds.
    pub t_off_s: f64,
    /// End of the simulated span, seconds.
    pub t_end_s: f64,
}

/// Result of the post-heater equilibrium analysis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelflockOutcome {
    /// Whether the trajectory settled at an equilibrium distinct from the
    /// pre-heating one.
    pub locked: bool,
    /// Stationary detuning before the heater pulse.
    pub pre_heat_detuning: f64,
    /// Detected post-heater equilibrium, if the trajectory settled.
    pub equilibrium_detuning: Option<f64>,
    /// Sign of the rate slope at the equilibrium: `true` when negative
    /// (linearly stable).
    pub stable: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelflockOutput {
    pub series: TimeSeries,
    pub outcome: SelflockOutcome,
}

/// Park the cavity off resonance, fire a heater pulse, and report whether the
/// trajectory settles at a photothermally sustained equilibrium.
pub fn simulate_selflock(
    cav: &CavityConfig,
    cry: &CrystalConfig,
    input_power_w: f64,
    spec: &SelflockSpec,
    samples: usize,
) -> Result<SelflockOutput> {
    if !(spec.t_on_s >= 0.0 && spec.t_off_s > spec.t_on_s && spec.t_end_s > spec.t_off_s) {
        return Err(Error::config(
            "selflock",
            "heater window must satisfy 0 <= t_on < t_off < t_end",
        ));
    }
    if samples < 16 {
        return Err(Error::config(
            "selflock.samples",
            "need at least 16 output samples",
        ));
    }
    let ode = DetuningOde::new(cav, cry, input_power_w);
    let pre_heat = ode.held_equilibrium(spec.parked_detuning);
    let op = OperatingPoint::new(input_power_w, pre_heat)?;
    let drive = DriveProfile::HeaterStep {
        hold_m: spec.parked_detuning * cav.meters_per_detuning(),
        power_w: spec.heater_power_w,
        t_on_s: spec.t_on_s,
        t_off_s: spec.t_off_s,
    };
    let solver = SolverSettings::for_fastest_rate(ode.fastest_rate());
    let series = integrate_detuning_ode(
        cav,
        cry,
        &op,
        &drive,
        (0.0, spec.t_end_s),
        &solver,
        spec.t_end_s / samples as f64,
    )?;

    let xi_end = series.samples.last().expect("non-empty trajectory").xi;
    let settle_tol = 1e-5 * ode.relaxation_rate * (1.0 + xi_end.abs());
    let outcome = if ode.held_rate(xi_end, spec.parked_detuning).abs() < settle_tol {
        // refine the settled root by Newton iteration
        let mut xi = xi_end;
        for _ in 0..100 {
            let g = ode.held_rate(xi, spec.parked_detuning);
            let dg = ode.held_rate_slope(xi);
            let step = g / dg;
            xi -= step;
            if step.abs() < 1e-14 * (1.0 + xi.abs()) {
                break;
            }
        }
        let locked = (xi - pre_heat).abs() > 1e-2 * (1.0 + pre_heat.abs());
        SelflockOutcome {
            locked,
            pre_heat_detuning: pre_heat,
            equilibrium_detuning: Some(xi),
            stable: Some(ode.held_rate_slope(xi) < 0.0),
        }
    } else {
        SelflockOutcome {
            locked: false,
            pre_heat_detuning: pre_heat,
            equilibrium_detuning: None,
            stable: None,
        }
    };

    Ok(SelflockOutput { series, outcome })
}
