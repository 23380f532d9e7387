//! Actuator and heater drive profiles for the detuning equation of motion.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Time-dependent inputs to a simulation run: the actuator position
/// `x_act(t)` and an optional external heat inflow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum DriveProfile {
    /// Actuator ramps at a constant signed velocity from a start position.
    ConstantVelocity { start_m: f64, velocity_m_per_s: f64 },
    /// Sinusoidal actuator motion about a fixed bias.
    Sinusoid {
        bias_m: f64,
        amplitude_m: f64,
        angular_frequency: f64,
    },
    /// Actuator held fixed while an external heater injects `power_w` watts
    /// into the crystal during `[t_on_s, t_off_s)`.
    HeaterStep {
        hold_m: f64,
        power_w: f64,
        t_on_s: f64,
        t_off_s: f64,
    },
    /// Sampled actuator trajectory with linear interpolation; held constant
    /// outside the tabulated range.
    CustomSamples {
        times_s: Vec<f64>,
        positions_m: Vec<f64>,
    },
}

impl DriveProfile {
    pub fn validate(&self) -> Result<()> {
        let all_finite = |vals: &[f64]| vals.iter().all(|v| v.is_finite());
        match self {
            DriveProfile::ConstantVelocity {
                start_m,
                velocity_m_per_s,
            } => {
                if !all_finite(&[*start_m, *velocity_m_per_s]) {
                    return Err(Error::config(
                        "drive.constant_velocity",
                        "parameters must be finite",
                    ));
                }
            }
            DriveProfile::Sinusoid {
                bias_m,
                amplitude_m,
                angular_frequency,
            } => {
                if !all_finite(&[*bias_m, *amplitude_m, *angular_frequency])
                    || *angular_frequency <= 0.0
                {
                    return Err(Error::config(
                        "drive.sinusoid",
                        "parameters must be finite with angular_frequency > 0",
                    ));
                }
            }
            DriveProfile::HeaterStep {
                hold_m,
                power_w,
                t_on_s,
                t_off_s,
            } => {
                if !all_finite(&[*hold_m, *power_w, *t_on_s, *t_off_s])
                    || *t_on_s < 0.0
                    || *t_off_s <= *t_on_s
                {
                    return Err(Error::config(
                        "drive.heater_step",
                        "requires finite parameters and 0 <= t_on < t_off",
                    ));
                }
            }
            DriveProfile::CustomSamples {
                times_s,
                positions_m,
            } => {
                if times_s.len() != positions_m.len() || times_s.len() < 2 {
                    return Err(Error::config(
                        "drive.custom_samples",
                        "times and positions must have equal length >= 2",
                    ));
                }
                if !all_finite(times_s) || !all_finite(positions_m) {
                    return Err(Error::config(
                        "drive.custom_samples",
                        "samples must be finite",
                    ));
                }
                if times_s[0] < 0.0 || times_s.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::config(
                        "drive.custom_samples",
                        "times must be non-negative and strictly increasing",
                    ));
                }
            }
        }
        Ok(())
    }

    /// Actuator position at time `t`, meters.
    pub fn actuator_position(&self, t: f64) -> f64 {
        match self {
            DriveProfile::ConstantVelocity {
                start_m,
                velocity_m_per_s,
            } => start_m + velocity_m_per_s * t,
            DriveProfile::Sinusoid {
                bias_m,
                amplitude_m,
                angular_frequency,
            } => bias_m + amplitude_m * (angular_frequency * t).sin(),
            DriveProfile::HeaterStep { hold_m, .. } => *hold_m,
            DriveProfile::CustomSamples {
                times_s,
                positions_m,
            } => match times_s.binary_search_by(|probe| probe.partial_cmp(&t).unwrap()) {
                Ok(i) => positions_m[i],
                Err(0) => positions_m[0],
                Err(i) if i == times_s.len() => *positions_m.last().unwrap(),
                Err(i) => {
                    let f = (t - times_s[i - 1]) / (times_s[i] - times_s[i - 1]);
                    positions_m[i - 1] + f * (positions_m[i] - positions_m[i - 1])
                }
            },
        }
    }

    /// Actuator velocity at time `t`, m/s.
    pub fn actuator_velocity(&self, t: f64) -> f64 {
        match self {
            DriveProfile::ConstantVelocity {
                velocity_m_per_s, ..
            } => *velocity_m_per_s,
            DriveProfile::Sinusoid {
                amplitude_m,
                angular_frequency,
                ..
            } => amplitude_m * angular_frequency * (angular_frequency * t).cos(),
            DriveProfile::HeaterStep { .. } => 0.0,
            DriveProfile::CustomSamples {
                times_s,
                positions_m,
            } => {
                let i = match times_s.binary_search_by(|probe| probe.partial_cmp(&t).unwrap()) {
                    Ok(i) | Err(i) => i,
                };
                if i == 0 || i >= times_s.len() {
                    0.0
                } else {
                    (positions_m[i] - positions_m[i - 1]) / (times_s[i] - times_s[i - 1])
                }
            }
        }
    }

    /// External heat inflow at time `t`, watts.
    pub fn heater_power(&self, t: f64) -> f64 {
        match self {
            DriveProfile::HeaterStep {
                power_w,
                t_on_s,
                t_off_s,
                ..
            } if t >= *t_on_s && t < *t_off_s => *power_w,
            _ => 0.0,
        }
    }

    /// Times at which the drive is not smooth; integration is split there.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            DriveProfile::HeaterStep {
                t_on_s, t_off_s, ..
            } => vec![*t_on_s, *t_off_s],
            DriveProfile::CustomSamples { times_s, .. } => times_s.clone(),
            _ => Vec::new(),
        }
    }
}
