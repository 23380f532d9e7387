//! Time-domain integration of the nonlinear detuning equation of motion.
//!
//! The integrated quantity is the normalized detuning `xi(t)`:
//!
//! `dxi/dt = -gamma_th xi + A/(1+xi^2) + s (gamma_th x_act + dx_act/dt) + s (alpha L'/C) w_ext`
//!
//! with `A` the photothermal forcing, `s` the detuning per meter, and `w_ext`
//! an optional external heater inflow. Runs are sequential and deterministic:
//! identical inputs and solver settings produce identical output samples.

mod drive;
mod ode;
mod probe;
mod scenarios;

pub use drive::DriveProfile;
pub use ode::{integrate, integrate_sampled, AcceptedStep, SolverSettings};
pub use probe::{linearity_limit, max_probe_amplitude, probe_small_signal};
pub use scenarios::{
    simulate_scan, simulate_selflock, ScanMetrics, ScanNormalization, ScanOutput, SelflockOutcome,
    SelflockOutput, SelflockSpec,
};

use serde::{Deserialize, Serialize};

use crate::model::{photothermal_forcing, CavityConfig, CrystalConfig, OperatingPoint};
use crate::{Error, Result};

/// One sampled state of the detuning equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimState {
    /// Time, seconds.
    pub time: f64,
    /// Normalized detuning.
    pub xi: f64,
    /// Actuator displacement, meters.
    pub x_act: f64,
    /// Photothermal contribution to the effective cavity length,
    /// `x_th = xi / s - x_act`, meters.
    pub x_th: f64,
    /// Transmitted power normalized to one at resonance, `1/(1+xi^2)`.
    pub transmitted_power_normalized: f64,
}

/// Sampled trajectory plus the inputs that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub samples: Vec<SimState>,
    pub metadata: SimMetadata,
}

/// Provenance carried alongside every trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimMetadata {
    pub cavity: CavityConfig,
    pub crystal: CrystalConfig,
    pub input_power_w: f64,
    pub drive: DriveProfile,
    pub solver: SolverSettings,
    pub sample_stride_s: f64,
}

/// Precomputed coefficients of the detuning equation of motion.
#[derive(Debug, Clone, Copy)]
pub struct DetuningOde {
    /// `gamma_th`, rad/s.
    pub relaxation_rate: f64,
    /// Photothermal forcing `A`, rad/s.
    pub forcing: f64,
    /// Normalized detuning per meter, 1/m.
    pub detuning_per_meter: f64,
    /// Detuning rate per watt of external heater inflow, rad/(s W).
    pub heater_coefficient: f64,
}

impl DetuningOde {
    pub fn new(cav: &CavityConfig, cry: &CrystalConfig, input_power: f64) -> Self {
        let s = cav.detuning_per_meter();
        Self {
            relaxation_rate: cry.relaxation_rate(),
            forcing: photothermal_forcing(cav, cry, input_power),
            detuning_per_meter: s,
            heater_coefficient: s * cry.thermal_expansion * cry.crystal_length / cry.heat_capacity,
        }
    }

    /// Right-hand side `dxi/dt` under a drive profile.
    pub fn rate(&self, t: f64, xi: f64, drive: &DriveProfile) -> f64 {
        -self.relaxation_rate * xi
            + self.forcing / (1.0 + xi * xi)
            + self.detuning_per_meter
                * (self.relaxation_rate * drive.actuator_position(t) + drive.actuator_velocity(t))
            + self.heater_coefficient * drive.heater_power(t)
    }

    /// Autonomous right-hand side at a held actuator detuning (heater off),
    /// `g(xi) = -gamma (xi - xi_hold) + A/(1+xi^2)`.
    pub fn held_rate(&self, xi: f64, xi_hold: f64) -> f64 {
        -self.relaxation_rate * (xi - xi_hold) + self.forcing / (1.0 + xi * xi)
    }

    /// Slope of [`Self::held_rate`] in `xi`; negative at a stable equilibrium.
    pub fn held_rate_slope(&self, xi: f64) -> f64 {
        let d = 1.0 + xi * xi;
        -self.relaxation_rate - self.forcing * 2.0 * xi / (d * d)
    }

    /// Stationary detuning reached when the actuator is held at `xi_hold`,
    /// found by bisection on [`Self::held_rate`]. This is the equilibrium
    /// branch connected to `xi_hold` as the forcing is switched on.
    pub fn held_equilibrium(&self, xi_hold: f64) -> f64 {
        let span = self.forcing.abs() / self.relaxation_rate + 1e-9;
        let mut lo = xi_hold - span;
        let mut hi = xi_hold + span;
        // held_rate(lo) >= 0 >= held_rate(hi) by construction
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.held_rate(mid, xi_hold) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Fastest intrinsic rate of the equation, used for the solver step bound.
    pub fn fastest_rate(&self) -> f64 {
        // max slope of the nonlinear term is 2|A| * max|xi|/(1+xi^2)^2
        let nonlinear =
            2.0 * self.forcing.abs() * crate::model::detuning_shape(crate::model::peak_detuning());
        self.relaxation_rate.max(nonlinear)
    }
}

/// Collects samples on a uniform time grid across consecutive integration
/// segments.
pub(crate) struct GridSampler {
    origin: f64,
    stride: f64,
    next: u64,
    pub samples: Vec<(f64, f64)>,
}

impl GridSampler {
    pub(crate) fn new(origin: f64, stride: f64, xi0: f64) -> Self {
        Self {
            origin,
            stride,
            next: 1,
            samples: vec![(origin, xi0)],
        }
    }

    pub(crate) fn on_step(&mut self, step: &AcceptedStep<1>) {
        loop {
            let t = self.origin + self.next as f64 * self.stride;
            if t > step.t1 {
                break;
            }
            self.samples.push((t, step.interpolate(t)[0]));
            self.next += 1;
        }
    }
}

/// Integrate the detuning equation under a drive profile.
///
/// The initial detuning is `op.stationary_detuning`; output is sampled at the
/// fixed stride `sample_stride_s`. Integration is split at the drive's
/// discontinuities (heater switching, sample knots).
pub fn integrate_detuning_ode(
    cav: &CavityConfig,
    cry: &CrystalConfig,
    op: &OperatingPoint,
    drive: &DriveProfile,
    t_span: (f64, f64),
    solver: &SolverSettings,
    sample_stride_s: f64,
) -> Result<TimeSeries> {
    drive.validate()?;
    solver.validate()?;
    let (t0, t1) = t_span;
    if !(t0.is_finite() && t1.is_finite() && t1 > t0) {
        return Err(Error::Domain(format!(
            "time span must increase, got [{t0}, {t1}]"
        )));
    }
    if !(sample_stride_s.is_finite() && sample_stride_s > 0.0) {
        return Err(Error::config("sample_stride_s", "must be finite and > 0"));
    }

    let ode = DetuningOde::new(cav, cry, op.input_power);
    let mut sampler = GridSampler::new(t0, sample_stride_s, op.stationary_detuning);

    let mut cuts: Vec<f64> = drive
        .breakpoints()
        .into_iter()
        .filter(|&t| t > t0 && t < t1)
        .collect();
    cuts.push(t1);

    let mut t_seg = t0;
    let mut xi = op.stationary_detuning;
    for cut in cuts {
        if cut <= t_seg {
            continue;
        }
        let mut rhs = |t: f64, y: &[f64; 1]| [ode.rate(t, y[0], drive)];
        let end = integrate(&mut rhs, t_seg, [xi], cut, solver, |step| {
            sampler.on_step(step)
        })?;
        xi = end[0];
        t_seg = cut;
    }

    let mpd = cav.meters_per_detuning();
    let samples = sampler
        .samples
        .into_iter()
        .map(|(t, xi)| {
            let x_act = drive.actuator_position(t);
            SimState {
                time: t,
                xi,
                x_act,
                x_th: xi * mpd - x_act,
                transmitted_power_normalized: 1.0 / (1.0 + xi * xi),
            }
        })
        .collect();

    Ok(TimeSeries {
        samples,
        metadata: SimMetadata {
            cavity: *cav,
            crystal: *cry,
            input_power_w: op.input_power,
            drive: drive.clone(),
            solver: *solver,
            sample_stride_s,
        },
    })
}
