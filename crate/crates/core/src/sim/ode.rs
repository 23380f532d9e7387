//! Adaptive explicit Runge-Kutta integrator (Dormand-Prince 5(4) pair).
//!
//! Small fixed-dimension states only; the detuning equation needs one state
//! variable and the demodulating probe three.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Tolerances and step bounds for one integration run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    /// Relative tolerance on the embedded error estimate.
    pub rel_tol: f64,
    /// Absolute tolerance on the embedded error estimate.
    pub abs_tol: f64,
    /// Hard upper bound on the step size, seconds.
    pub max_step: f64,
    /// Abort guard on the number of accepted + rejected steps.
    pub max_steps: u64,
}

impl SolverSettings {
    /// Default tolerances with a step bound resolving the fastest rate in the
    /// problem: `max_step = 0.01 / fastest_rate`.
    pub fn for_fastest_rate(fastest_rate: f64) -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            max_step: 0.01 / fastest_rate.abs().max(f64::MIN_POSITIVE),
            max_steps: 200_000_000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol.is_finite() && self.rel_tol > 0.0)
            || !(self.abs_tol.is_finite() && self.abs_tol > 0.0)
        {
            return Err(Error::config("solver.tolerances", "must be finite and > 0"));
        }
        if !(self.max_step.is_finite() && self.max_step > 0.0) {
            return Err(Error::config("solver.max_step", "must be finite and > 0"));
        }
        Ok(())
    }
}

/// One accepted step, with derivatives at both ends for dense interpolation.
#[derive(Debug, Clone, Copy)]
pub struct AcceptedStep<const N: usize> {
    pub t0: f64,
    pub y0: [f64; N],
    pub f0: [f64; N],
    pub t1: f64,
    pub y1: [f64; N],
    pub f1: [f64; N],
}

impl<const N: usize> AcceptedStep<N> {
    /// Cubic Hermite interpolant inside the step.
    pub fn interpolate(&self, t: f64) -> [f64; N] {
        let h = self.t1 - self.t0;
        let s = (t - self.t0) / h;
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        std::array::from_fn(|i| {
            h00 * self.y0[i] + h10 * h * self.f0[i] + h01 * self.y1[i] + h11 * h * self.f1[i]
        })
    }
}

// Dormand-Prince 5(4) tableau.
const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const B: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
// Difference between the 5th-order weights and the embedded 4th-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

fn axpyn<const N: usize>(y: &[f64; N], h: f64, coeffs: &[f64], ks: &[[f64; N]]) -> [f64; N] {
    std::array::from_fn(|i| {
        let mut acc = y[i];
        for (c, k) in coeffs.iter().zip(ks) {
            acc += h * c * k[i];
        }
        acc
    })
}

/// Integrate `dy/dt = rhs(t, y)` from `t0` to `t1`, invoking `on_step` after
/// every accepted step. Returns the state at `t1`.
pub fn integrate<const N: usize>(
    rhs: &mut impl FnMut(f64, &[f64; N]) -> [f64; N],
    t0: f64,
    y0: [f64; N],
    t1: f64,
    settings: &SolverSettings,
    mut on_step: impl FnMut(&AcceptedStep<N>),
) -> Result<[f64; N]> {
    settings.validate()?;
    if !(t1 > t0) {
        return Err(Error::Domain(format!(
            "time span must increase, got [{t0}, {t1}]"
        )));
    }

    let mut t = t0;
    let mut y = y0;
    let mut f_start = rhs(t, &y);
    let mut h = settings.max_step.min((t1 - t0) / 100.0);
    let mut steps: u64 = 0;

    loop {
        let remaining = t1 - t;
        if remaining <= 1e-14 * t.abs().max(1.0) {
            break; // reached the end within roundoff
        }
        if h < 1e-14 * t.abs().max(1.0) {
            return Err(Error::Integration {
                time_s: t,
                message: format!("step size underflow (h = {h:.3e})"),
            });
        }
        let hs = h.min(remaining);
        steps += 1;
        if steps > settings.max_steps {
            return Err(Error::Integration {
                time_s: t,
                message: format!("exceeded {} steps", settings.max_steps),
            });
        }

        let k1 = f_start;
        let k2 = rhs(t + hs / 5.0, &axpyn(&y, hs, &A2, &[k1]));
        let k3 = rhs(t + 3.0 * hs / 10.0, &axpyn(&y, hs, &A3, &[k1, k2]));
        let k4 = rhs(t + 4.0 * hs / 5.0, &axpyn(&y, hs, &A4, &[k1, k2, k3]));
        let k5 = rhs(t + 8.0 * hs / 9.0, &axpyn(&y, hs, &A5, &[k1, k2, k3, k4]));
        let k6 = rhs(t + hs, &axpyn(&y, hs, &A6, &[k1, k2, k3, k4, k5]));
        let y_new = axpyn(&y, hs, &B, &[k1, k2, k3, k4, k5, k6]);
        let k7 = rhs(t + hs, &y_new);

        // scaled RMS of the embedded error estimate
        let ks = [k1, k2, k3, k4, k5, k6, k7];
        let mut err_sq = 0.0;
        for i in 0..N {
            let mut e = 0.0;
            for (c, k) in E.iter().zip(&ks) {
                e += c * k[i];
            }
            e *= hs;
            let scale = settings.abs_tol + settings.rel_tol * y[i].abs().max(y_new[i].abs());
            err_sq += (e / scale) * (e / scale);
        }
        let err = (err_sq / N as f64).sqrt();

        if err <= 1.0 {
            let record = AcceptedStep {
                t0: t,
                y0: y,
                f0: k1,
                t1: t + hs,
                y1: y_new,
                f1: k7,
            };
            t += hs;
            y = y_new;
            f_start = k7; // FSAL
            on_step(&record);
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            h = (hs * factor).min(settings.max_step);
        } else {
            h = hs * (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
        }
    }
    Ok(y)
}

/// Integrate and collect samples on the uniform grid `t0, t0+dt, ...` up to
/// and including the last grid point `<= t1` (the end state is returned
/// separately). Samples come from the cubic Hermite interpolant of the
/// accepted steps.
pub fn integrate_sampled<const N: usize>(
    rhs: &mut impl FnMut(f64, &[f64; N]) -> [f64; N],
    t0: f64,
    y0: [f64; N],
    t1: f64,
    settings: &SolverSettings,
    dt_sample: f64,
) -> Result<(Vec<(f64, [f64; N])>, [f64; N])> {
    if !(dt_sample.is_finite() && dt_sample > 0.0) {
        return Err(Error::config(
            "solver.sample_stride",
            "must be finite and > 0",
        ));
    }
    let mut samples = vec![(t0, y0)];
    let mut next_idx: u64 = 1;
    let end = integrate(rhs, t0, y0, t1, settings, |step| loop {
        let ts = t0 + next_idx as f64 * dt_sample;
        if ts > step.t1 || ts > t1 {
            break;
        }
        samples.push((ts, step.interpolate(ts)));
        next_idx += 1;
    })?;
    Ok((samples, end))
}
