//! Parametric phase models fitted by the estimation pipelines.

use num_complex::Complex64;

use crate::model::{
    cavity_optical_response, effective_susceptibility, MechanicalConfig, PhotothermalRates,
};

/// A parametric complex response whose unwrapped phase is fit to data.
pub trait PhaseModel {
    fn parameter_names(&self) -> Vec<String>;

    /// Complex response at `freq_hz` for the given parameter vector, or
    /// `None` when the parameters are outside the model's domain.
    fn response(&self, params: &[f64], freq_hz: f64) -> Option<Complex64>;
}

/// Cavity optical response fitted over `[absorption_rate, relaxation_rate]`
/// in rad/s (fixed-mirror pipeline).
#[derive(Debug, Clone, Copy)]
pub struct CavityPhaseModel;

impl PhaseModel for CavityPhaseModel {
    fn parameter_names(&self) -> Vec<String> {
        vec![
            "absorption_rate_rad_s".into(),
            "relaxation_rate_rad_s".into(),
        ]
    }

    fn response(&self, params: &[f64], freq_hz: f64) -> Option<Complex64> {
        let rates = PhotothermalRates::new(params[0], params[1]).ok()?;
        cavity_optical_response(&rates, crate::hz_to_rad(freq_hz)).ok()
    }
}

/// Optomechanical response `chi_eff * H_th` fitted over
/// `[spring_constant, absorption_rate]` with the mechanics and the relaxation
/// rate held fixed (suspended-mirror pipeline).
#[derive(Debug, Clone, Copy)]
pub struct OptomechPhaseModel {
    pub mech: MechanicalConfig,
    /// Fixed relaxation rate, rad/s.
    pub relaxation_rate: f64,
}

impl PhaseModel for OptomechPhaseModel {
    fn parameter_names(&self) -> Vec<String> {
        vec![
            "spring_constant_n_per_m".into(),
            "absorption_rate_rad_s".into(),
        ]
    }

    fn response(&self, params: &[f64], freq_hz: f64) -> Option<Complex64> {
        let rates = PhotothermalRates::new(params[1], self.relaxation_rate).ok()?;
        let omega = crate::hz_to_rad(freq_hz);
        let chi = effective_susceptibility(&self.mech, params[0], &rates, omega).ok()?;
        let h = cavity_optical_response(&rates, omega).ok()?;
        Some(chi * h)
    }
}

/// Non-default three-parameter variant of the suspended-mirror model with the
/// relaxation rate free: `[spring_constant, absorption_rate, relaxation_rate]`.
#[derive(Debug, Clone, Copy)]
pub struct OptomechPhaseModelFree {
    pub mech: MechanicalConfig,
}

impl PhaseModel for OptomechPhaseModelFree {
    fn parameter_names(&self) -> Vec<String> {
        vec![
            "spring_constant_n_per_m".into(),
            "absorption_rate_rad_s".into(),
            "relaxation_rate_rad_s".into(),
        ]
    }

    fn response(&self, params: &[f64], freq_hz: f64) -> Option<Complex64> {
        let rates = PhotothermalRates::new(params[1], params[2]).ok()?;
        let omega = crate::hz_to_rad(freq_hz);
        let chi = effective_susceptibility(&self.mech, params[0], &rates, omega).ok()?;
        let h = cavity_optical_response(&rates, omega).ok()?;
        Some(chi * h)
    }
}

/// Unwrap a phase sequence (degrees) by nearest-multiple-of-360 continuation
/// from the first entry.
pub fn unwrap_sequence_deg(phases: &mut [f64]) {
    for i in 1..phases.len() {
        phases[i] += 360.0 * ((phases[i - 1] - phases[i]) / 360.0).round();
    }
}

/// Shift `value` by the multiple of 360 degrees nearest to `reference`.
pub fn align_deg(value: f64, reference: f64) -> f64 {
    value + 360.0 * ((reference - value) / 360.0).round()
}

/// Unwrapped model phase curve in degrees over a frequency grid.
///
/// The curve is unwrapped sequentially from its lowest-frequency point; when
/// `align_to` is given, the whole curve is shifted by the multiple of 360
/// degrees that brings its first point nearest to the reference. Returns
/// `None` when the model rejects the parameters anywhere on the grid.
pub fn phase_curve_deg(
    model: &dyn PhaseModel,
    params: &[f64],
    freqs_hz: &[f64],
    align_to: Option<f64>,
) -> Option<Vec<f64>> {
    let mut phases = Vec::with_capacity(freqs_hz.len());
    for &f in freqs_hz {
        let r = model.response(params, f)?;
        if r == Complex64::new(0.0, 0.0) {
            return None;
        }
        phases.push(r.arg().to_degrees());
    }
    unwrap_sequence_deg(&mut phases);
    if let Some(reference) = align_to {
        let shift = align_deg(phases[0], reference) - phases[0];
        for p in &mut phases {
            *p += shift;
        }
    }
    Some(phases)
}
