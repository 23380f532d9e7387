//! The two estimation pipelines: fixed-mirror (cavity phase response) and
//! suspended-mirror (optomechanical phase response).

use serde::{Deserialize, Serialize};

use super::dataset::ResponseDataset;
use super::models::{unwrap_sequence_deg, CavityPhaseModel, OptomechPhaseModel};
use super::nls::{nls_fit, FitOptions, FitResult};
use crate::model::MechanicalConfig;
use crate::{Error, Result};

/// Default low-frequency cutoff of the fixed-mirror pipeline, Hz. Below this
/// the effective relaxation rate acquires a frequency dependence that the
/// single-pole model does not capture.
pub const DEFAULT_BAND_MIN_HZ: f64 = 15.0;

/// Options shared by both pipelines.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PipelineOptions {
    /// Fit band (Hz); the fixed-mirror pipeline defaults to
    /// `[DEFAULT_BAND_MIN_HZ, +inf)`, the suspended-mirror pipeline to the
    /// full dataset.
    pub band_hz: Option<(f64, f64)>,
    /// Explicit initial parameters, overriding the data-driven start.
    pub init: Option<Vec<f64>>,
    /// Known proportionality `k_opt / omega_th` used to initialize the
    /// absorption rate in the suspended-mirror pipeline (N s / (m rad)).
    pub spring_per_absorption_rate: Option<f64>,
    pub fit: FitOptions,
}

/// Fixed-mirror pipeline: fit the cavity phase response over
/// `(absorption_rate, relaxation_rate)`.
///
/// Without an explicit init, a small deterministic set of data-driven starts
/// is tried and the best usable fit (lowest objective) is kept; noisy data on
/// the negative-detuning branch otherwise strands the optimizer on the flat
/// `|H| ~ const` plateau.
pub fn fit_cavity_response(data: &ResponseDataset, options: &PipelineOptions) -> Result<FitResult> {
    let (f_min, f_max) = options
        .band_hz
        .unwrap_or((DEFAULT_BAND_MIN_HZ, f64::INFINITY));
    let banded = data.banded(f_min, f_max)?;
    let candidates = match &options.init {
        Some(init) => vec![init.clone()],
        None => cavity_init_candidates(&banded)?,
    };
    let mut best: Option<FitResult> = None;
    for init in &candidates {
        let fit = match nls_fit(&CavityPhaseModel, &banded, init, None, &options.fit) {
            Ok(fit) => fit,
            Err(e) => {
                if best.is_none() && init == candidates.last().unwrap() {
                    return Err(e);
                }
                continue;
            }
        };
        let fit = flag_band_escape(fit, &banded);
        let better = match &best {
            None => true,
            Some(b) => {
                (fit.usable() && !b.usable())
                    || (fit.usable() == b.usable() && fit.objective < b.objective)
            }
        };
        if better {
            best = Some(fit);
        }
    }
    best.ok_or_else(|| Error::Data("no initialization produced a fit".into()))
}

/// When both fitted rates sit far above the top of the fitted band, the
/// response is flat over every measured point and the data cannot constrain
/// the parameters; such fits are non-identifiable regardless of the local
/// curvature.
fn flag_band_escape(mut fit: FitResult, data: &ResponseDataset) -> FitResult {
    let omega_top = crate::hz_to_rad(*data.frequencies_hz().last().expect("non-empty"));
    let gamma = fit.estimates[1];
    let pole = (fit.estimates[0] + fit.estimates[1]).abs();
    if gamma.min(pole) > 2.0 * omega_top {
        fit.identifiable = false;
        fit.standard_errors = vec![0.0; fit.standard_errors.len()];
    }
    fit
}

/// Suspended-mirror pipeline: fit the optomechanical phase response over
/// `(spring_constant, absorption_rate)` with the mechanics and relaxation
/// rate held fixed.
pub fn fit_optomechanical_response(
    data: &ResponseDataset,
    mech: &MechanicalConfig,
    relaxation_rate: f64,
    options: &PipelineOptions,
) -> Result<FitResult> {
    if !(relaxation_rate.is_finite() && relaxation_rate > 0.0) {
        return Err(Error::Data(format!(
            "relaxation rate must be finite and > 0, got {relaxation_rate}"
        )));
    }
    let banded = match options.band_hz {
        Some((lo, hi)) => data.banded(lo, hi)?,
        None => data.clone(),
    };
    let model = OptomechPhaseModel {
        mech: *mech,
        relaxation_rate,
    };
    let init = match &options.init {
        Some(init) => init.clone(),
        None => optomech_init(
            &banded,
            mech,
            relaxation_rate,
            options.spring_per_absorption_rate,
        ),
    };
    nls_fit(&model, &banded, &init, None, &options.fit)
}

/// Data-driven starts for the cavity pipeline.
///
/// On the phase-lead branch the peak lead at `Omega_p = sqrt(g (w + g))` with
/// `tan(phi_max) = w / (2 sqrt(g (w+g)))` inverts exactly to
/// `w = 2 sqrt(p) tan(phi_max)`, `g = (-w + sqrt(w^2 + 4 p)) / 2` with
/// `p = Omega_p^2`. On the negative branch (phase near -180 at low frequency)
/// only the -90 crossing `Omega_c^2 = g |w + g|` is observable, so several
/// splits of the product are offered as starts.
fn cavity_init_candidates(data: &ResponseDataset) -> Result<Vec<Vec<f64>>> {
    let freqs = data.frequencies_hz();
    let mut phases = data.phases_deg();
    unwrap_sequence_deg(&mut phases);

    let (i_absmax, phi_absmax) = phases
        .iter()
        .enumerate()
        .map(|(i, &p)| (i, p))
        .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
        .expect("non-empty dataset");

    let mut candidates = Vec::new();
    if phases.iter().cloned().fold(f64::NEG_INFINITY, f64::max) > 3.0 {
        // lead branch
        let (i_max, phi_max) = phases
            .iter()
            .enumerate()
            .map(|(i, &p)| (i, p))
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .expect("non-empty dataset");
        let p = crate::hz_to_rad(freqs[i_max]).powi(2);
        let w = 2.0 * p.sqrt() * phi_max.to_radians().tan().clamp(0.0, 50.0);
        let g = 0.5 * (-w + (w * w + 4.0 * p).sqrt());
        candidates.push(vec![w.max(1e-3 * g.max(1.0)), g.max(f64::MIN_POSITIVE)]);
    }
    if phases.iter().cloned().fold(f64::INFINITY, f64::min) < -90.0 {
        // negative branch: interpolate the -90 crossing
        let mut f_cross = freqs[i_absmax.min(freqs.len() - 1)];
        for w in phases.windows(2).zip(freqs.windows(2)) {
            let ((p0, p1), (f0, f1)) = ((w.0[0], w.0[1]), (w.1[0], w.1[1]));
            if (p0 + 90.0) * (p1 + 90.0) <= 0.0 {
                f_cross = f0 + (-90.0 - p0) / (p1 - p0) * (f1 - f0);
                break;
            }
        }
        let omega_c = crate::hz_to_rad(f_cross);
        for shape in [1.5, 3.0, 6.0] {
            let g = omega_c / shape;
            candidates.push(vec![-omega_c * shape - g, g]);
        }
    }
    // weak-signal fallback, always present
    let omega = crate::hz_to_rad(freqs[i_absmax]);
    candidates.push(vec![phi_absmax.signum() * omega, 0.5 * omega]);
    Ok(candidates)
}

/// Data-driven start for the suspended-mirror pipeline: the spring constant
/// from the -90 degree crossing, the absorption rate from the known
/// proportionality (or the relaxation rate when no ratio is available).
fn optomech_init(
    data: &ResponseDataset,
    mech: &MechanicalConfig,
    relaxation_rate: f64,
    spring_per_absorption_rate: Option<f64>,
) -> Vec<f64> {
    let freqs = data.frequencies_hz();
    let mut phases = data.phases_deg();
    unwrap_sequence_deg(&mut phases);

    let mut f_cross = None;
    for w in phases.windows(2).zip(freqs.windows(2)) {
        let ((p0, p1), (f0, f1)) = ((w.0[0], w.0[1]), (w.1[0], w.1[1]));
        if p0 > -90.0 && p1 <= -90.0 {
            f_cross = Some(f0 + (-90.0 - p0) / (p1 - p0) * (f1 - f0));
            break;
        }
    }
    let k_m = mech.spring_constant();
    let k_init = match f_cross {
        Some(f) => (mech.effective_mass * crate::hz_to_rad(f).powi(2) - k_m).max(1e-3 * k_m),
        None => k_m,
    };
    let w_init = match spring_per_absorption_rate {
        Some(ratio) if ratio != 0.0 => k_init / ratio,
        _ => relaxation_rate,
    };
    vec![k_init, w_init]
}
