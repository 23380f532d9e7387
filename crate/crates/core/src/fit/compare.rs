//! Monte-Carlo comparison of the fixed-mirror and suspended-mirror
//! estimation methods.
//!
//! For each seed and input power, both pipelines estimate the absorption rate
//! across a detuning ladder from synthetic noisy phase data; the detuning
//! curve is fitted to each set of estimates and the root mean square of its
//! residuals, normalized by the fitted maximum, is the figure of merit.

use serde::{Deserialize, Serialize};

use super::aggregate::{fit_detuning_curve, normalized_rmse, DetuningSweep, SweepEntry};
use super::models::{CavityPhaseModel, OptomechPhaseModel};
use super::pipelines::{
    fit_cavity_response, fit_optomechanical_response, PipelineOptions, DEFAULT_BAND_MIN_HZ,
};
use super::synth::{log_grid_hz, synth_phase_dataset};
use crate::model::{
    optical_spring_constant, photothermal_rates, CavityConfig, CrystalConfig, MechanicalConfig,
    OperatingPoint,
};
use crate::{Error, Result};

/// Configuration of a comparison run: hardware, operating grid, noise model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRegime {
    pub cavity: CavityConfig,
    pub crystal: CrystalConfig,
    pub mechanics: MechanicalConfig,
    /// Input-power ladder, watts.
    pub powers_w: Vec<f64>,
    /// Stationary detunings visited at each power.
    pub detunings: Vec<f64>,
    /// Phase noise of the fixed-mirror measurement, degrees.
    pub cavity_noise_deg: f64,
    /// Phase noise of the suspended-mirror measurement, degrees.
    pub optomech_noise_deg: f64,
    pub cavity_grid_hz: Vec<f64>,
    pub optomech_grid_hz: Vec<f64>,
    /// Low-frequency cutoff of the fixed-mirror fit, Hz.
    pub band_min_hz: f64,
}

impl ComparisonRegime {
    /// Calibrated fixture echoing the measured system: relaxation rate
    /// 2 pi * 30 Hz, absorption rate comparable to it at full power
    /// (maximum 2 pi * 35 Hz at 0.6 W), mirror resonance 14.2 Hz with
    /// Q = 193, powers 600/300/150 mW.
    pub fn reference() -> Self {
        let cavity = CavityConfig::from_wavelength(100.0, 0.43, 1.064e-6).expect("valid cavity");
        let mechanics =
            MechanicalConfig::new(2.8e-4, crate::hz_to_rad(14.2), 193.0).expect("valid mechanics");
        let crystal =
            crystal_with_rates(&cavity, crate::hz_to_rad(30.0), crate::hz_to_rad(35.0), 0.6);
        Self {
            cavity,
            crystal,
            mechanics,
            powers_w: vec![0.6, 0.3, 0.15],
            detunings: vec![0.35, 0.55, 0.75, 1.0, 1.3, 1.7, 2.2, 2.8],
            // calibrated so the per-power normalized RMSE ladders land on the
            // measured ones: fixed ~ (0.057, 0.14, 0.68), suspended
            // ~ (0.012, 0.016, 0.026)
            cavity_noise_deg: 3.0,
            optomech_noise_deg: 1.5,
            cavity_grid_hz: log_grid_hz(15.0, 1000.0, 50).expect("valid grid"),
            optomech_grid_hz: log_grid_hz(2.0, 1000.0, 60).expect("valid grid"),
            band_min_hz: DEFAULT_BAND_MIN_HZ,
        }
    }
}

/// Build a crystal whose relaxation rate is `gamma_th` and whose absorption
/// rate at `(reference_power, xi0 = 1/sqrt(3))` equals `omega_th_peak`.
pub fn crystal_with_rates(
    cavity: &CavityConfig,
    gamma_th: f64,
    omega_th_peak: f64,
    reference_power_w: f64,
) -> CrystalConfig {
    let heat_capacity = 2.0e-2;
    let base = CrystalConfig::new(
        2.0e-6,
        1.0,
        0.01,
        heat_capacity,
        1.0 / (gamma_th * heat_capacity),
        2.2,
        3.0e3,
        690.0,
        4.0e-5,
    )
    .expect("valid base crystal");
    let op =
        OperatingPoint::new(reference_power_w, crate::model::peak_detuning()).expect("valid op");
    let actual = photothermal_rates(cavity, &base, &op)
        .expect("valid rates")
        .absorption_rate;
    CrystalConfig {
        absorption_coefficient: omega_th_peak / actual,
        ..base
    }
}

/// Per-power summary of the Monte-Carlo comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerComparison {
    pub power_w: f64,
    /// Normalized RMSE of the fixed-mirror method, one entry per seed with a
    /// successful curve fit in both methods.
    pub fixed_rmse: Vec<f64>,
    pub suspended_rmse: Vec<f64>,
    pub mean_fixed_rmse: f64,
    pub mean_suspended_rmse: f64,
    /// Seeds in which the fixed-mirror RMSE exceeded the suspended one.
    pub ordering_count: u64,
    pub compared_seeds: u64,
}

/// Full Monte-Carlo comparison report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodComparisonReport {
    pub per_power: Vec<PowerComparison>,
    /// Fraction of (seed, power) pairs with the expected RMSE ordering.
    pub ordering_fraction: f64,
    /// Fraction of individual fits that did not converge to an identifiable
    /// optimum (such fits are excluded from the sweeps).
    pub failed_fit_fraction: f64,
    /// Set when the failure fraction exceeds 20%.
    pub unreliable: bool,
    pub seeds: u64,
    pub base_seed: u64,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Run the comparison over `seeds` Monte-Carlo repetitions.
pub fn method_comparison(
    regime: &ComparisonRegime,
    seeds: u64,
    base_seed: u64,
) -> Result<MethodComparisonReport> {
    if seeds == 0 {
        return Err(Error::Data("comparison needs at least one seed".into()));
    }
    if regime.detunings.len() < 4 {
        return Err(Error::Data("comparison needs at least 4 detunings".into()));
    }

    let ratio = spring_per_absorption_rate(regime);
    let mut per_power: Vec<PowerComparison> = regime
        .powers_w
        .iter()
        .map(|&p| PowerComparison {
            power_w: p,
            fixed_rmse: Vec::new(),
            suspended_rmse: Vec::new(),
            mean_fixed_rmse: 0.0,
            mean_suspended_rmse: 0.0,
            ordering_count: 0,
            compared_seeds: 0,
        })
        .collect();

    let mut total_fits: u64 = 0;
    let mut failed_fits: u64 = 0;

    for seed_idx in 0..seeds {
        for (pi, &power) in regime.powers_w.iter().enumerate() {
            let mut fixed_entries = Vec::new();
            let mut suspended_entries = Vec::new();

            for (di, &xi0) in regime.detunings.iter().enumerate() {
                let op = OperatingPoint::new(power, xi0)?;
                let rates = photothermal_rates(&regime.cavity, &regime.crystal, &op)?;
                let k_opt = optical_spring_constant(&regime.cavity, &op);
                let stream = splitmix(
                    base_seed ^ splitmix(seed_idx ^ (pi as u64) << 24 ^ (di as u64) << 48),
                );

                // fixed mirror: cavity phase response, both rates free
                total_fits += 1;
                let data_a = synth_phase_dataset(
                    &CavityPhaseModel,
                    &[rates.absorption_rate, rates.relaxation_rate],
                    &regime.cavity_grid_hz,
                    regime.cavity_noise_deg,
                    stream,
                )?;
                let opts_a = PipelineOptions {
                    band_hz: Some((regime.band_min_hz, f64::INFINITY)),
                    ..Default::default()
                };
                match fit_cavity_response(&data_a, &opts_a) {
                    Ok(fit) if fit.usable() && fit.standard_errors[0] > 0.0 => {
                        fixed_entries.push(SweepEntry {
                            detuning: xi0,
                            detuning_sigma: 0.0,
                            value: fit.estimates[0],
                            sigma: fit.standard_errors[0],
                        });
                    }
                    _ => failed_fits += 1,
                }

                // suspended mirror: optomechanical response, relaxation fixed
                total_fits += 1;
                let model_b = OptomechPhaseModel {
                    mech: regime.mechanics,
                    relaxation_rate: rates.relaxation_rate,
                };
                let data_b = synth_phase_dataset(
                    &model_b,
                    &[k_opt, rates.absorption_rate],
                    &regime.optomech_grid_hz,
                    regime.optomech_noise_deg,
                    splitmix(stream),
                )?;
                let opts_b = PipelineOptions {
                    spring_per_absorption_rate: Some(ratio),
                    ..Default::default()
                };
                match fit_optomechanical_response(
                    &data_b,
                    &regime.mechanics,
                    rates.relaxation_rate,
                    &opts_b,
                ) {
                    Ok(fit) if fit.usable() && fit.standard_errors[1] > 0.0 => {
                        suspended_entries.push(SweepEntry {
                            detuning: xi0,
                            detuning_sigma: 0.0,
                            value: fit.estimates[1],
                            sigma: fit.standard_errors[1],
                        });
                    }
                    _ => failed_fits += 1,
                }
            }

            let rmse_of = |entries: Vec<SweepEntry>| -> Option<f64> {
                if entries.len() < 4 {
                    return None;
                }
                let sweep = DetuningSweep::new(entries).ok()?;
                let fit = fit_detuning_curve(&sweep).ok()?;
                let peak = fit.estimates[0];
                if !(peak.is_finite() && peak > 0.0) {
                    return None;
                }
                normalized_rmse(&fit, peak).ok()
            };
            if let (Some(ra), Some(rb)) = (rmse_of(fixed_entries), rmse_of(suspended_entries)) {
                let pc = &mut per_power[pi];
                pc.fixed_rmse.push(ra);
                pc.suspended_rmse.push(rb);
                pc.compared_seeds += 1;
                if ra > rb {
                    pc.ordering_count += 1;
                }
            }
        }
    }

    let mut ordered: u64 = 0;
    let mut compared: u64 = 0;
    for pc in &mut per_power {
        let n = pc.fixed_rmse.len().max(1) as f64;
        pc.mean_fixed_rmse = pc.fixed_rmse.iter().sum::<f64>() / n;
        pc.mean_suspended_rmse = pc.suspended_rmse.iter().sum::<f64>() / n;
        ordered += pc.ordering_count;
        compared += pc.compared_seeds;
    }
    let failed_fit_fraction = failed_fits as f64 / total_fits.max(1) as f64;
    Ok(MethodComparisonReport {
        per_power,
        ordering_fraction: ordered as f64 / compared.max(1) as f64,
        failed_fit_fraction,
        unreliable: failed_fit_fraction > 0.20,
        seeds,
        base_seed,
    })
}

/// Constant proportionality `k_opt / omega_th` implied by the regime configs.
pub fn spring_per_absorption_rate(regime: &ComparisonRegime) -> f64 {
    let op = OperatingPoint::new(regime.powers_w[0], crate::model::peak_detuning())
        .expect("valid operating point");
    let rates = photothermal_rates(&regime.cavity, &regime.crystal, &op).expect("valid rates");
    optical_spring_constant(&regime.cavity, &op) / rates.absorption_rate
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_regime() -> ComparisonRegime {
        ComparisonRegime {
            detunings: vec![0.4, 0.7, 1.1, 1.8],
            cavity_grid_hz: log_grid_hz(15.0, 1000.0, 30).unwrap(),
            optomech_grid_hz: log_grid_hz(2.0, 1000.0, 36).unwrap(),
            powers_w: vec![0.6],
            ..ComparisonRegime::reference()
        }
    }

    #[test]
    fn zero_noise_drives_both_rmse_to_zero() {
        let regime = ComparisonRegime {
            cavity_noise_deg: 0.0,
            optomech_noise_deg: 0.0,
            ..small_regime()
        };
        // zero-noise fits have zero variance and are excluded by the sigma
        // guard, so run with a whisper of noise instead
        let regime = ComparisonRegime {
            cavity_noise_deg: 1e-6,
            optomech_noise_deg: 1e-6,
            ..regime
        };
        let report = method_comparison(&regime, 2, 7).unwrap();
        for pc in &report.per_power {
            assert!(pc.mean_fixed_rmse < 1e-3, "{}", pc.mean_fixed_rmse);
            assert!(pc.mean_suspended_rmse < 1e-3, "{}", pc.mean_suspended_rmse);
        }
    }

    #[test]
    fn report_is_bit_reproducible() {
        let regime = small_regime();
        let a = method_comparison(&regime, 2, 42).unwrap();
        let b = method_comparison(&regime, 2, 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn ordering_holds_in_the_reference_regime() {
        let report = method_comparison(&small_regime(), 4, 11).unwrap();
        assert!(
            report.ordering_fraction > 0.5,
            "{}",
            report.ordering_fraction
        );
        assert!(!report.per_power[0].fixed_rmse.is_empty());
    }
}
