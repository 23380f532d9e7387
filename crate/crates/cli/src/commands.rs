//! Scenario runners: each writes its data files, a column manifest, and a
//! report bundle into the output directory.

use std::path::Path;

use serde::Serialize;

use photospring::fit::{
    fit_cavity_response, fit_detuning_curve, fit_linear_zero_intercept,
    fit_optomechanical_response, log_grid_hz, method_comparison, normalized_rmse,
    synth_phase_dataset, unwrap_sequence_deg, CavityPhaseModel, ComparisonRegime, DetuningSweep,
    FitResult, MethodComparisonReport, OptomechPhaseModel, PhaseModel, PipelineOptions, SweepEntry,
    DEFAULT_BAND_MIN_HZ,
};
use photospring::model::{
    optical_spring_constant, photothermal_rates, FrequencyResponse, MechanicalConfig,
    OperatingPoint, ResponseQuantity,
};
use photospring::sim::{
    max_probe_amplitude, probe_small_signal, simulate_scan, simulate_selflock, ScanMetrics,
    ScanNormalization, SelflockOutcome, SelflockSpec,
};
use photospring::{hz_to_rad, rad_to_hz};

use crate::config::{RunConfig, Scenario};
use crate::csvio::{read_response_dataset, response_dataset_table, time_series_table, Table};
use crate::error::{CliError, ExitCode};
use crate::report::{Manifest, ManifestEntry, ReportBundle};

/// Run the configured scenario. `seed` is the effective RNG seed (config
/// value unless overridden).
pub fn run(config: &RunConfig, out_dir: &Path, seed: u64) -> Result<(), CliError> {
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::io(&format!("creating {}", out_dir.display()), e))?;
    match config.scenario {
        Scenario::Scan => cmd_scan(config, out_dir, seed),
        Scenario::Selflock => cmd_selflock(config, out_dir, seed),
        Scenario::Probe => cmd_probe(config, out_dir, seed),
        Scenario::Synth => cmd_synth(config, out_dir, seed),
        Scenario::Fit => cmd_fit(config, out_dir, seed),
        Scenario::Sweep => cmd_sweep(config, out_dir, seed),
        Scenario::Compare => cmd_compare(config, out_dir, seed),
    }
}

fn mix_seed(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Reports carry frequencies in Hz: convert any `*_rad_s` parameter.
fn to_hz_name(name: &str) -> (String, bool) {
    match name.strip_suffix("_rad_s") {
        Some(stem) => (format!("{stem}_hz"), true),
        None => (name.to_string(), false),
    }
}

fn fit_result_in_hz(fit: &FitResult) -> FitResult {
    let mut out = fit.clone();
    for (i, name) in fit.parameter_names.iter().enumerate() {
        let (new_name, convert) = to_hz_name(name);
        out.parameter_names[i] = new_name;
        if convert {
            out.estimates[i] = rad_to_hz(out.estimates[i]);
            out.standard_errors[i] = rad_to_hz(out.standard_errors[i]);
        }
    }
    out
}

#[derive(Serialize)]
struct ScanResults {
    normalization: String,
    metrics: ScanMetrics,
    initial_detuning: f64,
}

pub fn cmd_scan(config: &RunConfig, out_dir: &Path, seed: u64) -> Result<(), CliError> {
    let section = config.raw.scan.as_ref().expect("scan scenario");
    let op = config.first_operating_point()?;
    let normalization = match section.normalization.as_str() {
        "unit_half_width" => ScanNormalization::UnitHalfWidth,
        _ => ScanNormalization::Raw,
    };
    let out = simulate_scan(
        &config.cavity,
        &config.crystal,
        op.input_power,
        section.velocity_m_per_s,
        (section.detuning_start, section.detuning_stop),
        normalization,
        section.samples,
    )?;

    let mut outputs = vec!["scan.csv".to_string()];
    let mut manifest = vec![ManifestEntry {
        name: "scan.csv".into(),
        columns: time_series_table(&out.series).columns.clone(),
    }];
    time_series_table(&out.series).write(&out_dir.join("scan.csv"))?;
    if let Some(normalized) = &out.normalized {
        let table = Table {
            columns: vec!["time_norm", "p_trans_norm"],
            rows: normalized.iter().map(|&(t, p)| vec![t, p]).collect(),
        };
        table.write(&out_dir.join("scan_normalized.csv"))?;
        outputs.push("scan_normalized.csv".into());
        manifest.push(ManifestEntry {
            name: "scan_normalized.csv".into(),
            columns: table.columns,
        });
    }
    Manifest { files: manifest }.write(out_dir)?;
    ReportBundle::new(
        config,
        seed,
        outputs,
        ScanResults {
            normalization: section.normalization.clone(),
            metrics: out.metrics,
            initial_detuning: out.series.samples[0].xi,
        },
    )
    .write(out_dir)
}

#[derive(Serialize)]
struct SelflockResults {
    outcome: SelflockOutcome,
}

pub fn cmd_selflock(config: &RunConfig, out_dir: &Path, seed: u64) -> Result<(), CliError> {
    let section = config.raw.selflock.as_ref().expect("selflock scenario");
    let op = config.first_operating_point()?;
    let spec = SelflockSpec {
        parked_detuning: section.parked_detuning,
        heater_power_w: section.heater_power_w,
        t_on_s: section.heater_on_s,
        t_off_s: section.heater_off_s,
        t_end_s: section.duration_s,
    };
    let out = simulate_selflock(
        &config.cavity,
        &config.crystal,
        op.input_power,
        &spec,
        section.samples,
    )?;
    time_series_table(&out.series).write(&out_dir.join("selflock.csv"))?;
    Manifest {
        files: vec![ManifestEntry {
            name: "selflock.csv".into(),
            columns: time_series_table(&out.series).columns.clone(),
        }],
    }
    .write(out_dir)?;
    ReportBundle::new(
        config,
        seed,
        vec!["selflock.csv".into()],
        SelflockResults {
            outcome: out.outcome,
        },
    )
    .write(out_dir)
}

#[derive(Serialize)]
struct ProbeResults {
    amplitude_m: f64,
    model_absorption_rate_hz: f64,
    model_relaxation_rate_hz: f64,
    points: usize,
}

pub fn cmd_probe(config: &RunConfig, out_dir: &Path, seed: u64) -> Result<(), CliError> {
    let section = config.raw.probe.as_ref().expect("probe scenario");
    let op = config.first_operating_point()?;
    let amplitude = match section.amplitude_m {
        Some(a) => a,
        None => 0.6 * max_probe_amplitude(&config.cavity, &config.crystal, op)?,
    };
    let grid = log_grid_hz(section.freq_min_hz, section.freq_max_hz, section.points)?;

    let mut points = Vec::with_capacity(grid.len());
    for &f_hz in &grid {
        let omega = hz_to_rad(f_hz);
        let h = probe_small_signal(&config.cavity, &config.crystal, op, omega, amplitude)?;
        points.push((omega, h));
    }
    let response = FrequencyResponse::new(points, ResponseQuantity::CavityOpticalResponse)?;
    let mut phases: Vec<f64> = response
        .points()
        .iter()
        .map(|(_, h)| h.arg().to_degrees())
        .collect();
    unwrap_sequence_deg(&mut phases);
    let table = Table {
        columns: vec!["freq_hz", "real", "imag", "mag", "phase_deg"],
        rows: response
            .points()
            .iter()
            .zip(&phases)
            .map(|(&(omega, h), &ph)| vec![rad_to_hz(omega), h.re, h.im, h.norm(), ph])
            .collect(),
    };
    table.write(&out_dir.join("response.csv"))?;
    Manifest {
        files: vec![ManifestEntry {
            name: "response.csv".into(),
            columns: table.columns.clone(),
        }],
    }
    .write(out_dir)?;

    let rates = photothermal_rates(&config.cavity, &config.crystal, op)?;
    ReportBundle::new(
        config,
        seed,
        vec!["response.csv".into()],
        ProbeResults {
            amplitude_m: amplitude,
            model_absorption_rate_hz: rad_to_hz(rates.absorption_rate),
            model_relaxation_rate_hz: rad_to_hz(rates.relaxation_rate),
            points: grid.len(),
        },
    )
    .write(out_dir)
}

#[derive(Serialize)]
struct SynthResults {
    pipeline: String,
    parameter_names: Vec<String>,
    truth: Vec<f64>,
    phase_sigma_deg: f64,
}

/// Truth parameters and model for a synth/sweep generation at one operating
/// point.
fn forward_model(
    config: &RunConfig,
    pipeline: &str,
    op: &OperatingPoint,
    overrides: (&Option<f64>, &Option<f64>, &Option<f64>),
) -> Result<(Box<dyn PhaseModel>, Vec<f64>), CliError> {
    let rates = photothermal_rates(&config.cavity, &config.crystal, op)?;
    let (absorption_hz, relaxation_hz, spring) = overrides;
    let absorption = absorption_hz
        .map(hz_to_rad)
        .unwrap_or(rates.absorption_rate);
    let relaxation = relaxation_hz
        .map(hz_to_rad)
        .unwrap_or(rates.relaxation_rate);
    match pipeline {
        "cavity" => Ok((Box::new(CavityPhaseModel), vec![absorption, relaxation])),
        "optomech" => {
            let mech = config.mechanics_required()?;
            let k = spring.unwrap_or_else(|| optical_spring_constant(&config.cavity, op));
            Ok((
                Box::new(OptomechPhaseModel {
                    mech: *mech,
                    relaxation_rate: relaxation,
                }),
                vec![k, absorption],
            ))
        }
        other => Err(CliError::new(
            ExitCode::Config,
            format!("unknown pipeline `{other}`"),
        )),
    }
}

pub fn cmd_synth(config: &RunConfig, out_dir: &Path, seed: u64) -> Result<(), CliError> {
    let section = config.raw.synth.as_ref().expect("synth scenario");
    let op = config.first_operating_point()?;
    let (model, truth) = forward_model(
        config,
        &section.pipeline,
        op,
        (
            &section.absorption_rate_hz,
            &section.relaxation_rate_hz,
            &section.spring_constant_n_per_m,
        ),
    )?;
    let grid = log_grid_hz(section.freq_min_hz, section.freq_max_hz, section.points)?;
    let data = synth_phase_dataset(model.as_ref(), &truth, &grid, section.phase_sigma_deg, seed)?;
    let table = response_dataset_table(&data);
    table.write(&out_dir.join("dataset.csv"))?;
    Manifest {
        files: vec![ManifestEntry {
            name: "dataset.csv".into(),
            columns: table.columns.clone(),
        }],
    }
    .write(out_dir)?;
    let (parameter_names, truth) = model
        .parameter_names()
        .iter()
        .zip(&truth)
        .map(|(name, &value)| {
            let (new_name, convert) = to_hz_name(name);
            (new_name, if convert { rad_to_hz(value) } else { value })
        })
        .unzip();
    ReportBundle::new(
        config,
        seed,
        vec!["dataset.csv".into()],
        SynthResults {
            pipeline: section.pipeline.clone(),
            parameter_names,
            truth,
            phase_sigma_deg: section.phase_sigma_deg,
        },
    )
    .write(out_dir)
}

#[derive(Serialize)]
struct FitResults {
    pipeline: String,
    fit: FitResult,
}

/// Constant `k_opt / omega_th` from the configs, when the crystal absorbs.
fn spring_per_absorption(config: &RunConfig) -> Option<f64> {
    let power = config
        .operating_points
        .first()
        .map(|op| op.input_power)
        .filter(|p| *p > 0.0)
        .unwrap_or(1.0);
    let op = OperatingPoint::new(power, photospring::model::peak_detuning()).ok()?;
    let rates = photothermal_rates(&config.cavity, &config.crystal, &op).ok()?;
    if rates.absorption_rate == 0.0 {
        return None;
    }
    Some(optical_spring_constant(&config.cavity, &op) / rates.absorption_rate)
}

pub fn cmd_fit(config: &RunConfig, out_dir: &Path, seed: u64) -> Result<(), CliError> {
    let section = config.raw.fit.as_ref().expect("fit scenario");
    let data = read_response_dataset(&config.resolve_path(&section.data))?;

    let band = match (section.band_min_hz, section.band_max_hz) {
        (None, None) => None,
        (lo, hi) => Some((lo.unwrap_or(0.0), hi.unwrap_or(f64::INFINITY))),
    };
    let fit = match section.pipeline.as_str() {
        "cavity" => {
            let init = match (
                section.init_absorption_rate_hz,
                section.init_relaxation_rate_hz,
            ) {
                (Some(w), Some(g)) => Some(vec![hz_to_rad(w), hz_to_rad(g)]),
                _ => None,
            };
            let opts = PipelineOptions {
                band_hz: band.or(Some((DEFAULT_BAND_MIN_HZ, f64::INFINITY))),
                init,
                ..Default::default()
            };
            fit_cavity_response(&data, &opts)?
        }
        "optomech" => {
            let mech = config.mechanics_required()?;
            let relaxation = section
                .relaxation_rate_hz
                .map(hz_to_rad)
                .unwrap_or_else(|| config.crystal.relaxation_rate());
            let init = match (
                section.init_spring_constant_n_per_m,
                section.init_absorption_rate_hz,
            ) {
                (Some(k), Some(w)) => Some(vec![k, hz_to_rad(w)]),
                _ => None,
            };
            let opts = PipelineOptions {
                band_hz: band,
                init,
                spring_per_absorption_rate: spring_per_absorption(config),
                ..Default::default()
            };
            fit_optomechanical_response(&data, mech, relaxation, &opts)?
        }
        other => {
            return Err(CliError::new(
                ExitCode::Config,
                format!("unknown pipeline `{other}`"),
            ))
        }
    };

    // residual plot data over the fitted band
    let banded = match band {
        Some((lo, hi)) => data.banded(lo, hi)?,
        None => {
            if section.pipeline == "cavity" {
                data.banded(DEFAULT_BAND_MIN_HZ, f64::INFINITY)?
            } else {
                data.clone()
            }
        }
    };
    let table = Table {
        columns: vec!["freq_hz", "residual_deg"],
        rows: banded
            .frequencies_hz()
            .iter()
            .zip(&fit.residuals)
            .map(|(&f, &r)| vec![f, r])
            .collect(),
    };
    table.write(&out_dir.join("residuals.csv"))?;
    Manifest {
        files: vec![ManifestEntry {
            name: "residuals.csv".into(),
            columns: table.columns.clone(),
        }],
    }
    .write(out_dir)?;

    let converged = fit.converged;
    let identifiable = fit.identifiable;
    ReportBundle::new(
        config,
        seed,
        vec!["residuals.csv".into()],
        FitResults {
            pipeline: section.pipeline.clone(),
            fit: fit_result_in_hz(&fit),
        },
    )
    .write(out_dir)?;

    if !identifiable {
        return Err(CliError::new(
            ExitCode::NonConvergence,
            "non-identifiable: the data does not constrain the parameters",
        ));
    }
    if !converged {
        return Err(CliError::new(
            ExitCode::NonConvergence,
            "fit did not converge",
        ));
    }
    Ok(())
}

#[derive(Serialize)]
struct CurveSummary {
    quantity: String,
    power_w: f64,
    entries_used: usize,
    peak: f64,
    peak_sigma: f64,
    normalized_rmse: f64,
}

#[derive(Serialize)]
struct SlopeSummary {
    quantity: String,
    slope_per_w: f64,
    slope_sigma: f64,
}

#[derive(Serialize)]
struct SweepResults {
    pipeline: String,
    phase_sigma_deg: f64,
    curves: Vec<CurveSummary>,
    slopes: Vec<SlopeSummary>,
    excluded_fits: usize,
    /// Peak spring constant at the highest power expressed as an optical
    /// spring resonance, Hz (optomech pipeline with mechanics configured).
    peak_spring_resonance_hz: Option<f64>,
}

pub fn cmd_sweep(config: &RunConfig, out_dir: &Path, seed: u64) -> Result<(), CliError> {
    let section = config.raw.sweep.as_ref().expect("sweep scenario");
    if section.powers_w.is_empty() || section.detunings.is_empty() {
        return Err(CliError::new(
            ExitCode::Config,
            "sweep needs at least one power and one detuning",
        ));
    }
    let grid = log_grid_hz(section.freq_min_hz, section.freq_max_hz, section.points)?;
    let is_cavity = section.pipeline == "cavity";
    let mech: Option<MechanicalConfig> = if is_cavity {
        None
    } else {
        Some(*config.mechanics_required()?)
    };

    // quantity -> per-power sweep entries (rates in Hz at this boundary)
    let quantities: Vec<&str> = if is_cavity {
        vec!["absorption_rate_hz"]
    } else {
        vec!["spring_constant_n_per_m", "absorption_rate_hz"]
    };
    let mut entry_rows: Vec<Vec<f64>> = Vec::new();
    let mut curves = Vec::new();
    let mut slopes_input: Vec<Vec<(f64, f64, f64)>> = vec![Vec::new(); quantities.len()];
    let mut excluded = 0usize;

    for (pi, &power) in section.powers_w.iter().enumerate() {
        let mut sweeps: Vec<Vec<SweepEntry>> = vec![Vec::new(); quantities.len()];
        for (di, &xi0) in section.detunings.iter().enumerate() {
            let op = OperatingPoint::new(power, xi0)?;
            let (model, truth) =
                forward_model(config, &section.pipeline, &op, (&None, &None, &None))?;
            let sub_seed = mix_seed(seed ^ ((pi as u64) << 40) ^ ((di as u64) << 20));
            let data = synth_phase_dataset(
                model.as_ref(),
                &truth,
                &grid,
                section.phase_sigma_deg,
                sub_seed,
            )?;
            let fit = if is_cavity {
                let opts = PipelineOptions {
                    band_hz: Some((
                        section.band_min_hz.unwrap_or(DEFAULT_BAND_MIN_HZ),
                        f64::INFINITY,
                    )),
                    ..Default::default()
                };
                fit_cavity_response(&data, &opts)
            } else {
                let rates = photothermal_rates(&config.cavity, &config.crystal, &op)?;
                let opts = PipelineOptions {
                    spring_per_absorption_rate: spring_per_absorption(config),
                    ..Default::default()
                };
                fit_optomechanical_response(&data, &mech.unwrap(), rates.relaxation_rate, &opts)
            };
            match fit {
                Ok(fit) if fit.usable() => {
                    // map fitted parameters onto the tracked quantities;
                    // rates are emitted in Hz
                    let fit = fit_result_in_hz(&fit);
                    for (qi, q) in quantities.iter().enumerate() {
                        let idx = fit
                            .parameter_names
                            .iter()
                            .position(|n| n == q)
                            .expect("quantity fitted");
                        if fit.standard_errors[idx] > 0.0 {
                            sweeps[qi].push(SweepEntry {
                                detuning: xi0,
                                detuning_sigma: 0.0,
                                value: fit.estimates[idx],
                                sigma: fit.standard_errors[idx],
                            });
                            entry_rows.push(vec![
                                power,
                                xi0,
                                qi as f64,
                                fit.estimates[idx],
                                fit.standard_errors[idx],
                            ]);
                        }
                    }
                }
                _ => excluded += 1,
            }
        }
        for (qi, q) in quantities.iter().enumerate() {
            let entries = std::mem::take(&mut sweeps[qi]);
            let used = entries.len();
            if used < 4 {
                continue;
            }
            let sweep = DetuningSweep::new(entries).map_err(CliError::from_core)?;
            let fit = fit_detuning_curve(&sweep).map_err(CliError::from_core)?;
            let peak = fit.estimates[0];
            let nrmse = normalized_rmse(&fit, peak.abs().max(f64::MIN_POSITIVE))
                .map_err(CliError::from_core)?;
            slopes_input[qi].push((power, peak, fit.standard_errors[0]));
            curves.push(CurveSummary {
                quantity: q.to_string(),
                power_w: power,
                entries_used: used,
                peak,
                peak_sigma: fit.standard_errors[0],
                normalized_rmse: nrmse,
            });
        }
    }

    let mut slopes = Vec::new();
    for (qi, q) in quantities.iter().enumerate() {
        if slopes_input[qi].len() >= 2 {
            let (slope, sigma) =
                fit_linear_zero_intercept(&slopes_input[qi]).map_err(CliError::from_core)?;
            slopes.push(SlopeSummary {
                quantity: q.to_string(),
                slope_per_w: slope,
                slope_sigma: sigma,
            });
        }
    }

    let peak_spring_resonance_hz = mech.and_then(|m| {
        curves
            .iter()
            .filter(|c| c.quantity == "spring_constant_n_per_m")
            .max_by(|a, b| a.power_w.partial_cmp(&b.power_w).unwrap())
            .map(|c| rad_to_hz((c.peak / m.effective_mass).sqrt()))
    });

    let table = Table {
        columns: vec!["power_w", "detuning", "quantity_index", "value", "sigma"],
        rows: entry_rows,
    };
    table.write(&out_dir.join("sweep_entries.csv"))?;
    Manifest {
        files: vec![ManifestEntry {
            name: "sweep_entries.csv".into(),
            columns: table.columns.clone(),
        }],
    }
    .write(out_dir)?;
    ReportBundle::new(
        config,
        seed,
        vec!["sweep_entries.csv".into()],
        SweepResults {
            pipeline: section.pipeline.clone(),
            phase_sigma_deg: section.phase_sigma_deg,
            curves,
            slopes,
            excluded_fits: excluded,
            peak_spring_resonance_hz,
        },
    )
    .write(out_dir)
}

pub fn cmd_compare(config: &RunConfig, out_dir: &Path, seed: u64) -> Result<(), CliError> {
    let section = config.raw.compare.as_ref().expect("compare scenario");
    let mech = config.mechanics_required()?;
    let mut regime = ComparisonRegime::reference();
    regime.cavity = config.cavity;
    regime.crystal = config.crystal;
    regime.mechanics = *mech;
    if let Some(p) = &section.powers_w {
        regime.powers_w = p.clone();
    }
    if let Some(d) = &section.detunings {
        regime.detunings = d.clone();
    }
    if let Some(s) = section.cavity_noise_deg {
        regime.cavity_noise_deg = s;
    }
    if let Some(s) = section.optomech_noise_deg {
        regime.optomech_noise_deg = s;
    }

    let report: MethodComparisonReport = method_comparison(&regime, section.seeds, seed)?;

    let mut rows = Vec::new();
    for pc in &report.per_power {
        for (f, s) in pc.fixed_rmse.iter().zip(&pc.suspended_rmse) {
            rows.push(vec![pc.power_w, *f, *s]);
        }
    }
    let table = Table {
        columns: vec!["power_w", "fixed_rmse", "suspended_rmse"],
        rows,
    };
    table.write(&out_dir.join("compare.csv"))?;
    Manifest {
        files: vec![ManifestEntry {
            name: "compare.csv".into(),
            columns: table.columns.clone(),
        }],
    }
    .write(out_dir)?;
    ReportBundle::new(config, seed, vec!["compare.csv".into()], report).write(out_dir)
}
