//! Run configuration: a keyed TOML file with explicit unit suffixes.
//!
//! Exactly one scenario block (`scan`, `selflock`, `probe`, `synth`, `fit`,
//! `sweep`, `compare`) must be present per run. Frequencies are given in Hz
//! and converted to angular units at this boundary.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use photospring::model::{CavityConfig, CrystalConfig, MechanicalConfig, OperatingPoint};

use crate::error::{CliError, ExitCode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    #[serde(default)]
    pub rng_seed: u64,
    pub cavity: CavitySection,
    pub crystal: CrystalSection,
    #[serde(default)]
    pub mechanics: Option<MechanicsSection>,
    #[serde(default)]
    pub operating_points: Vec<OperatingPointSection>,
    #[serde(default)]
    pub scan: Option<ScanSection>,
    #[serde(default)]
    pub selflock: Option<SelflockSection>,
    #[serde(default)]
    pub probe: Option<ProbeSection>,
    #[serde(default)]
    pub synth: Option<SynthSection>,
    #[serde(default)]
    pub fit: Option<FitSection>,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub compare: Option<CompareSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavitySection {
    pub finesse: f64,
    pub one_way_length_m: f64,
    pub wavelength_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrystalSection {
    pub thermal_expansion_per_k: f64,
    pub absorption_per_m: f64,
    pub length_m: f64,
    pub heat_capacity_j_per_k: f64,
    pub thermal_resistance_k_per_w: f64,
    pub thermal_conductivity_w_per_m_k: f64,
    pub density_kg_per_m3: f64,
    pub specific_heat_j_per_kg_k: f64,
    pub beam_radius_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MechanicsSection {
    pub effective_mass_kg: f64,
    pub resonance_hz: f64,
    pub quality_factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatingPointSection {
    pub input_power_w: f64,
    pub detuning: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    pub velocity_m_per_s: f64,
    pub detuning_start: f64,
    pub detuning_stop: f64,
    #[serde(default = "default_normalization")]
    pub normalization: String,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelflockSection {
    pub parked_detuning: f64,
    pub heater_power_w: f64,
    pub heater_on_s: f64,
    pub heater_off_s: f64,
    pub duration_s: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSection {
    pub freq_min_hz: f64,
    pub freq_max_hz: f64,
    pub points: usize,
    /// Drive amplitude; when omitted, 60% of the linearity-guard maximum.
    #[serde(default)]
    pub amplitude_m: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSection {
    /// `cavity` or `optomech`.
    pub pipeline: String,
    pub freq_min_hz: f64,
    pub freq_max_hz: f64,
    pub points: usize,
    pub phase_sigma_deg: f64,
    /// Truth overrides; computed from the configs and the first operating
    /// point when omitted.
    #[serde(default)]
    pub absorption_rate_hz: Option<f64>,
    #[serde(default)]
    pub relaxation_rate_hz: Option<f64>,
    #[serde(default)]
    pub spring_constant_n_per_m: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSection {
    /// `cavity` or `optomech`.
    pub pipeline: String,
    /// Dataset CSV path, resolved relative to the config file.
    pub data: String,
    #[serde(default)]
    pub band_min_hz: Option<f64>,
    #[serde(default)]
    pub band_max_hz: Option<f64>,
    /// Fixed relaxation rate for the optomech pipeline.
    #[serde(default)]
    pub relaxation_rate_hz: Option<f64>,
    #[serde(default)]
    pub init_absorption_rate_hz: Option<f64>,
    #[serde(default)]
    pub init_relaxation_rate_hz: Option<f64>,
    #[serde(default)]
    pub init_spring_constant_n_per_m: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// `cavity` or `optomech`.
    pub pipeline: String,
    pub powers_w: Vec<f64>,
    pub detunings: Vec<f64>,
    pub phase_sigma_deg: f64,
    pub freq_min_hz: f64,
    pub freq_max_hz: f64,
    pub points: usize,
    #[serde(default)]
    pub band_min_hz: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareSection {
    pub seeds: u64,
    #[serde(default)]
    pub powers_w: Option<Vec<f64>>,
    #[serde(default)]
    pub detunings: Option<Vec<f64>>,
    #[serde(default)]
    pub cavity_noise_deg: Option<f64>,
    #[serde(default)]
    pub optomech_noise_deg: Option<f64>,
}

fn default_normalization() -> String {
    "raw".into()
}

fn default_samples() -> usize {
    2000
}

/// Which scenario a run executes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Scan,
    Selflock,
    Probe,
    Synth,
    Fit,
    Sweep,
    Compare,
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Scenario::Scan => "scan",
            Scenario::Selflock => "selflock",
            Scenario::Probe => "probe",
            Scenario::Synth => "synth",
            Scenario::Fit => "fit",
            Scenario::Sweep => "sweep",
            Scenario::Compare => "compare",
        };
        f.write_str(name)
    }
}

/// A validated run configuration with domain types constructed.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub raw: RawConfig,
    pub cavity: CavityConfig,
    pub crystal: CrystalConfig,
    pub mechanics: Option<MechanicalConfig>,
    pub operating_points: Vec<OperatingPoint>,
    pub scenario: Scenario,
    pub rng_seed: u64,
    /// Directory of the config file; relative data paths resolve here.
    pub base_dir: PathBuf,
}

impl RunConfig {
    pub fn first_operating_point(&self) -> Result<&OperatingPoint, CliError> {
        self.operating_points.first().ok_or_else(|| {
            CliError::new(
                ExitCode::Config,
                "this scenario requires at least one [[operating_points]] entry",
            )
        })
    }

    pub fn mechanics_required(&self) -> Result<&MechanicalConfig, CliError> {
        self.mechanics.as_ref().ok_or_else(|| {
            CliError::new(
                ExitCode::Config,
                "this scenario requires a [mechanics] section",
            )
        })
    }

    pub fn resolve_path(&self, p: &str) -> PathBuf {
        let path = Path::new(p);
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }
}

/// Load and validate a configuration file.
pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        CliError::new(
            ExitCode::Config,
            format!("cannot read {}: {e}", path.display()),
        )
    })?;
    let raw: RawConfig = toml::from_str(&text)
        .map_err(|e| CliError::new(ExitCode::Config, format!("{}: {e}", path.display())))?;
    let base_dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();
    validate(raw, base_dir)
}

fn validate(raw: RawConfig, base_dir: PathBuf) -> Result<RunConfig, CliError> {
    let config_err = |e: photospring::Error| CliError::from_core(e);

    let cavity = CavityConfig::from_wavelength(
        raw.cavity.finesse,
        raw.cavity.one_way_length_m,
        raw.cavity.wavelength_m,
    )
    .map_err(config_err)?;
    let crystal = CrystalConfig::new(
        raw.crystal.thermal_expansion_per_k,
        raw.crystal.absorption_per_m,
        raw.crystal.length_m,
        raw.crystal.heat_capacity_j_per_k,
        raw.crystal.thermal_resistance_k_per_w,
        raw.crystal.thermal_conductivity_w_per_m_k,
        raw.crystal.density_kg_per_m3,
        raw.crystal.specific_heat_j_per_kg_k,
        raw.crystal.beam_radius_m,
    )
    .map_err(config_err)?;
    let mechanics = raw
        .mechanics
        .as_ref()
        .map(|m| {
            MechanicalConfig::new(
                m.effective_mass_kg,
                photospring::hz_to_rad(m.resonance_hz),
                m.quality_factor,
            )
        })
        .transpose()
        .map_err(config_err)?;
    let operating_points = raw
        .operating_points
        .iter()
        .map(|p| OperatingPoint::new(p.input_power_w, p.detuning))
        .collect::<Result<Vec<_>, _>>()
        .map_err(config_err)?;

    let mut scenarios = Vec::new();
    if raw.scan.is_some() {
        scenarios.push(Scenario::Scan);
    }
    if raw.selflock.is_some() {
        scenarios.push(Scenario::Selflock);
    }
    if raw.probe.is_some() {
        scenarios.push(Scenario::Probe);
    }
    if raw.synth.is_some() {
        scenarios.push(Scenario::Synth);
    }
    if raw.fit.is_some() {
        scenarios.push(Scenario::Fit);
    }
    if raw.sweep.is_some() {
        scenarios.push(Scenario::Sweep);
    }
    if raw.compare.is_some() {
        scenarios.push(Scenario::Compare);
    }
    let scenario = match scenarios.as_slice() {
        [one] => *one,
        [] => {
            return Err(CliError::new(
                ExitCode::Config,
                "no scenario block found; add exactly one of [scan], [selflock], [probe], \
                 [synth], [fit], [sweep], [compare]",
            ))
        }
        many => {
            return Err(CliError::new(
                ExitCode::Config,
                format!(
                    "exactly one scenario block is allowed per run, found {}",
                    many.iter()
                        .map(|s| s.to_string())
                        .collect::<Vec<_>>()
                        .join(", ")
                ),
            ))
        }
    };

    if let Some(scan) = &raw.scan {
        if !["raw", "unit_half_width"].contains(&scan.normalization.as_str()) {
            return Err(CliError::new(
                ExitCode::Config,
                format!(
                    "scan.normalization: expected `raw` or `unit_half_width`, got `{}`",
                    scan.normalization
                ),
            ));
        }
    }
    for (section, pipeline) in [
        (raw.synth.as_ref().map(|s| s.pipeline.as_str()), "synth"),
        (raw.fit.as_ref().map(|s| s.pipeline.as_str()), "fit"),
        (raw.sweep.as_ref().map(|s| s.pipeline.as_str()), "sweep"),
    ] {
        if let Some(p) = section {
            if !["cavity", "optomech"].contains(&p) {
                return Err(CliError::new(
                    ExitCode::Config,
                    format!("{pipeline}.pipeline: expected `cavity` or `optomech`, got `{p}`"),
                ));
            }
        }
    }

    let rng_seed = raw.rng_seed;
    let config = RunConfig {
        raw,
        cavity,
        crystal,
        mechanics,
        operating_points,
        scenario,
        rng_seed,
        base_dir,
    };

    // referenced files must exist at load time
    if let Some(fit) = &config.raw.fit {
        let data = config.resolve_path(&fit.data);
        if !data.exists() {
            return Err(CliError::new(
                ExitCode::Config,
                format!("fit.data: file not found: {}", data.display()),
            ));
        }
    }
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(content: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("photospring-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join(format!(
            "cfg-{}.toml",
            std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .unwrap()
                .as_nanos()
        ));
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(content.as_bytes()).unwrap();
        path
    }

    const MINIMAL: &str = r#"
[cavity]
finesse = 100.0
one_way_length_m = 0.43
wavelength_m = 1.064e-6

[crystal]
thermal_expansion_per_k = 2.0e-6
absorption_per_m = 0.5
length_m = 0.01
heat_capacity_j_per_k = 0.02
thermal_resistance_k_per_w = 0.66
thermal_conductivity_w_per_m_k = 2.2
density_kg_per_m3 = 3.0e3
specific_heat_j_per_kg_k = 690.0
beam_radius_m = 4.0e-5

[[operating_points]]
input_power_w = 0.6
detuning = 1.0

[scan]
velocity_m_per_s = 1.0e-7
detuning_start = -6.0
detuning_stop = 6.0
"#;

    #[test]
    fn minimal_config_parses() {
        let path = write_tmp(MINIMAL);
        let config = load_config(&path).unwrap();
        assert_eq!(config.scenario, Scenario::Scan);
        assert_eq!(config.rng_seed, 0);
        assert_eq!(config.operating_points.len(), 1);
    }

    #[test]
    fn reference_hardware_reproduces_decay_rate() {
        let path = write_tmp(&MINIMAL.replace(
            "[[operating_points]]",
            "[mechanics]\neffective_mass_kg = 2.8e-4\nresonance_hz = 14.2\nquality_factor = 193.0\n\n[[operating_points]]",
        ));
        let config = load_config(&path).unwrap();
        let gamma = config.cavity.decay_rate();
        assert!((gamma - 1.1e7).abs() / 1.1e7 < 0.01, "gamma = {gamma:.4e}");
        let mech = config.mechanics.unwrap();
        assert!((mech.quality_factor - 193.0).abs() < 1e-12);
    }

    #[test]
    fn negative_heat_capacity_rejected_with_field() {
        let path = write_tmp(&MINIMAL.replace(
            "heat_capacity_j_per_k = 0.02",
            "heat_capacity_j_per_k = -0.02",
        ));
        let err = load_config(&path).unwrap_err();
        assert_eq!(err.code, ExitCode::Config);
        assert!(err.message.contains("heat_capacity"), "{}", err.message);
    }

    #[test]
    fn unknown_keys_rejected_with_path() {
        let path = write_tmp(&format!("{MINIMAL}\nbogus_key = 1\n"));
        let err = load_config(&path).unwrap_err();
        assert_eq!(err.code, ExitCode::Config);
        assert!(err.message.contains("bogus_key"), "{}", err.message);
    }

    #[test]
    fn two_scenarios_rejected() {
        let path = write_tmp(&format!(
            "{MINIMAL}\n[probe]\nfreq_min_hz = 10.0\nfreq_max_hz = 100.0\npoints = 5\n"
        ));
        let err = load_config(&path).unwrap_err();
        assert_eq!(err.code, ExitCode::Config);
        assert!(err.message.contains("exactly one"), "{}", err.message);
    }

    #[test]
    fn missing_fit_data_rejected() {
        let path = write_tmp(&MINIMAL.replace(
            "[scan]\nvelocity_m_per_s = 1.0e-7\ndetuning_start = -6.0\ndetuning_stop = 6.0",
            "[fit]\npipeline = \"cavity\"\ndata = \"does-not-exist.csv\"",
        ));
        let err = load_config(&path).unwrap_err();
        assert_eq!(err.code, ExitCode::Config);
        assert!(err.message.contains("not found"), "{}", err.message);
    }
}
