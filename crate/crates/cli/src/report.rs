//! Machine-readable run reports with provenance.

use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::csvio::write_atomic;
use crate::error::CliError;

/// Results plus provenance, serialized as `report.json` in the output
/// directory. Re-running with an identical config and seed reproduces the
/// numeric payload byte for byte.
#[derive(Debug, Serialize)]
pub struct ReportBundle<R: Serialize> {
    pub tool: ToolInfo,
    /// SHA-256 of the canonical serialization of the parsed configuration.
    pub config_hash: String,
    /// Effective RNG seed (config value unless overridden on the command line).
    pub seed: u64,
    pub scenario: String,
    /// Files emitted alongside this report.
    pub outputs: Vec<String>,
    pub results: R,
}

#[derive(Debug, Serialize)]
pub struct ToolInfo {
    pub name: &'static str,
    pub version: &'static str,
}

impl ToolInfo {
    pub fn current() -> Self {
        Self {
            name: "photospring",
            version: env!("CARGO_PKG_VERSION"),
        }
    }
}

/// Hash the parsed (semantic) configuration: formatting and comments in the
/// file do not affect it, any field change does.
pub fn config_hash(config: &RunConfig) -> String {
    let canonical = serde_json::to_vec(&config.raw).expect("config serializes");
    let mut hasher = Sha256::new();
    hasher.update(&canonical);
    format!("sha256:{:x}", hasher.finalize())
}

impl<R: Serialize> ReportBundle<R> {
    pub fn new(config: &RunConfig, seed: u64, outputs: Vec<String>, results: R) -> Self {
        Self {
            tool: ToolInfo::current(),
            config_hash: config_hash(config),
            seed,
            scenario: config.scenario.to_string(),
            outputs,
            results,
        }
    }

    pub fn write(&self, out_dir: &Path) -> Result<(), CliError> {
        let json = serde_json::to_string_pretty(self).expect("report serializes");
        write_atomic(&out_dir.join("report.json"), &json)
    }
}

/// Column manifest describing every emitted data file.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub files: Vec<ManifestEntry>,
}

#[derive(Debug, Serialize)]
pub struct ManifestEntry {
    pub name: String,
    pub columns: Vec<&'static str>,
}

impl Manifest {
    pub fn write(&self, out_dir: &Path) -> Result<(), CliError> {
        let json = serde_json::to_string_pretty(self).expect("manifest serializes");
        write_atomic(&out_dir.join("manifest.json"), &json)
    }
}
