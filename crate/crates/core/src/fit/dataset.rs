//! Phase-response datasets consumed by the estimation pipelines.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One measured point of a phase response.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub frequency_hz: f64,
    pub phase_deg: f64,
    /// Optional magnitude (dimensionless; instrument gain is not modeled).
    pub magnitude: Option<f64>,
    /// Optional per-point phase uncertainty, degrees.
    pub phase_sigma_deg: Option<f64>,
}

/// An ordered phase-response dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseDataset {
    points: Vec<PhasePoint>,
}

impl ResponseDataset {
    pub fn new(points: Vec<PhasePoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Data("dataset is empty".into()));
        }
        let mut prev = 0.0;
        for p in &points {
            if !(p.frequency_hz.is_finite() && p.frequency_hz > prev) {
                return Err(Error::Data(format!(
                    "frequencies must be strictly increasing and positive, got {} after {}",
                    p.frequency_hz, prev
                )));
            }
            if !p.phase_deg.is_finite() {
                return Err(Error::Data(format!(
                    "non-finite phase at {} Hz",
                    p.frequency_hz
                )));
            }
            if let Some(s) = p.phase_sigma_deg {
                if !(s.is_finite() && s > 0.0) {
                    return Err(Error::Data(format!(
                        "phase sigma must be finite and > 0, got {s} at {} Hz",
                        p.frequency_hz
                    )));
                }
            }
            prev = p.frequency_hz;
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[PhasePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn frequencies_hz(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.frequency_hz).collect()
    }

    pub fn phases_deg(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.phase_deg).collect()
    }

    /// Inverse-variance weights when sigmas are present, unit weights otherwise.
    pub fn weights(&self) -> Vec<f64> {
        self.points
            .iter()
            .map(|p| match p.phase_sigma_deg {
                Some(s) => 1.0 / (s * s),
                None => 1.0,
            })
            .collect()
    }

    /// Restrict to points inside `[f_min, f_max]` (Hz).
    pub fn banded(&self, f_min_hz: f64, f_max_hz: f64) -> Result<Self> {
        let kept: Vec<PhasePoint> = self
            .points
            .iter()
            .copied()
            .filter(|p| p.frequency_hz >= f_min_hz && p.frequency_hz <= f_max_hz)
            .collect();
        if kept.is_empty() {
            return Err(Error::Data(format!(
                "band [{f_min_hz}, {f_max_hz}] Hz leaves no data points"
            )));
        }
        Self::new(kept)
    }
}
