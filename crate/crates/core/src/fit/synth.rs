//! Synthetic phase datasets for estimator validation.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};

use super::dataset::{PhasePoint, ResponseDataset};
use super::models::{phase_curve_deg, PhaseModel};
use crate::{Error, Result};

/// Strictly increasing log-spaced frequency grid, Hz.
pub fn log_grid_hz(f_min: f64, f_max: f64, n: usize) -> Result<Vec<f64>> {
    if !(f_min.is_finite() && f_min > 0.0 && f_max.is_finite() && f_max > f_min) {
        return Err(Error::Data(format!(
            "invalid grid bounds [{f_min}, {f_max}]"
        )));
    }
    if n < 2 {
        return Err(Error::Data("grid needs at least 2 points".into()));
    }
    let ratio = (f_max / f_min).ln() / (n - 1) as f64;
    Ok((0..n).map(|i| f_min * (ratio * i as f64).exp()).collect())
}

/// Generate a noisy phase dataset from a forward model.
///
/// Phase noise is independent Gaussian per point with standard deviation
/// `sigma_deg`; `sigma_deg = 0` reproduces the model exactly. The generator
/// is a counter-based stream cipher seeded from `seed`, so identical inputs
/// give identical datasets.
pub fn synth_phase_dataset(
    model: &dyn PhaseModel,
    truth: &[f64],
    freqs_hz: &[f64],
    sigma_deg: f64,
    seed: u64,
) -> Result<ResponseDataset> {
    if !(sigma_deg.is_finite() && sigma_deg >= 0.0) {
        return Err(Error::Data(format!(
            "phase sigma must be >= 0, got {sigma_deg}"
        )));
    }
    let curve = phase_curve_deg(model, truth, freqs_hz, None)
        .ok_or_else(|| Error::Data("model rejects the truth parameters".into()))?;

    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let noise: Vec<f64> = if sigma_deg > 0.0 {
        let normal = Normal::new(0.0, sigma_deg).expect("finite sigma");
        (0..freqs_hz.len())
            .map(|_| normal.sample(&mut rng))
            .collect()
    } else {
        vec![0.0; freqs_hz.len()]
    };

    let points = freqs_hz
        .iter()
        .zip(curve.iter().zip(&noise))
        .map(|(&f, (ph, dn))| PhasePoint {
            frequency_hz: f,
            phase_deg: ph + dn,
            magnitude: model.response(truth, f).map(|r| r.norm()),
            phase_sigma_deg: if sigma_deg > 0.0 {
                Some(sigma_deg)
            } else {
                None
            },
        })
        .collect();
    ResponseDataset::new(points)
}
