//! Aggregation of per-operating-point estimates: weighted averages, the
//! detuning-curve fit, and the zero-intercept power law.

use serde::{Deserialize, Serialize};

use super::nls::FitResult;
use crate::model::normalized_detuning_shape;
use crate::{Error, Result};

/// Inverse-variance weighted mean and its standard error.
pub fn weighted_average(values: &[(f64, f64)]) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::Data("weighted average of an empty list".into()));
    }
    let mut sum_w = 0.0;
    let mut sum_wv = 0.0;
    for &(v, sigma) in values {
        if !(sigma.is_finite() && sigma > 0.0) || !v.is_finite() {
            return Err(Error::Data(format!("invalid entry ({v}, {sigma})")));
        }
        let w = 1.0 / (sigma * sigma);
        sum_w += w;
        sum_wv += w * v;
    }
    Ok((sum_wv / sum_w, (1.0 / sum_w).sqrt()))
}

/// One converged estimate at a stationary detuning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub detuning: f64,
    /// Setting uncertainty of the detuning (reported, not used as a weight).
    pub detuning_sigma: f64,
    pub value: f64,
    pub sigma: f64,
}

/// Estimates of one quantity across a detuning sweep at fixed input power.
/// Only converged, identifiable fits may enter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetuningSweep {
    entries: Vec<SweepEntry>,
}

impl DetuningSweep {
    pub fn new(entries: Vec<SweepEntry>) -> Result<Self> {
        for e in &entries {
            if !(e.sigma.is_finite()
                && e.sigma > 0.0
                && e.value.is_finite()
                && e.detuning.is_finite())
            {
                return Err(Error::Data(format!("invalid sweep entry {e:?}")));
            }
        }
        for (i, a) in entries.iter().enumerate() {
            for b in &entries[i + 1..] {
                if a.detuning == b.detuning {
                    return Err(Error::Data(format!("duplicate detuning {}", a.detuning)));
                }
            }
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[SweepEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Weighted fit of `value(xi0) = peak * shape(xi0)` where `shape` is the
/// detuning dependence normalized to one at its maximum `xi0 = 1/sqrt(3)`.
///
/// Weights are the inverse variances of the entries; the returned standard
/// error is the unscaled inverse-variance error of the linear estimator, so
/// exact data reproduces the peak exactly with a finite error bar.
pub fn fit_detuning_curve(sweep: &DetuningSweep) -> Result<FitResult> {
    if sweep.len() < 4 {
        return Err(Error::Data(format!(
            "detuning-curve fit needs at least 4 converged entries, got {}",
            sweep.len()
        )));
    }
    let mut sum_wgg = 0.0;
    let mut sum_wgv = 0.0;
    for e in sweep.entries() {
        let g = normalized_detuning_shape(e.detuning);
        let w = 1.0 / (e.sigma * e.sigma);
        sum_wgg += w * g * g;
        sum_wgv += w * g * e.value;
    }
    if sum_wgg <= 0.0 || !sum_wgg.is_finite() {
        return Err(Error::Data(
            "degenerate design: detunings carry no curve information".into(),
        ));
    }
    let peak = sum_wgv / sum_wgg;
    let sigma = (1.0 / sum_wgg).sqrt();
    let residuals: Vec<f64> = sweep
        .entries()
        .iter()
        .map(|e| peak * normalized_detuning_shape(e.detuning) - e.value)
        .collect();
    let objective = sweep
        .entries()
        .iter()
        .zip(&residuals)
        .map(|(e, r)| r * r / (e.sigma * e.sigma))
        .sum();
    Ok(FitResult {
        parameter_names: vec!["peak_value".into()],
        estimates: vec![peak],
        standard_errors: vec![sigma],
        objective,
        iterations: 1,
        converged: true,
        identifiable: true,
        residuals,
    })
}

/// Weighted least squares of `value = slope * power` through the origin.
/// Returns `(slope, sigma)`.
pub fn fit_linear_zero_intercept(points: &[(f64, f64, f64)]) -> Result<(f64, f64)> {
    if points.len() < 2 {
        return Err(Error::Data(
            "zero-intercept fit needs at least 2 points".into(),
        ));
    }
    let distinct = points
        .iter()
        .any(|&(p, _, _)| (p - points[0].0).abs() > 1e-12 * points[0].0.abs().max(1.0));
    if !distinct && points.len() < 2 {
        return Err(Error::Data(
            "zero-intercept fit needs distinct powers".into(),
        ));
    }
    let mut sum_wpp = 0.0;
    let mut sum_wpv = 0.0;
    for &(power, value, sigma) in points {
        if !(sigma.is_finite() && sigma > 0.0) || !power.is_finite() || !value.is_finite() {
            return Err(Error::Data(format!(
                "invalid point ({power}, {value}, {sigma})"
            )));
        }
        let w = 1.0 / (sigma * sigma);
        sum_wpp += w * power * power;
        sum_wpv += w * power * value;
    }
    if sum_wpp <= 0.0 {
        return Err(Error::Data(
            "all powers are zero; slope is undefined".into(),
        ));
    }
    Ok((sum_wpv / sum_wpp, (1.0 / sum_wpp).sqrt()))
}

/// Root mean square of a fit's residuals divided by a reference maximum.
pub fn normalized_rmse(fit: &FitResult, reference_max: f64) -> Result<f64> {
    if !(reference_max.is_finite() && reference_max > 0.0) {
        return Err(Error::Data(format!(
            "reference maximum must be > 0, got {reference_max}"
        )));
    }
    Ok(fit.rmse() / reference_max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::peak_detuning;
    use approx::assert_relative_eq;

    #[test]
    fn weighted_average_single_entry_unchanged() {
        let (v, s) = weighted_average(&[(30.0, 0.4)]).unwrap();
        assert_eq!(v, 30.0);
        assert_relative_eq!(s, 0.4, max_relative = 1e-15);
    }

    #[test]
    fn weighted_average_equal_entries_shrink_sigma() {
        let (v, s) = weighted_average(&[(30.0, 0.5), (30.0, 0.5)]).unwrap();
        assert_eq!(v, 30.0);
        assert_relative_eq!(s, 0.5 / 2.0_f64.sqrt(), max_relative = 1e-14);
    }

    #[test]
    fn weighted_average_closed_form_oracle() {
        // {(29, 0.5), (31, 0.5), (30, 0.4)} -> (30.0, 0.264906...)
        let (v, s) = weighted_average(&[(29.0, 0.5), (31.0, 0.5), (30.0, 0.4)]).unwrap();
        assert_relative_eq!(v, 30.0, max_relative = 1e-14);
        assert_relative_eq!(s, 0.26490647141300877, max_relative = 1e-14);
    }

    #[test]
    fn weighted_average_never_exceeds_best_input_sigma() {
        let inputs = [(29.0, 0.5), (31.0, 0.7), (30.0, 0.4), (30.5, 1.1)];
        let (_, s) = weighted_average(&inputs).unwrap();
        assert!(s <= inputs.iter().map(|x| x.1).fold(f64::INFINITY, f64::min));
    }

    #[test]
    fn weighted_average_rejects_empty_and_bad_sigma() {
        assert!(weighted_average(&[]).is_err());
        assert!(weighted_average(&[(1.0, 0.0)]).is_err());
    }

    fn exact_sweep(peak: f64, detunings: &[f64]) -> DetuningSweep {
        DetuningSweep::new(
            detunings
                .iter()
                .map(|&xi| SweepEntry {
                    detuning: xi,
                    detuning_sigma: 0.02,
                    value: peak * normalized_detuning_shape(xi),
                    sigma: 0.05,
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn detuning_curve_recovers_exact_peak() {
        let sweep = exact_sweep(42.0, &[0.3, 0.6, 1.0, 1.5, 2.2]);
        let fit = fit_detuning_curve(&sweep).unwrap();
        assert_relative_eq!(fit.estimates[0], 42.0, max_relative = 1e-12);
        assert!(fit.standard_errors[0] > 0.0);
        assert!(fit.residuals.iter().all(|r| r.abs() < 1e-10));
    }

    #[test]
    fn detuning_curve_needs_four_entries() {
        let sweep = exact_sweep(42.0, &[0.3, 0.6, 1.0]);
        assert!(fit_detuning_curve(&sweep).is_err());
    }

    #[test]
    fn sweep_rejects_duplicate_detunings() {
        let entries = vec![
            SweepEntry {
                detuning: 1.0,
                detuning_sigma: 0.0,
                value: 1.0,
                sigma: 0.1,
            },
            SweepEntry {
                detuning: 1.0,
                detuning_sigma: 0.0,
                value: 1.1,
                sigma: 0.1,
            },
        ];
        assert!(DetuningSweep::new(entries).is_err());
    }

    #[test]
    fn curve_value_at_unit_detuning_matches_arithmetic_oracle() {
        // shape(1)/shape(1/sqrt3) = 0.25 * (16/9) * sqrt(3)
        let sweep = exact_sweep(1.0, &[0.4, 0.8, 1.0, 1.6]);
        let fit = fit_detuning_curve(&sweep).unwrap();
        let predicted = fit.estimates[0] * normalized_detuning_shape(1.0);
        assert_relative_eq!(predicted, 0.7698003589195009, max_relative = 1e-12);
        let _ = peak_detuning();
    }

    #[test]
    fn zero_intercept_exact_line() {
        let (slope, sigma) =
            fit_linear_zero_intercept(&[(0.1, 0.5, 0.01), (0.2, 1.0, 0.01), (0.4, 2.0, 0.01)])
                .unwrap();
        assert_relative_eq!(slope, 5.0, max_relative = 1e-13);
        assert!(sigma > 0.0);
    }

    #[test]
    fn zero_intercept_closed_form_oracle() {
        // {(0.15, 1.5, 0.1), (0.3, 3.1, 0.1), (0.6, 5.9, 0.1)}
        let (slope, sigma) =
            fit_linear_zero_intercept(&[(0.15, 1.5, 0.1), (0.3, 3.1, 0.1), (0.6, 5.9, 0.1)])
                .unwrap();
        assert_relative_eq!(slope, 9.936507936507935, max_relative = 1e-13);
        assert_relative_eq!(sigma, 0.14547859349066158, max_relative = 1e-13);
    }

    #[test]
    fn zero_intercept_rejects_degenerate_input() {
        assert!(fit_linear_zero_intercept(&[(0.1, 1.0, 0.1)]).is_err());
        assert!(fit_linear_zero_intercept(&[(0.0, 0.0, 0.1), (0.0, 0.1, 0.1)]).is_err());
    }

    #[test]
    fn normalized_rmse_zero_for_exact_fit() {
        let sweep = exact_sweep(10.0, &[0.3, 0.6, 1.0, 1.5]);
        let fit = fit_detuning_curve(&sweep).unwrap();
        let nrmse = normalized_rmse(&fit, fit.estimates[0]).unwrap();
        assert!(nrmse < 1e-12);
        assert!(normalized_rmse(&fit, 0.0).is_err());
    }
}
