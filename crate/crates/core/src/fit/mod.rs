//! Parameter estimation from phase-response data: weighted nonlinear least
//! squares, the two measurement pipelines, sweep aggregation, and the
//! Monte-Carlo method comparison.

mod aggregate;
mod compare;
mod dataset;
mod models;
mod nls;
mod pipelines;
mod synth;

pub use aggregate::{
    fit_detuning_curve, fit_linear_zero_intercept, normalized_rmse, weighted_average,
    DetuningSweep, SweepEntry,
};
pub use compare::{
    crystal_with_rates, method_comparison, spring_per_absorption_rate, ComparisonRegime,
    MethodComparisonReport, PowerComparison,
};
pub use dataset::{PhasePoint, ResponseDataset};
pub use models::{
    align_deg, phase_curve_deg, unwrap_sequence_deg, CavityPhaseModel, OptomechPhaseModel,
    OptomechPhaseModelFree, PhaseModel,
};
pub use nls::{nls_fit, nls_fit_magnitude, FitOptions, FitResult};
pub use pipelines::{
    fit_cavity_response, fit_optomechanical_response, PipelineOptions, DEFAULT_BAND_MIN_HZ,
};
pub use synth::{log_grid_hz, synth_phase_dataset};
