//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A configuration value violates an invariant (non-positive mass, zero
    /// heat capacity, ...). Carries the offending field name.
    #[error("invalid configuration: {field}: {message}")]
    Config {
        field: &'static str,
        message: String,
    },

    /// A runtime argument is outside the mathematical domain (NaN, infinite).
    #[error("domain error: {0}")]
    Domain(String),

    /// An expression was evaluated exactly at a pole.
    #[error("singularity: {0}")]
    Singularity(String),

    /// The ODE integrator could not continue (step-size underflow).
    #[error("integration failed at t = {time_s} s: {message}")]
    Integration { time_s: f64, message: String },

    /// A small-signal probe would leave (or left) the linear regime.
    #[error(
        "linearity guard violated: detuning excursion {excursion:.3e} exceeds {limit:.3e}; \
         retry with drive amplitude below {suggested_amplitude_m:.3e} m"
    )]
    LinearityGuard {
        excursion: f64,
        limit: f64,
        suggested_amplitude_m: f64,
    },

    /// Input data is unusable for the requested operation (empty set,
    /// degenerate design, too few points).
    #[error("data error: {0}")]
    Data(String),
}

impl Error {
    pub(crate) fn config(field: &'static str, message: impl Into<String>) -> Self {
        Error::Config {
            field,
            message: message.into(),
        }
    }
}

/// Reject non-finite runtime arguments with a uniform domain error.
pub(crate) fn ensure_finite(name: &str, value: f64) -> Result<(), Error> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be finite, got {value}")))
    }
}
