//! Nonlinear least squares and the model families used by the analysis
//! pipelines.

mod lm;
mod models;

pub use lm::{least_squares, FitOptions, FitResult, ModelSpec};
pub use models::{
    fit_exponential_family, fit_line, fit_power_law, fit_sech2_burst, fit_sinusoid, sech2_burst, wrap_phase, BurstFit,
    ExponentialFit, ExponentialModel, AICC_THRESHOLD, DEGENERATE_FRACTION, MIN_COMPONENT_FRACTION,
};
