//! Experiment pipelines: superradiant emission, one-axis-twisting echoes,
//! Ramsey coherence under gap protection, and transmission spectroscopy.

mod oat;
mod ramsey;
mod s21;
mod sequence;
mod superradiance;
mod trace;

use serde::{Deserialize, Serialize};

pub use oat::{oat_rate_scan, run_oat, default_phase_grid, OatRateScan, ScanAxis};
pub use ramsey::{default_tau_grid, run_ramsey, RamseyOptions, RamseyRun};
pub use s21::{add_transmission_noise, fit_s21, s21_model, S21Data, S21Fit, S21Fixed, S21Guess};
pub use sequence::{Observable, PulseSequence, Recorded, Step};
pub use superradiance::{burst_delay, run_superradiance, SuperradianceOptions, SuperradianceRun, DEFAULT_EPSILON, NEAR_INVERSION_THETA};
pub use trace::{PhaseScan, TimeTrace, TraceMetadata};

use crate::dynamics::radau::IntegratorOptions;
use crate::dynamics::{BlochState, EnsembleOptions, EnsembleState, DECOUPLE_FWHMS};
use crate::error::Result;
use crate::lineshape::{sample_offsets, Lineshape, LineshapeKind, OffsetSet, SamplingStrategy};
use crate::params::PhysicalParams;

/// How the inhomogeneous ensemble is discretized. The linewidth itself is
/// `PhysicalParams::gamma_inh`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub n_groups: usize,
    pub kind: LineshapeKind,
    /// Lorentzian weight of a pseudo-Voigt profile.
    pub lorentzian_fraction: f64,
    pub sampling: SamplingStrategy,
    /// Groups beyond this many FWHM are decoupled from the mean field;
    /// `None` couples all groups.
    pub decouple_fwhms: Option<f64>,
    pub integrator: IntegratorOptions,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig {
            n_groups: 10_000,
            kind: LineshapeKind::Lorentzian,
            lorentzian_fraction: 1.0,
            sampling: SamplingStrategy::Quantile,
            decouple_fwhms: Some(DECOUPLE_FWHMS),
            integrator: IntegratorOptions::default(),
        }
    }
}

impl EnsembleConfig {
    /// Lineshape of width `p.gamma_inh`, or `None` for a sharp line.
    pub fn lineshape(&self, p: &PhysicalParams) -> Option<Lineshape> {
        if p.gamma_inh == 0.0 {
            return None;
        }
        Some(match self.kind {
            LineshapeKind::Gaussian => Lineshape::gaussian(p.gamma_inh),
            LineshapeKind::Lorentzian => Lineshape::lorentzian(p.gamma_inh),
            LineshapeKind::PseudoVoigt => Lineshape::pseudo_voigt(p.gamma_inh, self.lorentzian_fraction),
        })
    }

    pub fn offsets(&self, p: &PhysicalParams) -> Result<OffsetSet> {
        match self.lineshape(p) {
            Some(shape) => sample_offsets(&shape, self.n_groups, self.sampling),
            None => {
                if self.n_groups == 0 {
                    return Err(crate::error::Error::invalid("n_groups", "at least one group is required"));
                }
                Ok(OffsetSet::zeros(self.n_groups))
            }
        }
    }

    pub fn ensemble_options(&self, p: &PhysicalParams) -> EnsembleOptions {
        match (self.decouple_fwhms, self.lineshape(p)) {
            (Some(k), Some(shape)) => EnsembleOptions {
                decouple_beyond: Some(k * shape.fwhm),
            },
            _ => EnsembleOptions::fully_coupled(),
        }
    }

    /// Ground-state ensemble with `N₀` spins spread over the groups.
    pub fn ground_state(&self, p: &PhysicalParams) -> Result<EnsembleState> {
        EnsembleState::uniform(self.offsets(p)?, if p.n0 > 0.0 { p.n0 } else { 1.0 }, BlochState::south_pole())
    }

    pub(crate) fn seed(&self) -> Option<u64> {
        match self.sampling {
            SamplingStrategy::Random(s) => Some(s),
            SamplingStrategy::Quantile => None,
        }
    }
}

/// Warning for runs that assume the dispersive regime.
pub(crate) fn dispersive_warning(p: &PhysicalParams) -> Option<String> {
    (p.delta.abs() < 5.0 * p.kappa).then(|| {
        format!(
            "|delta| = {:e} Hz is below 5·kappa = {:e} Hz; adiabatic elimination is marginal",
            p.delta.abs(),
            5.0 * p.kappa
        )
    })
}
