//! Hard-pulse sequences executed on an ensemble.

use serde::{Deserialize, Serialize};

use crate::dynamics::radau::{IntegrationStats, IntegratorOptions};
use crate::dynamics::{evolve_ensemble, EnsembleOptions, EnsembleState, Observation, Rotate};
use crate::error::{Error, Result};
use crate::params::DerivedRates;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    SPlus,
    SZ,
    Coherence,
    /// Readout population `(1 + s_z)/2`.
    PUp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "step")]
pub enum Step {
    /// Instantaneous rotation by `angle` about the equatorial axis at
    /// `axis_azimuth` (both rad).
    Rotate { axis_azimuth: f64, angle: f64 },
    /// Free evolution for `duration` seconds.
    Evolve { duration: f64 },
    Record { observables: Vec<Observable> },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PulseSequence {
    pub steps: Vec<Step>,
}

/// One `Record` step's output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recorded {
    pub time: f64,
    pub observation: Observation,
    pub observables: Vec<Observable>,
}

impl Recorded {
    pub fn value(&self, obs: Observable) -> f64 {
        match obs {
            Observable::SPlus => self.observation.s_plus.norm(),
            Observable::SZ => self.observation.s_z,
            Observable::Coherence => self.observation.coherence(),
            Observable::PUp => 0.5 * (1.0 + self.observation.s_z),
        }
    }
}

impl PulseSequence {
    pub fn new() -> Self {
        PulseSequence::default()
    }

    pub fn rotate(mut self, axis_azimuth: f64, angle: f64) -> Self {
        self.steps.push(Step::Rotate { axis_azimuth, angle });
        self
    }

    pub fn evolve(mut self, duration: f64) -> Self {
        self.steps.push(Step::Evolve { duration });
        self
    }

    pub fn record(mut self, observables: &[Observable]) -> Self {
        self.steps.push(Step::Record {
            observables: observables.to_vec(),
        });
        self
    }

    pub fn validate(&self) -> Result<()> {
        let mut total = 0.0;
        let mut records = 0;
        for step in &self.steps {
            match step {
                Step::Evolve { duration } => {
                    if !(*duration >= 0.0) || !duration.is_finite() {
                        return Err(Error::invalid("duration", "evolution durations must be finite and >= 0"));
                    }
                    total += duration;
                }
                Step::Rotate { axis_azimuth, angle } => {
                    if !axis_azimuth.is_finite() || !angle.is_finite() {
                        return Err(Error::invalid("rotation", "angles must be finite"));
                    }
                }
                Step::Record { .. } => records += 1,
            }
        }
        if records == 0 {
            return Err(Error::invalid("sequence", "at least one Record step is required"));
        }
        if !f64::is_finite(total) {
            return Err(Error::invalid("sequence", "total duration must be finite"));
        }
        Ok(())
    }

    pub fn total_duration(&self) -> f64 {
        self.steps
            .iter()
            .map(|s| match s {
                Step::Evolve { duration } => *duration,
                _ => 0.0,
            })
            .sum()
    }

    /// Run the sequence on `state` under the dispersive equations.
    pub fn execute(
        &self,
        state: &mut EnsembleState,
        rates: &DerivedRates,
        gamma_2: f64,
        opts: &IntegratorOptions,
        ens: &EnsembleOptions,
    ) -> Result<(Vec<Recorded>, IntegrationStats)> {
        self.validate()?;
        let mut out = Vec::new();
        let mut stats = IntegrationStats::default();
        for step in &self.steps {
            match step {
                Step::Rotate { axis_azimuth, angle } => state.apply_rotation(*axis_azimuth, *angle),
                Step::Evolve { duration } => {
                    if *duration > 0.0 {
                        let report = evolve_ensemble(state, rates, gamma_2, *duration, opts, ens, &[], |_, _| {})?;
                        stats.merge(&report.stats);
                    }
                }
                Step::Record { observables } => {
                    let mean = state.mean();
                    out.push(Recorded {
                        time: state.time,
                        observation: Observation {
                            s_plus: mean.s_plus,
                            s_z: mean.s_z,
                        },
                        observables: observables.clone(),
                    });
                }
            }
        }
        Ok((out, stats))
    }
}
