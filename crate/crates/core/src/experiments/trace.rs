//! Recorded outputs of experiment pipelines.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::FitResult;
use crate::lineshape::Lineshape;
use crate::params::{DerivedRates, PhysicalParams};

/// Run metadata attached to every trace.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TraceMetadata {
    pub params: Option<PhysicalParams>,
    pub rates: Option<DerivedRates>,
    pub lineshape: Option<Lineshape>,
    pub n_groups: usize,
    pub seed: Option<u64>,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Distance of the preparation angle floor from full inversion, rad.
    pub epsilon: Option<f64>,
    /// Random draws rejected by lineshape truncation.
    pub truncated: usize,
    /// Groups advanced analytically outside the mean field.
    pub decoupled_groups: usize,
    pub warnings: Vec<String>,
}

/// A sampled observable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeTrace {
    pub observable: String,
    pub unit: String,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub metadata: TraceMetadata,
}

impl TimeTrace {
    pub fn new(observable: &str, unit: &str, times: Vec<f64>, values: Vec<f64>, metadata: TraceMetadata) -> Result<Self> {
        let trace = TimeTrace {
            observable: observable.to_string(),
            unit: unit.to_string(),
            times,
            values,
            metadata,
        };
        trace.validate()?;
        Ok(trace)
    }

    pub fn validate(&self) -> Result<()> {
        if self.times.len() != self.values.len() {
            return Err(Error::invalid("trace", "times and values differ in length"));
        }
        if self.times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("trace", "times must be strictly increasing"));
        }
        if let Some(t) = self.values.iter().zip(&self.times).find(|(v, _)| !v.is_finite()).map(|(_, t)| *t) {
            return Err(Error::Integration {
                time: t,
                reason: format!("non-finite {} recorded", self.observable),
            });
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Sample index and value of the maximum.
    pub fn argmax(&self) -> Option<(usize, f64)> {
        self.values
            .iter()
            .cloned()
            .enumerate()
            .fold(None, |best: Option<(usize, f64)>, (i, v)| match best {
                Some((_, b)) if b >= v => best,
                _ => Some((i, v)),
            })
    }

    /// Peak time and value refined by a parabola through the maximum and its
    /// neighbours.
    pub fn refined_peak(&self) -> Option<(f64, f64)> {
        let (k, v) = self.argmax()?;
        if k == 0 || k + 1 >= self.len() {
            return Some((self.times[k], v));
        }
        let (t0, t1, t2) = (self.times[k - 1], self.times[k], self.times[k + 1]);
        let (y0, y1, y2) = (self.values[k - 1], v, self.values[k + 1]);
        // Lagrange parabola through the three points.
        let d0 = (t0 - t1) * (t0 - t2);
        let d1 = (t1 - t0) * (t1 - t2);
        let d2 = (t2 - t0) * (t2 - t1);
        let a = y0 / d0 + y1 / d1 + y2 / d2;
        let b = -(y0 * (t1 + t2) / d0 + y1 * (t0 + t2) / d1 + y2 * (t0 + t1) / d2);
        let c = y0 * t1 * t2 / d0 + y1 * t0 * t2 / d1 + y2 * t0 * t1 / d2;
        if a >= 0.0 {
            return Some((t1, v));
        }
        let tp = (-b / (2.0 * a)).clamp(t0, t2);
        Some((tp, a * tp * tp + b * tp + c))
    }
}

/// Readout populations versus final-pulse phase and the extracted phase shift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseScan {
    pub theta: f64,
    pub tau: f64,
    pub phi: Vec<f64>,
    pub p_up: Vec<f64>,
    /// Phase shift in the `+χN₀τ cos θ` convention, rad.
    pub delta_phi: f64,
    pub delta_phi_sigma: f64,
    /// Shift of the fitted readout phase in the native rotation frame,
    /// `−delta_phi`.
    pub delta_phi_raw: f64,
    /// Direct azimuth change of the collective Bloch vector before readout,
    /// in the same convention as `delta_phi`.
    pub azimuth_shift: f64,
    /// Fringe amplitude relative to the same pulses without evolution.
    pub contrast: f64,
    pub fit: FitResult,
    pub metadata: TraceMetadata,
}
