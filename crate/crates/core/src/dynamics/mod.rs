//! Mean-field dynamics of the spin ensemble in both coupling regimes.
//!
//! States are per-spin normalized: the Bloch components lie in `[-1, 1]` and
//! every collective operator contributes one factor `N₀` that is absorbed into
//! the collective rates `χN₀` and `Γ_SR·N₀`. All rates handed to this module
//! are ordinary frequencies in Hz; conversion to rad/s happens when a system
//! is built.

mod collective;
mod dispersive;
pub mod radau;
pub mod reduce;

pub use collective::{collective_rhs, evolve_collective, CollectiveSystem};
pub use dispersive::{dispersive_rhs, evolve_ensemble, DECOUPLE_FWHMS, DispersiveSystem, EnsembleOptions, EvolveReport};
pub use radau::{integrate, IntegrationStats, IntegratorOptions, OdeSystem, Solution, StageSolver};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lineshape::OffsetSet;

/// Slack allowed on `|s₊|² + s_z² ≤ 1`.
pub const BLOCH_EPS: f64 = 1e-9;

/// Normalized collective Bloch vector: `s₊ = 2⟨J₊⟩/N₀`, `s_z = 2⟨J_z⟩/N₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochState {
    pub s_plus: Complex64,
    pub s_z: f64,
}

impl BlochState {
    /// All spins down.
    pub fn south_pole() -> Self {
        BlochState {
            s_plus: Complex64::new(0.0, 0.0),
            s_z: -1.0,
        }
    }

    pub fn new(s_plus: Complex64, s_z: f64) -> Self {
        BlochState { s_plus, s_z }
    }

    /// Bloch-vector length.
    pub fn length(&self) -> f64 {
        (self.s_plus.norm_sqr() + self.s_z * self.s_z).sqrt()
    }

    pub fn is_physical(&self) -> bool {
        self.s_plus.norm_sqr() + self.s_z * self.s_z <= 1.0 + BLOCH_EPS
    }

    pub fn is_finite(&self) -> bool {
        self.s_plus.re.is_finite() && self.s_plus.im.is_finite() && self.s_z.is_finite()
    }

    /// Polar angle measured from the south pole.
    pub fn polar_from_south(&self) -> f64 {
        self.s_plus.norm().atan2(-self.s_z)
    }

    /// Rotate by `angle` about the equatorial axis at azimuth `axis_azimuth`.
    pub fn rotated(&self, axis_azimuth: f64, angle: f64) -> Self {
        let (sa, ca) = angle.sin_cos();
        let (sp, cp) = axis_azimuth.sin_cos();
        let v = [self.s_plus.re, self.s_plus.im, self.s_z];
        let n = [cp, sp, 0.0];
        let dot = n[0] * v[0] + n[1] * v[1];
        let cross = [n[1] * v[2], -n[0] * v[2], n[0] * v[1] - n[1] * v[0]];
        let r: [f64; 3] = std::array::from_fn(|k| v[k] * ca + cross[k] * sa + n[k] * dot * (1.0 - ca));
        BlochState {
            s_plus: Complex64::new(r[0], r[1]),
            s_z: r[2],
        }
    }
}

/// Per-group Bloch vectors for the dispersive regime.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleState {
    pub groups: Vec<BlochState>,
    pub offsets: OffsetSet,
    /// Spin count carried by each group; sums to `N₀`.
    pub weights: Vec<f64>,
    pub time: f64,
}

impl EnsembleState {
    /// Equal-weight groups, all in `state`, with total spin number `n0`.
    pub fn uniform(offsets: OffsetSet, n0: f64, state: BlochState) -> Result<Self> {
        let n = offsets.len();
        if n == 0 {
            return Err(Error::invalid("offsets", "at least one group is required"));
        }
        if !(n0 > 0.0) {
            return Err(Error::invalid("n0", "ensemble needs a positive spin number"));
        }
        Ok(EnsembleState {
            groups: vec![state; n],
            weights: vec![n0 / n as f64; n],
            offsets,
            time: 0.0,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.groups.len();
        if n == 0 || self.offsets.len() != n || self.weights.len() != n {
            return Err(Error::invalid("ensemble", "groups, offsets and weights must have equal nonzero length"));
        }
        if self.weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::invalid("weights", "must be positive and finite"));
        }
        Ok(())
    }

    pub fn n0(&self) -> f64 {
        reduce::sum(&self.weights)
    }

    /// Weights normalized to unit sum.
    pub fn normalized_weights(&self) -> Vec<f64> {
        let total = self.n0();
        self.weights.iter().map(|w| w / total).collect()
    }

    /// Weighted mean Bloch vector; its `s_plus` equals `2S₊/N₀`.
    pub fn mean(&self) -> BlochState {
        let w = self.normalized_weights();
        let groups = &self.groups;
        let (re, im, z) = reduce::pairwise(
            groups.len(),
            (0.0, 0.0, 0.0),
            &|r: std::ops::Range<usize>| {
                r.fold((0.0, 0.0, 0.0), |acc, j| {
                    let g = &groups[j];
                    (acc.0 + w[j] * g.s_plus.re, acc.1 + w[j] * g.s_plus.im, acc.2 + w[j] * g.s_z)
                })
            },
            &|a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2),
        );
        BlochState::new(Complex64::new(re, im), z)
    }

    /// Ensemble coherence `2|S₊|/N₀`.
    pub fn coherence(&self) -> f64 {
        self.mean().s_plus.norm()
    }

    /// Collective inversion `S_z = ½ Σ w_j s_z,j` in spin units.
    pub fn total_sz(&self) -> f64 {
        0.5 * self.n0() * self.mean().s_z
    }
}

/// Anything a hard global pulse can act on.
pub trait Rotate {
    /// Rotate every Bloch vector by `angle` about the equatorial axis at
    /// azimuth `axis_azimuth`.
    fn apply_rotation(&mut self, axis_azimuth: f64, angle: f64);
}

impl Rotate for BlochState {
    fn apply_rotation(&mut self, axis_azimuth: f64, angle: f64) {
        *self = self.rotated(axis_azimuth, angle);
    }
}

impl Rotate for EnsembleState {
    fn apply_rotation(&mut self, axis_azimuth: f64, angle: f64) {
        for g in &mut self.groups {
            *g = g.rotated(axis_azimuth, angle);
        }
    }
}

/// Free function form of [`Rotate::apply_rotation`].
pub fn apply_rotation<S: Rotate>(state: &mut S, axis_azimuth: f64, angle: f64) {
    state.apply_rotation(axis_azimuth, angle);
}

/// Sampled collective observables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    /// Weighted mean transverse component, `2⟨J₊⟩/N₀`.
    pub s_plus: Complex64,
    /// Weighted mean inversion, `2⟨J_z⟩/N₀`.
    pub s_z: f64,
}

impl Observation {
    pub fn coherence(&self) -> f64 {
        self.s_plus.norm()
    }

    pub fn azimuth(&self) -> f64 {
        self.s_plus.arg()
    }

    /// Emission intensity `Γ_SR·(N₀²/4)·|s₊|²` in photons/s, with `Γ_SR` the
    /// single-particle rate in Hz.
    pub fn intensity(&self, gamma_sr_single: f64, n0: f64) -> f64 {
        std::f64::consts::TAU * gamma_sr_single * 0.25 * n0 * n0 * self.s_plus.norm_sqr()
    }
}

/// Observables recorded on a time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Observation>,
}

impl Trajectory {
    pub fn with_capacity(n: usize) -> Self {
        Trajectory {
            times: Vec::with_capacity(n),
            states: Vec::with_capacity(n),
        }
    }

    pub fn push(&mut self, t: f64, obs: Observation) {
        self.times.push(t);
        self.states.push(obs);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn s_z(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.s_z).collect()
    }

    pub fn coherence(&self) -> Vec<f64> {
        self.states.iter().map(Observation::coherence).collect()
    }

    pub(crate) fn check_finite(&self) -> Result<()> {
        for (t, s) in self.times.iter().zip(&self.states) {
            if !(s.s_plus.re.is_finite() && s.s_plus.im.is_finite() && s.s_z.is_finite()) {
                return Err(Error::Integration {
                    time: *t,
                    reason: "non-finite observable recorded".into(),
                });
            }
        }
        Ok(())
    }
}
