//! Superradiant emission after a rotation away from the ground state.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::trace::{TimeTrace, TraceMetadata};
use crate::dynamics::radau::{IntegrationStats, IntegratorOptions};
use crate::dynamics::{evolve_collective, BlochState, Rotate};
use crate::error::{Error, Result};
use crate::params::{derive_rates, PhysicalParams};

/// Default distance of the preparation angle from full inversion, rad.
pub const DEFAULT_EPSILON: f64 = 1e-3;
/// Default near-inversion angle for peak-scaling scans.
pub const NEAR_INVERSION_THETA: f64 = PI - 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuperradianceOptions {
    /// Preparation angles above `π − epsilon` are rejected.
    pub epsilon: f64,
    /// Samples on the uniform output grid, including both end points.
    pub n_points: usize,
    pub integrator: IntegratorOptions,
}

impl Default for SuperradianceOptions {
    fn default() -> Self {
        SuperradianceOptions {
            epsilon: DEFAULT_EPSILON,
            n_points: 2001,
            integrator: IntegratorOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuperradianceRun {
    /// `I(t) = Γ_SR·(N₀²/4)·|s₊|²`, photons/s.
    pub intensity: TimeTrace,
    /// Intensity divided by its peak.
    pub normalized: TimeTrace,
    pub s_z: TimeTrace,
    /// Parabola-refined peak time and intensity.
    pub peak_time: f64,
    pub peak_intensity: f64,
    pub stats: IntegrationStats,
}

/// Closed-form burst delay `(4/Γ_c)·artanh(cos(π − θ))` with `Γ_c` in rad/s.
pub fn burst_delay(gamma_c: f64, theta: f64) -> f64 {
    4.0 / (2.0 * PI * gamma_c) * (PI - theta).cos().atanh()
}

/// Rotate the ground state to polar angle `theta` and record the collective
/// emission up to `t_max`.
pub fn run_superradiance(p: &PhysicalParams, theta: f64, t_max: f64, opts: &SuperradianceOptions) -> Result<SuperradianceRun> {
    if !(opts.epsilon > 0.0) {
        return Err(Error::invalid("epsilon", "must be > 0"));
    }
    if !(theta > 0.0) || theta > PI - opts.epsilon {
        return Err(Error::invalid(
            "theta",
            format!(
                "must lie in (0, π − ε] with ε = {:e}; full inversion is a mean-field fixed point, lower θ or reduce ε",
                opts.epsilon
            ),
        ));
    }
    if !(t_max > 0.0) || !t_max.is_finite() {
        return Err(Error::invalid("t_max", "must be finite and > 0"));
    }
    if opts.n_points < 2 {
        return Err(Error::invalid("n_points", "need at least two samples"));
    }
    let rates = derive_rates(p)?;
    let mut warnings = Vec::new();
    if p.delta.abs() >= p.kappa {
        warnings.push(format!(
            "|delta| = {:e} Hz is not below kappa = {:e} Hz; the collective emission model assumes resonance",
            p.delta.abs(),
            p.kappa
        ));
    }
    let mut s0 = BlochState::south_pole();
    s0.apply_rotation(0.0, theta);
    let n = opts.n_points;
    let grid: Vec<f64> = (0..n).map(|k| t_max * k as f64 / (n - 1) as f64).collect();
    let (_, traj, stats) = evolve_collective(&s0, rates.gamma_c, rates.gamma_sr_single, t_max, &opts.integrator, &grid)?;
    let intensity: Vec<f64> = traj.states.iter().map(|s| s.intensity(rates.gamma_sr_single, p.n0)).collect();
    let metadata = TraceMetadata {
        params: Some(*p),
        rates: Some(rates),
        n_groups: 1,
        rel_tol: opts.integrator.rel_tol,
        abs_tol: opts.integrator.abs_tol,
        epsilon: Some(opts.epsilon),
        warnings,
        ..TraceMetadata::default()
    };
    let intensity = TimeTrace::new("intensity", "1/s", traj.times.clone(), intensity, metadata.clone())?;
    let (peak_time, peak_intensity) = intensity.refined_peak().unwrap_or((0.0, 0.0));
    let normalized: Vec<f64> = intensity
        .values
        .iter()
        .map(|v| if peak_intensity > 0.0 { v / peak_intensity } else { 0.0 })
        .collect();
    let normalized = TimeTrace::new("intensity_normalized", "1", traj.times.clone(), normalized, metadata.clone())?;
    let s_z = TimeTrace::new("s_z", "1", traj.times.clone(), traj.s_z(), metadata)?;
    Ok(SuperradianceRun {
        intensity,
        normalized,
        s_z,
        peak_time,
        peak_intensity,
        stats,
    })
}
