//! Ramsey free-induction coherence of the interacting ensemble.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::trace::{TimeTrace, TraceMetadata};
use super::{dispersive_warning, EnsembleConfig};
use crate::dynamics::radau::IntegrationStats;
use crate::dynamics::{evolve_ensemble, Rotate};
use crate::error::{Error, Result};
use crate::fit::{fit_exponential_family, ExponentialFit};
use crate::params::{derive_rates, PhysicalParams};

/// 40 log-spaced delays per decade from 1 µs to 10 ms.
pub fn default_tau_grid() -> Vec<f64> {
    (0..=160).map(|k| 1e-6 * 10f64.powf(k as f64 / 40.0)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RamseyOptions {
    /// Fit the coherence with the exponential family.
    pub fit: bool,
    pub allow_double: bool,
    /// Repeat with twice the groups and warn if the coherence moves by more
    /// than 1e-3.
    pub convergence_check: bool,
}

impl Default for RamseyOptions {
    fn default() -> Self {
        RamseyOptions {
            fit: true,
            allow_double: true,
            convergence_check: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RamseyRun {
    /// Normalized transverse magnetization `|s₊|` after each delay.
    pub coherence: TimeTrace,
    pub fit: Option<ExponentialFit>,
    pub stats: IntegrationStats,
}

fn coherence_curve(p: &PhysicalParams, cfg: &EnsembleConfig, tau: &[f64]) -> Result<(Vec<f64>, IntegrationStats, usize, usize)> {
    let rates = derive_rates(p)?;
    let mut state = cfg.ground_state(p)?;
    let truncated = state.offsets.truncated;
    state.apply_rotation(0.0, PI / 2.0);
    let mut c = Vec::with_capacity(tau.len());
    let t_end = *tau.last().expect("non-empty grid");
    let report = evolve_ensemble(
        &mut state,
        &rates,
        p.gamma_2,
        t_end,
        &cfg.integrator,
        &cfg.ensemble_options(p),
        tau,
        |_, obs| c.push(obs.coherence()),
    )?;
    Ok((c, report.stats, truncated, report.decoupled_groups))
}

/// `π/2` pulse from the ground state, free evolution under the full
/// dispersive equations, and the coherence `|s₊(τ)|` on `tau_grid`.
pub fn run_ramsey(p: &PhysicalParams, cfg: &EnsembleConfig, tau_grid: &[f64], opts: &RamseyOptions) -> Result<RamseyRun> {
    if cfg.n_groups < 100 {
        return Err(Error::invalid("n_groups", "Ramsey runs need at least 100 groups"));
    }
    if tau_grid.is_empty() || tau_grid.windows(2).any(|w| !(w[1] > w[0])) || !(tau_grid[0] >= 0.0) {
        return Err(Error::invalid("tau_grid", "delays must be non-negative and strictly increasing"));
    }
    let rates = derive_rates(p)?;
    let mut warnings: Vec<String> = dispersive_warning(p).into_iter().collect();
    let (c, mut stats, truncated, decoupled) = coherence_curve(p, cfg, tau_grid)?;
    if opts.convergence_check {
        let doubled = EnsembleConfig {
            n_groups: 2 * cfg.n_groups,
            ..*cfg
        };
        let (c2, s2, _, _) = coherence_curve(p, &doubled, tau_grid)?;
        stats.merge(&s2);
        let worst = c.iter().zip(&c2).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if worst > 1e-3 {
            warnings.push(format!(
                "doubling n_groups changes the coherence by {worst:.2e} (> 1e-3); increase n_groups"
            ));
        }
    }
    let metadata = TraceMetadata {
        params: Some(*p),
        rates: Some(rates),
        lineshape: cfg.lineshape(p),
        n_groups: cfg.n_groups,
        seed: cfg.seed(),
        rel_tol: cfg.integrator.rel_tol,
        abs_tol: cfg.integrator.abs_tol,
        truncated,
        decoupled_groups: decoupled,
        warnings,
        ..TraceMetadata::default()
    };
    let coherence = TimeTrace::new("coherence", "1", tau_grid.to_vec(), c, metadata)?;
    let fit = if opts.fit {
        let clipped: Vec<f64> = coherence.values.iter().map(|v| v.min(1.0)).collect();
        Some(fit_exponential_family(&coherence.times, &clipped, opts.allow_double)?)
    } else {
        None
    };
    Ok(RamseyRun { coherence, fit, stats })
}
