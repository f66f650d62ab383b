//! One-axis-twisting phase measured with a spin echo.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sequence::{Observable, PulseSequence};
use super::trace::{PhaseScan, TraceMetadata};
use super::{dispersive_warning, EnsembleConfig};
use crate::dynamics::{BlochState, Rotate};
use crate::error::{Error, Result};
use crate::fit::{fit_line, fit_sinusoid, wrap_phase, FitResult};
use crate::params::{derive_rates, PhysicalParams};

/// `n` equally spaced readout phases covering one period.
pub fn default_phase_grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| TAU * k as f64 / n as f64).collect()
}

fn check_phase_grid(phi: &[f64]) -> Result<()> {
    if phi.len() < 8 {
        return Err(Error::invalid("phase_grid", "need at least 8 readout phases"));
    }
    let lo = phi.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = phi.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    // n equally spaced points on [0, 2π) cover one full period.
    let n = phi.len() as f64;
    if hi - lo < TAU * (n - 1.0) / n - 1e-12 {
        return Err(Error::invalid("phase_grid", "readout phases must span a full period"));
    }
    Ok(())
}

fn readout(mean: &BlochState, phi: &[f64]) -> Vec<f64> {
    phi.iter().map(|&f| 0.5 * (1.0 + mean.rotated(f, PI / 2.0).s_z)).collect()
}

/// Echo sequence `R_x(θ) → τ/2 → R_x(π) → τ/2`, followed by a `π/2` readout
/// pulse about the axis at each phase in `phase_grid`.
///
/// The phase shift is the displacement of the readout fringe relative to the
/// same pulses without evolution, reported with the sign convention in which
/// the twisting phase is `+χN₀τ cos θ` for positive detuning.
pub fn run_oat(p: &PhysicalParams, cfg: &EnsembleConfig, theta: f64, tau: f64, phase_grid: &[f64]) -> Result<PhaseScan> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::invalid("tau", "must be finite and > 0"));
    }
    if !theta.is_finite() {
        return Err(Error::invalid("theta", "must be finite"));
    }
    check_phase_grid(phase_grid)?;
    let rates = derive_rates(p)?;
    let mut warnings: Vec<String> = dispersive_warning(p).into_iter().collect();

    let mut state = cfg.ground_state(p)?;
    let truncated = state.offsets.truncated;
    let seq = PulseSequence::new()
        .rotate(0.0, theta)
        .evolve(tau / 2.0)
        .rotate(0.0, PI)
        .evolve(tau / 2.0)
        .record(&[Observable::SPlus, Observable::SZ]);
    let (records, _) = seq.execute(&mut state, &rates, p.gamma_2, &cfg.integrator, &cfg.ensemble_options(p))?;
    let obs = records[0].observation;
    let mean = BlochState::new(obs.s_plus, obs.s_z);

    let mut reference = BlochState::south_pole();
    reference.apply_rotation(0.0, theta);
    reference.apply_rotation(0.0, PI);

    let p_up = readout(&mean, phase_grid);
    let fit = fit_sinusoid(phase_grid, &p_up)?;
    let fit_ref = fit_sinusoid(phase_grid, &readout(&reference, phase_grid))?;
    let contrast = if fit_ref.params[1] > 1e-9 {
        fit.params[1] / fit_ref.params[1]
    } else {
        2.0 * fit.params[1]
    };
    if contrast < 1e-3 {
        warnings.push(format!("fringe contrast {contrast:e} below 1e-3; phase undefined (over-dephased)"));
    }
    let raw = wrap_phase(fit.params[2] - fit_ref.params[2]);
    let raw_azimuth = wrap_phase(mean.s_plus.arg() - reference.s_plus.arg());
    // Fit uncertainty combined with an integration-error floor.
    let sigma = fit.sigma[2].hypot(10.0 * cfg.integrator.rel_tol);

    Ok(PhaseScan {
        theta,
        tau,
        phi: phase_grid.to_vec(),
        p_up,
        delta_phi: -raw,
        delta_phi_sigma: sigma,
        delta_phi_raw: raw,
        azimuth_shift: -raw_azimuth,
        contrast,
        fit,
        metadata: TraceMetadata {
            params: Some(*p),
            rates: Some(rates),
            lineshape: cfg.lineshape(p),
            n_groups: cfg.n_groups,
            seed: cfg.seed(),
            rel_tol: cfg.integrator.rel_tol,
            abs_tol: cfg.integrator.abs_tol,
            truncated,
            warnings,
            ..TraceMetadata::default()
        },
    })
}

/// Grid of an OAT rate scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "axis")]
pub enum ScanAxis {
    /// Echo durations, s.
    Tau { values: Vec<f64> },
    /// Spin numbers at a fixed echo duration.
    N0 { tau: f64, values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OatRateScan {
    pub theta: f64,
    /// Scan coordinate: τ (s) or N₀.
    pub x: Vec<f64>,
    /// `delta_phi` (rad) for a τ scan; extracted `chi_n` (Hz) for an N₀ scan.
    pub y: Vec<f64>,
    pub y_sigma: Vec<f64>,
    /// Straight-line fit of `y` against `x`.
    pub line: FitResult,
    /// τ scan: `slope / (2π cos θ)` in Hz. N₀ scan: the slope `d chi_n / dN₀` in Hz.
    pub rate: f64,
    pub rate_sigma: f64,
    pub scans: Vec<PhaseScan>,
}

/// Repeat [`run_oat`] over a τ or N₀ grid and fit the linear dependence.
pub fn oat_rate_scan(
    p: &PhysicalParams,
    cfg: &EnsembleConfig,
    theta: f64,
    axis: &ScanAxis,
    phase_grid: &[f64],
) -> Result<OatRateScan> {
    let c = theta.cos();
    if c.abs() < 1e-3 {
        return Err(Error::invalid("theta", "rate scans need cos θ away from zero"));
    }
    let (x, points): (Vec<f64>, Vec<(PhysicalParams, f64)>) = match axis {
        ScanAxis::Tau { values } => (values.clone(), values.iter().map(|&t| (*p, t)).collect()),
        ScanAxis::N0 { tau, values } => (values.clone(), values.iter().map(|&n| (p.with_n0(n), *tau)).collect()),
    };
    if x.len() < 4 {
        return Err(Error::invalid("grid", "rate scans need at least 4 grid points"));
    }
    let scans = points
        .par_iter()
        .map(|(pp, tau)| run_oat(pp, cfg, theta, *tau, phase_grid))
        .collect::<Result<Vec<_>>>()?;
    let (y, y_sigma): (Vec<f64>, Vec<f64>) = match axis {
        ScanAxis::Tau { .. } => scans.iter().map(|s| (s.delta_phi, s.delta_phi_sigma)).unzip(),
        ScanAxis::N0 { tau, .. } => scans
            .iter()
            .map(|s| {
                let k = TAU * tau * c;
                (s.delta_phi / k, s.delta_phi_sigma / k.abs())
            })
            .unzip(),
    };
    let line = fit_line(&x, &y)?;
    let (rate, rate_sigma) = match axis {
        ScanAxis::Tau { .. } => (line.params[1] / (TAU * c), line.sigma[1] / (TAU * c).abs()),
        ScanAxis::N0 { .. } => (line.params[1], line.sigma[1]),
    };
    Ok(OatRateScan {
        theta,
        x,
        y,
        y_sigma,
        line,
        rate,
        rate_sigma,
        scans,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lineshape::LineshapeKind;

    fn oat_params() -> PhysicalParams {
        let mut p = PhysicalParams::from_collective_coupling(0.015, 150e3, 660e3, 22e6).unwrap();
        p.gamma_2 = 0.0;
        p
    }

    fn sharp(n: usize) -> EnsembleConfig {
        EnsembleConfig {
            n_groups: n,
            ..EnsembleConfig::default()
        }
    }

    #[test]
    fn phase_grid_checks() {
        assert!(check_phase_grid(&default_phase_grid(12)).is_ok());
        assert!(check_phase_grid(&default_phase_grid(6)).is_err());
        let half: Vec<f64> = (0..12).map(|k| PI * k as f64 / 12.0).collect();
        assert!(check_phase_grid(&half).is_err());
    }

    #[test]
    fn single_group_phase_matches_mean_field_rate() {
        let mut p = oat_params();
        p.kappa = 1e-3; // suppress collective decay
        p.kappa_out = 0.0;
        let r = derive_rates(&p).unwrap();
        let theta = PI / 4.0;
        let tau = 100e-6;
        let scan = run_oat(&p, &sharp(1), theta, tau, &default_phase_grid(16)).unwrap();
        let expected = TAU * r.chi_n * tau * theta.cos();
        assert!((scan.delta_phi - expected).abs() < 1e-6, "{} vs {expected}", scan.delta_phi);
        assert!((scan.azimuth_shift - scan.delta_phi).abs() < 1e-9);
        assert!((scan.contrast - 1.0).abs() < 1e-9);
    }

    #[test]
    fn equator_has_no_phase() {
        // Pure exchange; collective decay adds a small second-order phase.
        let mut p = oat_params();
        p.kappa = 1e-3;
        p.kappa_out = 0.0;
        let scan = run_oat(&p, &sharp(1), PI / 2.0, 200e-6, &default_phase_grid(12)).unwrap();
        assert!(scan.delta_phi.abs() <= 2.0 * scan.delta_phi_sigma, "{} {}", scan.delta_phi, scan.delta_phi_sigma);
    }

    #[test]
    fn echo_refocuses_static_offsets() {
        let mut p = PhysicalParams::from_collective_coupling(0.015, 0.0, 660e3, 22e6).unwrap();
        p.gamma_2 = 0.0;
        p.gamma_inh = 5e3;
        let cfg = EnsembleConfig {
            n_groups: 501,
            kind: LineshapeKind::Lorentzian,
            ..EnsembleConfig::default()
        };
        let scan = run_oat(&p, &cfg, PI / 3.0, 300e-6, &default_phase_grid(12)).unwrap();
        assert!(scan.delta_phi.abs() < 1e-6);
        assert!(scan.contrast > 1.0 - 1e-6);
    }
}
