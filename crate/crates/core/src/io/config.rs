//! Run configuration: strict TOML with every frequency in Hz.
//!
//! All defaults live in [`defaults`].

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::radau::IntegratorOptions;
use crate::error::{Error, Result};
use crate::experiments::EnsembleConfig;
use crate::dynamics::DECOUPLE_FWHMS;
use crate::lineshape::{LineshapeKind, SamplingStrategy};
use crate::params::{gamma_2_from_t2, n0_from_coupling, PhysicalParams};

/// Default values for every optional key.
pub mod defaults {
    /// Single-spin coupling, Hz.
    pub const G_HZ: f64 = 0.015;
    pub const DELTA_HZ: f64 = 0.0;
    /// Homogeneous coherence time, s.
    pub const T2_S: f64 = 0.150;
    pub const FWHM_HZ: f64 = 0.0;
    pub const LORENTZIAN_FRACTION: f64 = 0.3;
    pub const N_GROUPS: usize = 10_000;
    pub const REL_TOL: f64 = 1e-8;
    pub const ABS_TOL: f64 = 1e-10;
    pub const SEED: u64 = 0;
    pub const EPSILON: f64 = 1e-3;
    pub const N_POINTS: usize = 2001;
    /// Superradiance window in collective lifetimes `4/Γ_c` beyond the delay.
    pub const LIFETIMES: f64 = 10.0;
    pub const N_PHI: usize = 16;
    pub const THETA: f64 = std::f64::consts::FRAC_PI_4;
    pub const TAU_S: f64 = 100e-6;
    pub const S21_POINTS: usize = 801;
    pub const S21_SPAN_HZ: f64 = 200e3;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Params,
    Superradiance,
    Oat,
    Ramsey,
    S21,
    Sweep,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Params => "params",
            ExperimentKind::Superradiance => "superradiance",
            ExperimentKind::Oat => "oat",
            ExperimentKind::Ramsey => "ramsey",
            ExperimentKind::S21 => "s21",
            ExperimentKind::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    Quantile,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum S21Mode {
    Model,
    Fit,
}

/// Parameter varied by a `sweep` run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepOver {
    Theta,
    TauS,
    N0,
    ChiNHz,
}

/// Parsed configuration. Keys mirror the TOML file one to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Optional; when present it must match the subcommand.
    pub experiment: Option<ExperimentKind>,

    pub g_hz: Option<f64>,
    /// Collective coupling `g√N₀`; alternative to `n0`.
    pub g_coll_hz: Option<f64>,
    pub n0: Option<f64>,
    pub kappa_hz: f64,
    pub delta_hz: Option<f64>,
    /// Defaults to critical coupling, `kappa_hz / 2`.
    pub kappa_out_hz: Option<f64>,
    pub t2_s: Option<f64>,

    pub lineshape: Option<LineshapeKind>,
    pub fwhm_hz: Option<f64>,
    pub lorentzian_fraction: Option<f64>,
    pub sampling: Option<Sampling>,
    pub n_groups: Option<usize>,
    /// Groups beyond this many FWHM precess freely; 0 couples every group.
    pub decouple_fwhms: Option<f64>,

    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
    pub seed: Option<u64>,
    pub output_dir: Option<String>,

    // superradiance
    pub theta: Option<f64>,
    pub t_max_s: Option<f64>,
    pub epsilon: Option<f64>,
    pub n_points: Option<usize>,

    // oat
    pub tau_s: Option<Vec<f64>>,
    pub n_phi: Option<usize>,

    // ramsey
    pub chi_n_hz: Option<Vec<f64>>,
    pub ramsey_tau_s: Option<Vec<f64>>,
    pub allow_double: Option<bool>,
    pub convergence_check: Option<bool>,

    // s21
    pub s21_mode: Option<S21Mode>,
    pub f_c_hz: Option<f64>,
    pub span_hz: Option<f64>,
    pub noise_snr_db: Option<f64>,
    pub guess_g_coll_hz: Option<f64>,
    pub guess_gamma_inh_hz: Option<f64>,

    // sweep
    pub sweep_experiment: Option<ExperimentKind>,
    pub sweep_over: Option<SweepOver>,
    pub values: Option<Vec<f64>>,
}

fn config_err(key: &str, reason: impl Into<String>) -> Error {
    Error::Config {
        key: key.to_string(),
        reason: reason.into(),
    }
}

/// Parse and validate a TOML configuration file.
pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| config_err("<file>", format!("{}: {e}", path.display())))?;
    parse_config_str(&text)
}

/// Parse and validate TOML text.
pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| {
        let msg = e.message().to_string();
        // serde reports unknown fields as "unknown field `name`, expected ...".
        let key = msg
            .split('`')
            .nth(1)
            .filter(|_| msg.starts_with("unknown field") || msg.starts_with("missing field"))
            .or_else(|| msg.split('`').nth(1))
            .unwrap_or("<root>")
            .to_string();
        config_err(&key, msg)
    })?;
    cfg.validate()?;
    Ok(cfg)
}

fn positive(key: &str, v: Option<f64>) -> Result<()> {
    match v {
        Some(x) if !(x > 0.0) || !x.is_finite() => Err(config_err(key, "must be finite and > 0")),
        _ => Ok(()),
    }
}

fn non_negative(key: &str, v: Option<f64>) -> Result<()> {
    match v {
        Some(x) if !(x >= 0.0) || !x.is_finite() => Err(config_err(key, "must be finite and >= 0")),
        _ => Ok(()),
    }
}

fn non_empty(key: &str, v: &Option<Vec<f64>>) -> Result<()> {
    match v {
        Some(list) if list.is_empty() => Err(config_err(key, "grid must not be empty")),
        Some(list) if list.iter().any(|x| !x.is_finite()) => Err(config_err(key, "grid values must be finite")),
        _ => Ok(()),
    }
}

impl RunConfig {
    /// Schema checks that do not depend on the subcommand.
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa_hz > 0.0) || !self.kappa_hz.is_finite() {
            return Err(config_err("kappa_hz", "cavity linewidth must be > 0 (kappa > 0 is required by the rate algebra)"));
        }
        positive("g_hz", self.g_hz)?;
        non_negative("g_coll_hz", self.g_coll_hz)?;
        non_negative("n0", self.n0)?;
        if self.g_coll_hz.is_some() && self.n0.is_some() {
            return Err(config_err("n0", "give either g_coll_hz or n0, not both"));
        }
        if let Some(d) = self.delta_hz {
            if !d.is_finite() {
                return Err(config_err("delta_hz", "must be finite"));
            }
        }
        non_negative("kappa_out_hz", self.kappa_out_hz)?;
        positive("t2_s", self.t2_s)?;
        non_negative("fwhm_hz", self.fwhm_hz)?;
        if let Some(eta) = self.lorentzian_fraction {
            if !(0.0..=1.0).contains(&eta) {
                return Err(config_err("lorentzian_fraction", "must lie in [0, 1]"));
            }
        }
        if self.n_groups == Some(0) {
            return Err(config_err("n_groups", "must be >= 1"));
        }
        non_negative("decouple_fwhms", self.decouple_fwhms)?;
        positive("rel_tol", self.rel_tol)?;
        positive("abs_tol", self.abs_tol)?;
        positive("t_max_s", self.t_max_s)?;
        positive("epsilon", self.epsilon)?;
        positive("span_hz", self.span_hz)?;
        positive("noise_snr_db", self.noise_snr_db.map(|x| x.abs().max(f64::MIN_POSITIVE)))?;
        non_negative("guess_g_coll_hz", self.guess_g_coll_hz)?;
        non_negative("guess_gamma_inh_hz", self.guess_gamma_inh_hz)?;
        if let Some(t) = self.theta {
            if !t.is_finite() {
                return Err(config_err("theta", "must be finite"));
            }
        }
        for (key, grid) in [
            ("tau_s", &self.tau_s),
            ("chi_n_hz", &self.chi_n_hz),
            ("ramsey_tau_s", &self.ramsey_tau_s),
            ("values", &self.values),
        ] {
            non_empty(key, grid)?;
        }
        if let Some(taus) = &self.tau_s {
            if taus.iter().any(|&t| !(t > 0.0)) {
                return Err(config_err("tau_s", "echo durations must be > 0"));
            }
        }
        if let Some(chis) = &self.chi_n_hz {
            if self.delta_hz.unwrap_or(defaults::DELTA_HZ) == 0.0 {
                return Err(config_err("chi_n_hz", "a chi_n grid needs a non-zero delta_hz"));
            }
            if chis.iter().any(|c| c * self.delta_hz.unwrap_or(0.0) < 0.0) {
                return Err(config_err("chi_n_hz", "chi_n must share the sign of delta_hz"));
            }
        }
        if let Some(n) = self.n_phi {
            if n < 8 {
                return Err(config_err("n_phi", "need at least 8 readout phases"));
            }
        }
        Ok(())
    }

    /// Check the keys required by `kind`.
    pub fn validate_for(&self, kind: ExperimentKind) -> Result<()> {
        if let Some(e) = self.experiment {
            if e != kind {
                return Err(config_err("experiment", format!("config is for `{}`, not `{}`", e.name(), kind.name())));
            }
        }
        if self.g_coll_hz.is_none() && self.n0.is_none() {
            return Err(config_err("g_coll_hz", "one of g_coll_hz or n0 is required"));
        }
        if kind == ExperimentKind::Sweep {
            let inner = self
                .sweep_experiment
                .ok_or_else(|| config_err("sweep_experiment", "required for sweep"))?;
            if matches!(inner, ExperimentKind::Sweep | ExperimentKind::Params | ExperimentKind::S21) {
                return Err(config_err("sweep_experiment", "must be superradiance, oat or ramsey"));
            }
            let over = self.sweep_over.ok_or_else(|| config_err("sweep_over", "required for sweep"))?;
            match &self.values {
                None => return Err(config_err("values", "sweep grid is required")),
                Some(v) if v.is_empty() => return Err(config_err("values", "grid must not be empty")),
                _ => {}
            }
            let allowed = match inner {
                ExperimentKind::Superradiance => matches!(over, SweepOver::Theta | SweepOver::N0),
                ExperimentKind::Oat => matches!(over, SweepOver::Theta | SweepOver::TauS | SweepOver::N0),
                _ => matches!(over, SweepOver::ChiNHz | SweepOver::N0),
            };
            if !allowed {
                return Err(config_err("sweep_over", format!("cannot sweep {over:?} for {}", inner.name())));
            }
        }
        if kind == ExperimentKind::S21 && self.delta_hz.unwrap_or(0.0) == 0.0 {
            return Err(config_err("delta_hz", "s21 needs a non-zero cavity-spin detuning"));
        }
        Ok(())
    }

    pub fn g(&self) -> f64 {
        self.g_hz.unwrap_or(defaults::G_HZ)
    }

    pub fn delta(&self) -> f64 {
        self.delta_hz.unwrap_or(defaults::DELTA_HZ)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(defaults::SEED)
    }

    pub fn integrator(&self) -> IntegratorOptions {
        IntegratorOptions::with_tolerances(
            self.rel_tol.unwrap_or(defaults::REL_TOL),
            self.abs_tol.unwrap_or(defaults::ABS_TOL),
        )
    }

    /// Physical parameters with an optional collective-coupling override.
    pub fn physical_params_with(&self, g_coll: Option<f64>) -> Result<PhysicalParams> {
        let g = self.g();
        let n0 = match (g_coll.or(self.g_coll_hz), self.n0) {
            (Some(gc), _) => n0_from_coupling(gc, g)?,
            (None, Some(n)) => n,
            (None, None) => return Err(config_err("g_coll_hz", "one of g_coll_hz or n0 is required")),
        };
        let n0 = if g_coll.is_some() { n0 } else { self.n0.unwrap_or(n0) };
        let p = PhysicalParams {
            g,
            kappa: self.kappa_hz,
            delta: self.delta(),
            gamma_inh: self.fwhm_hz.unwrap_or(defaults::FWHM_HZ),
            gamma_2: gamma_2_from_t2(self.t2_s.unwrap_or(defaults::T2_S)),
            n0,
            kappa_out: self.kappa_out_hz.unwrap_or(self.kappa_hz / 2.0),
        };
        p.validate().map_err(|e| match e {
            Error::InvalidParameter { name, reason } => config_err(&format!("{name}_hz"), reason),
            other => other,
        })?;
        Ok(p)
    }

    pub fn physical_params(&self) -> Result<PhysicalParams> {
        self.physical_params_with(None)
    }

    pub fn ensemble(&self, seed: u64) -> EnsembleConfig {
        let kind = self.lineshape.unwrap_or(LineshapeKind::Lorentzian);
        let eta = match kind {
            LineshapeKind::Gaussian => 0.0,
            LineshapeKind::Lorentzian => 1.0,
            LineshapeKind::PseudoVoigt => self.lorentzian_fraction.unwrap_or(defaults::LORENTZIAN_FRACTION),
        };
        EnsembleConfig {
            n_groups: self.n_groups.unwrap_or(defaults::N_GROUPS),
            kind,
            lorentzian_fraction: eta,
            sampling: match self.sampling.unwrap_or(Sampling::Quantile) {
                Sampling::Quantile => SamplingStrategy::Quantile,
                Sampling::Random => SamplingStrategy::Random(seed),
            },
            decouple_fwhms: match self.decouple_fwhms {
                Some(k) if k == 0.0 => None,
                Some(k) => Some(k),
                None => Some(DECOUPLE_FWHMS),
            },
            integrator: self.integrator(),
        }
    }
}
