//! Physical parameters and the closed-form rate algebra linking single-spin
//! quantities to collective rates.
//!
//! Every frequency at this level is an ordinary frequency in Hz (the
//! quantity usually written `ω/2π`). The dynamics engine multiplies by
//! [`TAU`] exactly once when it builds its right-hand side.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bohr magneton, J/T (CODATA 2018).
pub const BOHR_MAGNETON: f64 = 9.274_010_078_3e-24;
/// Reduced Planck constant, J·s (CODATA 2018).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Vacuum permeability, N/A² (CODATA 2018).
pub const VACUUM_PERMEABILITY: f64 = 1.256_637_062_12e-6;

/// Default homogeneous coherence time, seconds.
pub const DEFAULT_T2: f64 = 0.150;

/// Convert a homogeneous coherence time into the transverse decay rate used
/// by the dynamics engine, `1/(π T₂)` in Hz.
pub fn gamma_2_from_t2(t2: f64) -> f64 {
    if t2.is_infinite() {
        0.0
    } else {
        1.0 / (PI * t2)
    }
}

/// Full experimental parameter set. All rates in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// Single-spin coupling.
    pub g: f64,
    /// Cavity power decay rate (FWHM).
    pub kappa: f64,
    /// Cavity minus spin frequency, signed.
    pub delta: f64,
    /// Inhomogeneous linewidth (FWHM).
    pub gamma_inh: f64,
    /// Single-particle transverse dephasing rate.
    pub gamma_2: f64,
    /// Effective number of polarized spins.
    pub n0: f64,
    /// Output port coupling rate; only enters the transmission model.
    pub kappa_out: f64,
}

impl PhysicalParams {
    /// Parameters expressed through the collective coupling `g√N₀` instead of
    /// the spin number.
    pub fn from_collective_coupling(g: f64, g_coll: f64, kappa: f64, delta: f64) -> Result<Self> {
        let n0 = n0_from_coupling(g_coll, g)?;
        let p = PhysicalParams {
            g,
            kappa,
            delta,
            gamma_inh: 0.0,
            gamma_2: gamma_2_from_t2(DEFAULT_T2),
            n0,
            kappa_out: kappa / 2.0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("g", self.g),
            ("kappa", self.kappa),
            ("delta", self.delta),
            ("gamma_inh", self.gamma_inh),
            ("gamma_2", self.gamma_2),
            ("n0", self.n0),
            ("kappa_out", self.kappa_out),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(Error::invalid(name, "must be finite"));
            }
        }
        if self.kappa <= 0.0 {
            return Err(Error::invalid("kappa", "cavity linewidth must be > 0"));
        }
        if self.g < 0.0 {
            return Err(Error::invalid("g", "must be >= 0"));
        }
        if self.gamma_inh < 0.0 {
            return Err(Error::invalid("gamma_inh", "must be >= 0"));
        }
        if self.gamma_2 < 0.0 {
            return Err(Error::invalid("gamma_2", "must be >= 0"));
        }
        if self.n0 < 0.0 {
            return Err(Error::invalid("n0", "must be >= 0"));
        }
        if !(0.0..=self.kappa).contains(&self.kappa_out) {
            return Err(Error::invalid("kappa_out", "must lie in [0, kappa]"));
        }
        Ok(())
    }

    /// Collective coupling `g√N₀`, Hz.
    pub fn g_coll(&self) -> f64 {
        self.g * self.n0.sqrt()
    }

    /// Same parameters with `N₀` replaced.
    pub fn with_n0(mut self, n0: f64) -> Self {
        self.n0 = n0;
        self
    }
}

/// Rates derived from [`PhysicalParams`] after adiabatic elimination of the
/// cavity. All in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedRates {
    /// Single-particle exchange rate χ (sign of Δ).
    pub chi: f64,
    /// Single-particle collective-emission rate Γ_SR.
    pub gamma_sr_single: f64,
    /// Collective interaction rate χN₀.
    pub chi_n: f64,
    /// Collective emission rate Γ_SR·N₀.
    pub gamma_c: f64,
    /// Many-body gap between adjacent total-spin manifolds, equal to χN₀.
    pub gap: f64,
    /// Collective coupling g√N₀.
    pub g_coll: f64,
}

impl DerivedRates {
    /// Rates with both the exchange and the emission channels switched off.
    pub fn zero() -> Self {
        DerivedRates {
            chi: 0.0,
            gamma_sr_single: 0.0,
            chi_n: 0.0,
            gamma_c: 0.0,
            gap: 0.0,
            g_coll: 0.0,
        }
    }

    /// Angular-frequency versions of the collective rates, rad/s.
    pub(crate) fn angular(&self) -> AngularRates {
        AngularRates {
            chi_n: TAU * self.chi_n,
            gamma_c: TAU * self.gamma_c,
            gamma_sr_single: TAU * self.gamma_sr_single,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct AngularRates {
    pub chi_n: f64,
    pub gamma_c: f64,
    pub gamma_sr_single: f64,
}

/// Exchange and emission rates of the dispersively coupled ensemble:
/// `χ = 4g²Δ/(4Δ²+κ²)` and `Γ_SR = 4g²κ/(4Δ²+κ²)`, with the collective
/// versions scaled by `N₀`.
pub fn derive_rates(p: &PhysicalParams) -> Result<DerivedRates> {
    if p.kappa == 0.0 && p.delta == 0.0 {
        return Err(Error::invalid("kappa", "rates undefined for kappa = delta = 0"));
    }
    p.validate()?;
    let denom = 4.0 * p.delta * p.delta + p.kappa * p.kappa;
    let g2 = p.g * p.g;
    let chi = 4.0 * g2 * p.delta / denom;
    let gamma_sr_single = 4.0 * g2 * p.kappa / denom;
    // N₀ enters through g_coll² so that chi_n stays accurate when g is tiny
    // and N₀ huge.
    let g_coll = p.g_coll();
    let gc2 = g_coll * g_coll;
    let chi_n = 4.0 * gc2 * p.delta / denom;
    let gamma_c = 4.0 * gc2 * p.kappa / denom;
    Ok(DerivedRates {
        chi,
        gamma_sr_single,
        chi_n,
        gamma_c,
        gap: chi_n,
        g_coll,
    })
}

/// Single-ion magnetic-dipole coupling to a cavity mode,
/// `g = (g∥ μ_B / 2ħ) √(μ₀ ħ ω_s / 2V_m)`, returned in Hz.
///
/// `spin_freq` is the ordinary transition frequency in Hz, `mode_volume` in m³.
pub fn single_ion_coupling(g_parallel: f64, mode_volume: f64, spin_freq: f64) -> Result<f64> {
    if !(mode_volume > 0.0) || !mode_volume.is_finite() {
        return Err(Error::invalid("mode_volume", "must be > 0"));
    }
    if !(spin_freq > 0.0) || !spin_freq.is_finite() {
        return Err(Error::invalid("spin_freq", "must be > 0"));
    }
    if !(g_parallel >= 0.0) || !g_parallel.is_finite() {
        return Err(Error::invalid("g_parallel", "must be >= 0"));
    }
    let omega_s = TAU * spin_freq;
    let b_vac = (VACUUM_PERMEABILITY * HBAR * omega_s / (2.0 * mode_volume)).sqrt();
    let g_ang = g_parallel * BOHR_MAGNETON / (2.0 * HBAR) * b_vac;
    Ok(g_ang / TAU)
}

/// Effective polarized spin number from a fitted collective coupling,
/// `N₀ = (g√N₀ / g)²`.
pub fn n0_from_coupling(g_coll: f64, g: f64) -> Result<f64> {
    if !(g > 0.0) || !g.is_finite() {
        return Err(Error::invalid("g", "single-spin coupling must be > 0"));
    }
    if !(g_coll >= 0.0) || !g_coll.is_finite() {
        return Err(Error::invalid("g_coll", "must be >= 0"));
    }
    let r = g_coll / g;
    Ok(r * r)
}
