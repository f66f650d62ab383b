//! Cavity transmission with a dispersively coupled spin ensemble.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{least_squares, FitOptions, FitResult, ModelSpec};
use crate::params::PhysicalParams;

type C = Complex64;

/// `S₂₁(f) = iκ_out / (f − f_c + iκ/2 − g_coll²/(f − f_s + iγ_inh/2))`.
///
/// All frequencies in Hz; the expression is homogeneous, so it equals the
/// angular-frequency form.
pub fn s21_model(freqs: &[f64], p: &PhysicalParams, f_c: f64, f_s: f64) -> Vec<C> {
    let g2 = p.g_coll().powi(2);
    freqs
        .iter()
        .map(|&f| {
            let spin = C::new(f - f_s, p.gamma_inh / 2.0);
            let d = C::new(f - f_c, p.kappa / 2.0) - g2 / spin;
            C::new(0.0, p.kappa_out) / d
        })
        .collect()
}

/// Add complex Gaussian noise at `snr_db` relative to the peak transmission
/// amplitude. The noise power is split evenly between quadratures.
pub fn add_transmission_noise(clean: &[C], snr_db: f64, seed: u64) -> Vec<C> {
    let peak = clean.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let sigma = peak * 10f64.powf(-snr_db / 20.0) / 2f64.sqrt();
    let normal = Normal::new(0.0, sigma.max(0.0)).expect("finite noise level");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    clean
        .iter()
        .map(|z| z + C::new(normal.sample(&mut rng), normal.sample(&mut rng)))
        .collect()
}

/// Quantities held fixed from a broadband fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct S21Fixed {
    pub kappa: f64,
    /// Cavity minus spin frequency.
    pub delta: f64,
    pub f_c: f64,
}

/// Starting values for the free parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct S21Guess {
    pub g_coll: f64,
    pub gamma_inh: f64,
    /// `2κ_out/κ`: unity at critical coupling.
    pub amplitude: f64,
    pub baseline: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum S21Data {
    /// Complex transmission; the baseline is a real offset.
    Complex(Vec<C>),
    /// Power transmission `|S₂₁|²`; the baseline is an additive offset.
    Power(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct S21Fit {
    /// Parameters `g_coll`, `gamma_inh`, `amplitude`, `baseline`.
    pub fit: FitResult,
    /// False when the coupling is indistinguishable from zero.
    pub feature_found: bool,
}

/// Normalized response `(iκ/2)/D(f)` and its derivatives in `g` and `γ`.
fn response(f: f64, fixed: &S21Fixed, g: f64, gamma: f64) -> (C, C, C) {
    let f_s = fixed.f_c - fixed.delta;
    let e = C::new(f - f_s, gamma / 2.0);
    let d = C::new(f - fixed.f_c, fixed.kappa / 2.0) - g * g / e;
    let s = C::new(0.0, fixed.kappa / 2.0) / d;
    let ds_dg = s * (2.0 * g) / (d * e);
    let ds_dgamma = -s / d * (C::new(0.0, 0.5) * g * g / (e * e));
    (s, ds_dg, ds_dgamma)
}

/// Fit the spin feature of a transmission spectrum with `κ`, `Δ` and `f_c`
/// fixed, returning `g_coll`, `γ_inh`, amplitude and baseline.
pub fn fit_s21(freqs: &[f64], data: &S21Data, fixed: &S21Fixed, guess: &S21Guess) -> Result<S21Fit> {
    let n = freqs.len();
    let len = match data {
        S21Data::Complex(v) => v.len(),
        S21Data::Power(v) => v.len(),
    };
    if len != n || n < 4 {
        return Err(Error::Fit {
            model: "s21".into(),
            reason: format!("{n} frequencies for {len} samples"),
        });
    }
    if !(fixed.kappa > 0.0) {
        return Err(Error::invalid("kappa", "cavity linewidth must be > 0"));
    }
    let start = vec![guess.g_coll, guess.gamma_inh, guess.amplitude, guess.baseline];
    let names = ["g_coll", "gamma_inh", "amplitude", "baseline"];
    let lower = vec![0.0, 0.0, f64::NEG_INFINITY, f64::NEG_INFINITY];
    let upper = vec![f64::INFINITY; 4];
    let model = match data {
        S21Data::Complex(z) => ModelSpec::new("s21_complex", &names, start, move |p| {
            let mut r = Vec::with_capacity(2 * n);
            for (f, z) in freqs.iter().zip(z) {
                let (s, _, _) = response(*f, fixed, p[0], p[1]);
                let m = s * p[2] + p[3] - z;
                r.push(m.re);
                r.push(m.im);
            }
            r
        })
        .with_jacobian(move |p| {
            let mut j = DMatrix::zeros(2 * n, 4);
            for (i, f) in freqs.iter().enumerate() {
                let (s, dg, dgam) = response(*f, fixed, p[0], p[1]);
                let cols = [dg * p[2], dgam * p[2], s, C::new(1.0, 0.0)];
                for (k, c) in cols.iter().enumerate() {
                    j[(2 * i, k)] = c.re;
                    j[(2 * i + 1, k)] = c.im;
                }
            }
            j
        }),
        S21Data::Power(y) => ModelSpec::new("s21_power", &names, start, move |p| {
            freqs
                .iter()
                .zip(y)
                .map(|(f, y)| {
                    let (s, _, _) = response(*f, fixed, p[0], p[1]);
                    p[2] * p[2] * s.norm_sqr() + p[3] - y
                })
                .collect()
        })
        .with_jacobian(move |p| {
            DMatrix::from_fn(n, 4, |i, k| {
                let (s, dg, dgam) = response(freqs[i], fixed, p[0], p[1]);
                let a2 = p[2] * p[2];
                match k {
                    0 => 2.0 * a2 * (s.conj() * dg).re,
                    1 => 2.0 * a2 * (s.conj() * dgam).re,
                    2 => 2.0 * p[2] * s.norm_sqr(),
                    _ => 1.0,
                }
            })
        }),
    }
    .with_bounds(lower, upper);
    let mut fit = least_squares(&model, &FitOptions::default())?;
    let feature_found = fit.params[0] > 2.0 * fit.sigma[0] && fit.sigma[0].is_finite();
    if !feature_found {
        fit.warnings.push("spin feature not found: g_coll consistent with zero".to_string());
    }
    Ok(S21Fit { fit, feature_found })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(g_coll: f64, kappa_out: f64) -> PhysicalParams {
        let mut p = PhysicalParams::from_collective_coupling(0.015, g_coll.max(1e-300), 660e3, 2e6).unwrap();
        if g_coll == 0.0 {
            p.n0 = 0.0;
        }
        p.kappa_out = kappa_out;
        p.gamma_inh = 5e3;
        p
    }

    #[test]
    fn bare_cavity_peak() {
        let p = params(0.0, 100e3);
        let s = s21_model(&[7e9], &p, 7e9, 7e9 - 2e6);
        assert!((s[0].norm() - 2.0 * 100e3 / 660e3).abs() < 1e-12);
        let p = params(0.0, 330e3);
        assert!((s21_model(&[7e9], &p, 7e9, 7e9 - 2e6)[0].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn derivatives_match_differences() {
        let fixed = S21Fixed {
            kappa: 660e3,
            delta: 2e6,
            f_c: 7e9,
        };
        let f = 7e9 - 2e6 + 3e3;
        let (g, gm) = (350e3, 5e3);
        let (_, dg, dgam) = response(f, &fixed, g, gm);
        let h = 1.0;
        let num_g = (response(f, &fixed, g + h, gm).0 - response(f, &fixed, g - h, gm).0) / (2.0 * h);
        let num_gm = (response(f, &fixed, g, gm + h).0 - response(f, &fixed, g, gm - h).0) / (2.0 * h);
        assert!((num_g - dg).norm() < 1e-6 * dg.norm());
        assert!((num_gm - dgam).norm() < 1e-6 * dgam.norm());
    }
}
