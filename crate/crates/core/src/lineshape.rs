//! Inhomogeneous frequency-offset distributions: sampling for simulations and
//! closed-form free-dephasing envelopes used as oracles.

use std::f64::consts::{LN_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Ratio FWHM/σ of a Gaussian, `2√(2 ln 2)`.
pub const GAUSSIAN_FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949_4;

/// Random-mode offsets beyond this many FWHM are redrawn.
pub const TRUNCATION_FWHMS: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LineshapeKind {
    Gaussian,
    Lorentzian,
    PseudoVoigt,
}

/// Distribution of static transition-frequency offsets.
///
/// The pseudo-Voigt profile is the mixture `(1-η)·Gaussian + η·Lorentzian`
/// with both components sharing the same FWHM.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lineshape {
    pub kind: LineshapeKind,
    /// Full width at half maximum, Hz.
    pub fwhm: f64,
    /// Lorentzian weight η; only meaningful for [`LineshapeKind::PseudoVoigt`].
    pub lorentzian_fraction: f64,
}

impl Lineshape {
    pub fn gaussian(fwhm: f64) -> Self {
        Lineshape {
            kind: LineshapeKind::Gaussian,
            fwhm,
            lorentzian_fraction: 0.0,
        }
    }

    pub fn lorentzian(fwhm: f64) -> Self {
        Lineshape {
            kind: LineshapeKind::Lorentzian,
            fwhm,
            lorentzian_fraction: 1.0,
        }
    }

    pub fn pseudo_voigt(fwhm: f64, lorentzian_fraction: f64) -> Self {
        Lineshape {
            kind: LineshapeKind::PseudoVoigt,
            fwhm,
            lorentzian_fraction,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fwhm > 0.0) || !self.fwhm.is_finite() {
            return Err(Error::invalid("fwhm", "linewidth must be > 0"));
        }
        if !(0.0..=1.0).contains(&self.lorentzian_fraction) {
            return Err(Error::invalid("lorentzian_fraction", "must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Lorentzian weight of the mixture.
    pub fn eta(&self) -> f64 {
        match self.kind {
            LineshapeKind::Gaussian => 0.0,
            LineshapeKind::Lorentzian => 1.0,
            LineshapeKind::PseudoVoigt => self.lorentzian_fraction,
        }
    }

    pub fn sigma(&self) -> f64 {
        self.fwhm / GAUSSIAN_FWHM_PER_SIGMA
    }

    /// Lorentzian half width at half maximum.
    pub fn hwhm(&self) -> f64 {
        0.5 * self.fwhm
    }

    /// Probability density at offset `x` (Hz⁻¹).
    pub fn density(&self, x: f64) -> f64 {
        let eta = self.eta();
        let s = self.sigma();
        let h = self.hwhm();
        let gauss = (-0.5 * (x / s).powi(2)).exp() / (s * (2.0 * PI).sqrt());
        let lor = h / (PI * (x * x + h * h));
        (1.0 - eta) * gauss + eta * lor
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "seed")]
pub enum SamplingStrategy {
    /// Deterministic midpoint quantiles `Q((j-½)/n)`.
    Quantile,
    /// I.i.d. draws from a seeded ChaCha8 stream.
    Random(u64),
}

/// Frequency offsets (Hz) assigned to ion groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OffsetSet {
    pub offsets: Vec<f64>,
    pub strategy: SamplingStrategy,
    /// Number of random draws rejected by the ±50·FWHM truncation.
    pub truncated: usize,
}

impl OffsetSet {
    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    /// All groups exactly on resonance.
    pub fn zeros(n: usize) -> Self {
        OffsetSet {
            offsets: vec![0.0; n],
            strategy: SamplingStrategy::Quantile,
            truncated: 0,
        }
    }
}

fn gaussian_quantile(p: f64, sigma: f64) -> f64 {
    // statrs returns a unit-variance normal quantile accurate to ~1e-15.
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    sigma * unit.inverse_cdf(p)
}

fn lorentzian_quantile(p: f64, hwhm: f64) -> f64 {
    hwhm * (PI * (p - 0.5)).tan()
}

/// Midpoint quantiles of one component, mirrored so the set is exactly
/// symmetric about zero.
fn symmetric_quantiles(n: usize, q: impl Fn(f64) -> f64) -> Vec<f64> {
    let mut out = vec![0.0; n];
    let half = n / 2;
    for j in 0..half {
        let p = (j as f64 + 0.5) / n as f64;
        let v = q(p);
        out[j] = v;
        out[n - 1 - j] = -v;
    }
    out
}

/// Sample `n` group offsets from `shape`.
///
/// For the pseudo-Voigt mixture the quantile strategy assigns `round(η n)`
/// Lorentzian-quantile points and the remainder Gaussian-quantile points,
/// merged in ascending order.
pub fn sample_offsets(shape: &Lineshape, n: usize, strategy: SamplingStrategy) -> Result<OffsetSet> {
    if n == 0 {
        return Err(Error::invalid("n_groups", "at least one group is required"));
    }
    shape.validate()?;
    let eta = shape.eta();
    let sigma = shape.sigma();
    let hwhm = shape.hwhm();
    match strategy {
        SamplingStrategy::Quantile => {
            let n_lor = (eta * n as f64).round() as usize;
            let n_gauss = n - n_lor;
            let mut offsets = symmetric_quantiles(n_gauss, |p| gaussian_quantile(p, sigma));
            offsets.extend(symmetric_quantiles(n_lor, |p| lorentzian_quantile(p, hwhm)));
            if n_lor > 0 && n_gauss > 0 {
                offsets.sort_by(f64::total_cmp);
            }
            Ok(OffsetSet {
                offsets,
                strategy,
                truncated: 0,
            })
        }
        SamplingStrategy::Random(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let limit = TRUNCATION_FWHMS * shape.fwhm;
            let mut offsets = Vec::with_capacity(n);
            let mut truncated = 0;
            while offsets.len() < n {
                let lorentz = eta > 0.0 && (eta >= 1.0 || rng.gen::<f64>() < eta);
                let x = if lorentz {
                    lorentzian_quantile(rng.gen::<f64>(), hwhm)
                } else {
                    let z: f64 = rng.sample(StandardNormal);
                    sigma * z
                };
                if x.abs() > limit || !x.is_finite() {
                    truncated += 1;
                    continue;
                }
                offsets.push(x);
            }
            Ok(OffsetSet {
                offsets,
                strategy,
                truncated,
            })
        }
    }
}

/// Ensemble coherence `|⟨e^{2πiδt}⟩|` of a freely dephasing, non-interacting
/// ensemble: the Fourier transform of the lineshape.
pub fn free_dephasing_coherence(shape: &Lineshape, t: f64) -> f64 {
    let x = PI * shape.fwhm * t;
    let gauss = (-x * x / (4.0 * LN_2)).exp();
    let lor = (-x).exp();
    match shape.kind {
        LineshapeKind::Gaussian => gauss,
        LineshapeKind::Lorentzian => lor,
        LineshapeKind::PseudoVoigt => {
            let eta = shape.lorentzian_fraction;
            (1.0 - eta) * gauss + eta * lor
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn lorentzian_upper_quartile() {
        assert_abs_diff_eq!(lorentzian_quantile(0.75, 2500.0), 2500.0, epsilon = 1e-9);
        // n = 2: midpoints 0.25 and 0.75.
        let set = sample_offsets(&Lineshape::lorentzian(5e3), 2, SamplingStrategy::Quantile).unwrap();
        assert_abs_diff_eq!(set.offsets[1], 2500.0, epsilon = 1e-9);
        assert_eq!(set.offsets[0], -set.offsets[1]);
    }

    #[test]
    fn odd_quantile_sets_have_zero_median() {
        for shape in [
            Lineshape::gaussian(5e3),
            Lineshape::lorentzian(5e3),
            Lineshape::pseudo_voigt(5e3, 0.3),
        ] {
            for n in [1, 3, 101, 1001] {
                let set = sample_offsets(&shape, n, SamplingStrategy::Quantile).unwrap();
                assert_eq!(set.offsets[n / 2], 0.0, "{shape:?} n={n}");
            }
        }
    }

    #[test]
    fn quantile_sets_sorted_and_symmetric() {
        let set = sample_offsets(&Lineshape::pseudo_voigt(5e3, 0.3), 1000, SamplingStrategy::Quantile).unwrap();
        assert!(set.offsets.windows(2).all(|w| w[0] <= w[1]));
        for j in 0..500 {
            assert_eq!(set.offsets[j], -set.offsets[999 - j]);
        }
    }

    #[test]
    fn voigt_endpoints_match_pure_shapes() {
        let n = 777;
        let g = sample_offsets(&Lineshape::gaussian(4e3), n, SamplingStrategy::Quantile).unwrap();
        let v0 = sample_offsets(&Lineshape::pseudo_voigt(4e3, 0.0), n, SamplingStrategy::Quantile).unwrap();
        assert_eq!(g.offsets, v0.offsets);
        let l = sample_offsets(&Lineshape::lorentzian(4e3), n, SamplingStrategy::Quantile).unwrap();
        let v1 = sample_offsets(&Lineshape::pseudo_voigt(4e3, 1.0), n, SamplingStrategy::Quantile).unwrap();
        assert_eq!(l.offsets, v1.offsets);
        for t in [0.0, 1e-5, 1e-4, 1e-3] {
            assert_eq!(
                free_dephasing_coherence(&Lineshape::pseudo_voigt(4e3, 0.0), t),
                free_dephasing_coherence(&Lineshape::gaussian(4e3), t)
            );
            assert_eq!(
                free_dephasing_coherence(&Lineshape::pseudo_voigt(4e3, 1.0), t),
                free_dephasing_coherence(&Lineshape::lorentzian(4e3), t)
            );
        }
    }

    #[test]
    fn voigt_quantile_component_counts() {
        let set = sample_offsets(&Lineshape::pseudo_voigt(5e3, 0.3), 10, SamplingStrategy::Quantile).unwrap();
        // Three Lorentzian points (one at zero) and seven Gaussian points.
        assert_eq!(set.offsets.iter().filter(|&&x| x == 0.0).count(), 2);
    }

    #[test]
    fn random_gaussian_width() {
        let set = sample_offsets(&Lineshape::gaussian(5e3), 100_000, SamplingStrategy::Random(7)).unwrap();
        let n = set.len() as f64;
        let mean = set.offsets.iter().sum::<f64>() / n;
        let var = set.offsets.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let sd = var.sqrt();
        assert!((sd / (5e3 / 2.3548) - 1.0).abs() < 0.01, "sd = {sd}");
    }

    #[test]
    fn random_sampling_is_reproducible_and_truncated() {
        let shape = Lineshape::lorentzian(5e3);
        let a = sample_offsets(&shape, 20_000, SamplingStrategy::Random(11)).unwrap();
        let b = sample_offsets(&shape, 20_000, SamplingStrategy::Random(11)).unwrap();
        assert_eq!(a, b);
        assert!(a.offsets.iter().all(|x| x.abs() <= 50.0 * 5e3));
        let frac = a.truncated as f64 / (a.len() + a.truncated) as f64;
        assert!(frac > 0.0 && frac < 0.013, "truncated fraction {frac}");
        let c = sample_offsets(&shape, 20_000, SamplingStrategy::Random(12)).unwrap();
        assert_ne!(a.offsets, c.offsets);
    }

    #[test]
    fn one_over_e_times() {
        let lor = Lineshape::lorentzian(5e3);
        assert_abs_diff_eq!(free_dephasing_coherence(&lor, 1.0 / (PI * 5e3)), (-1.0f64).exp(), epsilon = 1e-15);
        let gau = Lineshape::gaussian(5e3);
        let t = 2.0 * LN_2.sqrt() / (PI * 5e3);
        assert_abs_diff_eq!(free_dephasing_coherence(&gau, t), (-1.0f64).exp(), epsilon = 1e-15);
        assert!((t - 106.0e-6).abs() < 0.1e-6);
        assert_eq!(free_dephasing_coherence(&gau, 0.0), 1.0);
        assert_eq!(free_dephasing_coherence(&Lineshape::pseudo_voigt(5e3, 0.3), 0.0), 1.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(sample_offsets(&Lineshape::gaussian(5e3), 0, SamplingStrategy::Quantile).is_err());
        assert!(sample_offsets(&Lineshape::gaussian(0.0), 10, SamplingStrategy::Quantile).is_err());
        assert!(sample_offsets(&Lineshape::pseudo_voigt(1.0, 1.5), 10, SamplingStrategy::Quantile).is_err());
    }

    /// Brute-force discrete Fourier sum of the quantile offsets against the
    /// closed-form envelope.
    #[test]
    fn quantile_sum_matches_fourier_envelope() {
        for shape in [
            Lineshape::gaussian(5e3),
            Lineshape::lorentzian(5e3),
            Lineshape::pseudo_voigt(5e3, 0.3),
        ] {
            // Midpoint quantiles alias the heavy Lorentzian tails at the
            // few-1e-3 level for n = 1e4; 1e5 groups bring them below 1e-3.
            let n = if shape.eta() > 0.0 { 100_000 } else { 10_000 };
            let set = sample_offsets(&shape, n, SamplingStrategy::Quantile).unwrap();
            for k in 0..=60 {
                let t = k as f64 * 3.0 / shape.fwhm / 60.0;
                let sum: f64 = set.offsets.iter().map(|d| (2.0 * PI * d * t).cos()).sum::<f64>() / set.len() as f64;
                let exact = free_dephasing_coherence(&shape, t);
                assert!((sum - exact).abs() < 1e-3, "{shape:?} t={t}: {sum} vs {exact}");
            }
        }
    }

    /// Half-maximum width of a kernel density estimate of the quantile set.
    fn kde_fwhm(offsets: &[f64], bandwidth: f64, span: f64) -> f64 {
        let grid: Vec<f64> = (0..=4000).map(|i| -span + 2.0 * span * i as f64 / 4000.0).collect();
        let dens: Vec<f64> = grid
            .iter()
            .map(|&x| offsets.iter().map(|d| (-0.5 * ((x - d) / bandwidth).powi(2)).exp()).sum())
            .collect();
        let peak = dens.iter().cloned().fold(0.0, f64::max);
        let half = 0.5 * peak;
        let cross = |range: &mut dyn Iterator<Item = usize>| -> f64 {
            for i in range {
                let (a, b) = (dens[i], dens[i + 1]);
                if (a - half) * (b - half) <= 0.0 {
                    return grid[i] + (half - a) / (b - a) * (grid[i + 1] - grid[i]);
                }
            }
            f64::NAN
        };
        let left = cross(&mut (0..4000));
        let right = cross(&mut (0..4000).rev());
        right - left
    }

    #[test]
    fn quantile_sets_reproduce_fwhm() {
        for shape in [Lineshape::gaussian(5e3), Lineshape::lorentzian(5e3), Lineshape::pseudo_voigt(5e3, 0.3)] {
            // Midpoint quantiles alias the heavy Lorentzian tails at the
            // few-1e-3 level for n = 1e4; 1e5 groups bring them below 1e-3.
            let n = if shape.eta() > 0.0 { 100_000 } else { 10_000 };
            let set = sample_offsets(&shape, n, SamplingStrategy::Quantile).unwrap();
            let w = kde_fwhm(&set.offsets, shape.fwhm / 60.0, 2.0 * shape.fwhm);
            assert!((w / shape.fwhm - 1.0).abs() < 0.02, "{shape:?}: {w}");
        }
    }
}
