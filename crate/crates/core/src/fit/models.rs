//! Model families used throughout the analysis pipelines.

use std::f64::consts::{PI, TAU};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::lm::{least_squares, FitOptions, FitResult, ModelSpec};
use crate::error::{Error, Result};

fn check_xy(model: &str, x: &[f64], y: &[f64], min: usize) -> Result<()> {
    let fail = |reason: String| Error::Fit {
        model: model.to_string(),
        reason,
    };
    if x.len() != y.len() {
        return Err(fail(format!("{} abscissae for {} values", x.len(), y.len())));
    }
    if x.len() < min {
        return Err(fail(format!("need at least {min} points, got {}", x.len())));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(fail("non-finite data".into()));
    }
    Ok(())
}

/// Straight line `y = intercept + slope·x`.
pub fn fit_line(x: &[f64], y: &[f64]) -> Result<FitResult> {
    check_xy("line", x, y, 2)?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let model = ModelSpec::new("line", &["intercept", "slope"], vec![my - slope * mx, slope], |p| {
        x.iter().zip(y).map(|(x, y)| p[0] + p[1] * x - y).collect()
    })
    .with_jacobian(|_| DMatrix::from_fn(x.len(), 2, |i, j| if j == 0 { 1.0 } else { x[i] }));
    least_squares(&model, &FitOptions::default())
}

/// Power law `y = prefactor·x^exponent`, fitted as a line in log–log space.
pub fn fit_power_law(x: &[f64], y: &[f64]) -> Result<FitResult> {
    check_xy("power_law", x, y, 2)?;
    if x.iter().chain(y).any(|&v| v <= 0.0) {
        return Err(Error::Fit {
            model: "power_law".into(),
            reason: "log-log fit needs positive data".into(),
        });
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let line = fit_line(&lx, &ly)?;
    let prefactor = line.params[0].exp();
    Ok(FitResult {
        model_id: "power_law".into(),
        names: vec!["prefactor".into(), "exponent".into()],
        params: vec![prefactor, line.params[1]],
        sigma: vec![prefactor * line.sigma[0], line.sigma[1]],
        ..line
    })
}

/// Sinusoid `y = offset + amplitude·cos(φ − phase)` with `amplitude ≥ 0` and
/// `phase ∈ (−π, π]`.
pub fn fit_sinusoid(phi: &[f64], y: &[f64]) -> Result<FitResult> {
    check_xy("sinusoid", phi, y, 3)?;
    // Linear in (c, a, b) for y = c + a cos φ + b sin φ.
    let design = DMatrix::from_fn(phi.len(), 3, |i, j| match j {
        0 => 1.0,
        1 => phi[i].cos(),
        _ => phi[i].sin(),
    });
    let rhs = nalgebra::DVector::from_column_slice(y);
    let lin = (design.transpose() * &design)
        .lu()
        .solve(&(design.transpose() * rhs))
        .unwrap_or_else(|| nalgebra::DVector::from_vec(vec![0.0, 1.0, 0.0]));
    let amp = lin[1].hypot(lin[2]);
    let guess = vec![lin[0], amp.max(1e-300), lin[2].atan2(lin[1])];
    let model = ModelSpec::new("sinusoid", &["offset", "amplitude", "phase"], guess, |p| {
        phi.iter().zip(y).map(|(f, y)| p[0] + p[1] * (f - p[2]).cos() - y).collect()
    })
    .with_jacobian(|p| {
        DMatrix::from_fn(phi.len(), 3, |i, j| match j {
            0 => 1.0,
            1 => (phi[i] - p[2]).cos(),
            _ => p[1] * (phi[i] - p[2]).sin(),
        })
    });
    let mut fit = least_squares(&model, &FitOptions::default())?;
    if fit.params[1] < 0.0 {
        fit.params[1] = -fit.params[1];
        fit.params[2] += PI;
    }
    fit.params[2] = wrap_phase(fit.params[2]);
    Ok(fit)
}

/// Wrap an angle into `(−π, π]`.
pub fn wrap_phase(x: f64) -> f64 {
    let w = x.rem_euclid(TAU);
    if w > PI {
        w - TAU
    } else {
        w
    }
}

/// Which member of the exponential family was selected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExponentialModel {
    Single,
    Double,
}

/// Single and double exponential fits with corrected-AIC model selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentialFit {
    pub selected: ExponentialModel,
    /// `amplitude·e^{−t/t}` with parameters `amplitude`, `t`.
    pub single: FitResult,
    /// `a_fast·e^{−t/t_fast} + a_slow·e^{−t/t_slow}`.
    pub double: Option<FitResult>,
    pub aicc_single: f64,
    pub aicc_double: Option<f64>,
    /// Time at which the selected model falls to `1/e` of its value at
    /// `t = 0`; infinite when no decay is resolved.
    pub t2_star: f64,
    pub t2_star_sigma: f64,
    /// For a double exponential, the time constant of the component with the
    /// larger amplitude.
    pub dominant_time: Option<f64>,
    pub warnings: Vec<String>,
}

impl ExponentialFit {
    pub fn selected_fit(&self) -> &FitResult {
        match (self.selected, &self.double) {
            (ExponentialModel::Double, Some(d)) => d,
            _ => &self.single,
        }
    }

    /// Selected model at time `t`.
    pub fn evaluate(&self, t: f64) -> f64 {
        self.selected_fit().params.chunks(2).map(|c| c[0] * (-t / c[1]).exp()).sum()
    }
}

/// Minimum AICc improvement required to prefer the double exponential.
pub const AICC_THRESHOLD: f64 = 10.0;
/// Time constants closer than this fraction are treated as one component.
pub const DEGENERATE_FRACTION: f64 = 0.05;
/// Components carrying less than this share of the amplitude are below the
/// sampling floor of a finite ensemble and are not treated as a decay.
pub const MIN_COMPONENT_FRACTION: f64 = 0.01;

fn aicc(rss: f64, n: usize, k: usize) -> f64 {
    let n_f = n as f64;
    let k_f = k as f64;
    n_f * (rss / n_f).ln() + 2.0 * k_f + 2.0 * k_f * (k_f + 1.0) / (n_f - k_f - 1.0)
}

fn exp_sum(t: f64, p: &[f64]) -> f64 {
    p.chunks(2).map(|c| c[0] * (-t / c[1].exp()).exp()).sum()
}

/// Residuals and Jacobian for `Σ a_k e^{−t/T_k}` parametrized by `(a_k, ln T_k)`.
fn exp_model<'a>(id: &str, t: &'a [f64], y: &'a [f64], guess: Vec<f64>, bounds: (f64, f64)) -> ModelSpec<'a> {
    let k = guess.len() / 2;
    let names: Vec<String> = (0..k).flat_map(|i| [format!("a{i}"), format!("ln_t{i}")]).collect();
    let name_refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    for _ in 0..k {
        lower.extend([0.0, bounds.0]);
        upper.extend([10.0, bounds.1]);
    }
    ModelSpec::new(id, &name_refs, guess, move |p| t.iter().zip(y).map(|(t, y)| exp_sum(*t, p) - y).collect())
        .with_bounds(lower, upper)
        .with_jacobian(move |p| {
            DMatrix::from_fn(t.len(), p.len(), |i, j| {
                let c = j / 2;
                let tau = p[2 * c + 1].exp();
                let e = (-t[i] / tau).exp();
                if j % 2 == 0 {
                    e
                } else {
                    p[2 * c] * e * t[i] / tau
                }
            })
        })
}

/// Convert an internal `(a, ln T)` fit into reported `(a, T)` parameters.
fn to_time_constants(mut fit: FitResult, names: &[&str]) -> FitResult {
    for c in 0..fit.params.len() / 2 {
        let tau = fit.params[2 * c + 1].exp();
        fit.params[2 * c + 1] = tau;
        fit.sigma[2 * c + 1] *= tau;
    }
    fit.names = names.iter().map(|s| s.to_string()).collect();
    fit
}

/// Solve `model(t) = model(0)/e` by bisection on a monotone decreasing sum of
/// exponentials given as `(a, T)` pairs.
fn one_over_e_time(p: &[f64]) -> f64 {
    let f = |t: f64| p.chunks(2).map(|c| c[0] * (-t / c[1]).exp()).sum::<f64>();
    let target = f(0.0) / std::f64::consts::E;
    if target <= 0.0 {
        return f64::NAN;
    }
    let mut hi = p.chunks(2).map(|c| c[1]).fold(0.0, f64::max);
    while f(hi) > target {
        hi *= 2.0;
        if !hi.is_finite() {
            return f64::INFINITY;
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Fit `C(t)` with single and, when `allow_double`, double exponentials.
///
/// The double model is selected only when its corrected AIC beats the single
/// model by more than [`AICC_THRESHOLD`] and its two time constants differ
/// by more than [`DEGENERATE_FRACTION`] with both amplitudes above
/// [`MIN_COMPONENT_FRACTION`].
pub fn fit_exponential_family(t: &[f64], y: &[f64], allow_double: bool) -> Result<ExponentialFit> {
    check_xy("exponential", t, y, 8)?;
    if y.iter().any(|&v| !(-1e-9..=1.0 + 1e-6).contains(&v)) {
        return Err(Error::Fit {
            model: "exponential".into(),
            reason: "coherence values must lie in [0, 1]".into(),
        });
    }
    if t.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Fit {
            model: "exponential".into(),
            reason: "times must be strictly increasing".into(),
        });
    }
    let n = t.len();
    let t_max = t[n - 1];
    let t_min = t.iter().cloned().find(|&v| v > 0.0).unwrap_or(t_max);
    let bounds = ((t_min * 1e-3).ln(), (t_max * 1e4).ln());
    let y_max = y.iter().cloned().fold(0.0, f64::max);
    // Residual RMS below this is indistinguishable from rounding of the data.
    let rss_floor = n as f64 * (1e-12 * y_max.max(1e-300)).powi(2);
    let mut warnings = Vec::new();

    // Single exponential.
    let a0 = y[0].max(y_max).max(1e-12);
    let tau0 = match t.iter().zip(y).find(|(_, &v)| v < a0 / std::f64::consts::E) {
        Some((&tc, _)) => tc.max(t_min),
        None => {
            let last = y[n - 1].max(1e-300);
            if last < a0 {
                (-t_max / (last / a0).ln()).min(t_max * 1e3)
            } else {
                t_max * 1e3
            }
        }
    };
    let model = exp_model("exp_single", t, y, vec![a0.min(10.0), tau0.ln().clamp(bounds.0, bounds.1)], bounds);
    let single = to_time_constants(least_squares(&model, &FitOptions::default())?, &["amplitude", "t"]);
    let aicc_single = aicc(single.rss().max(rss_floor), n, 2);
    let single_unbounded = single.params[1] > t_max * 1e3;

    let mut double = None;
    let mut aicc_double = None;
    if allow_double && n > 6 {
        // Variable projection over a grid of time-constant pairs for a start.
        let grid: Vec<f64> = (0..16).map(|k| t_min * (10.0 * t_max / t_min).powf(k as f64 / 15.0)).collect();
        let mut best: Option<(f64, [f64; 4])> = None;
        for i in 0..grid.len() {
            for j in i + 1..grid.len() {
                if grid[j] < 2.0 * grid[i] {
                    continue;
                }
                if let Some((rss, a1, a2)) = two_amplitudes(t, y, grid[i], grid[j]) {
                    if best.map_or(true, |(b, _)| rss < b) {
                        best = Some((rss, [a1, grid[i].ln(), a2, grid[j].ln()]));
                    }
                }
            }
        }
        if let Some((_, start)) = best {
            let starts = vec![vec![
                single.params[0] * 0.5,
                (single.params[1] * 0.3).ln().clamp(bounds.0, bounds.1),
                single.params[0] * 0.5,
                (single.params[1] * 3.0).ln().clamp(bounds.0, bounds.1),
            ]];
            let model = exp_model("exp_double", t, y, start.to_vec(), bounds);
            let opts = FitOptions {
                multi_start: starts,
                ..FitOptions::default()
            };
            let mut fit = least_squares(&model, &opts)?;
            if fit.params[1] > fit.params[3] {
                fit.params.swap(0, 2);
                fit.params.swap(1, 3);
                fit.sigma.swap(0, 2);
                fit.sigma.swap(1, 3);
            }
            let fit = to_time_constants(fit, &["a_fast", "t_fast", "a_slow", "t_slow"]);
            aicc_double = Some(aicc(fit.rss().max(rss_floor), n, 4));
            double = Some(fit);
        }
    }

    let mut selected = ExponentialModel::Single;
    if let (Some(d), Some(ad)) = (&double, aicc_double) {
        let (a1, t1, a2, t2) = (d.params[0], d.params[1], d.params[2], d.params[3]);
        let degenerate = (t2 / t1 - 1.0).abs() < DEGENERATE_FRACTION || a1.min(a2) < MIN_COMPONENT_FRACTION * (a1 + a2);
        if aicc_single - ad > AICC_THRESHOLD {
            if degenerate {
                warnings.push("double exponential degenerate; collapsed to single".to_string());
            } else {
                selected = ExponentialModel::Double;
            }
        }
    }

    let (t2_star, t2_star_sigma, dominant_time) = match (selected, &double) {
        (ExponentialModel::Double, Some(d)) => {
            let t_star = one_over_e_time(&d.params);
            // Diagonal error propagation by central differences.
            let mut var = 0.0;
            for k in 0..4 {
                let h = 1e-6 * d.params[k].abs().max(1e-12);
                let mut up = d.params.clone();
                let mut dn = d.params.clone();
                up[k] += h;
                dn[k] -= h;
                let deriv = (one_over_e_time(&up) - one_over_e_time(&dn)) / (2.0 * h);
                var += (deriv * d.sigma[k]).powi(2);
            }
            let dom = if d.params[0] >= d.params[2] { d.params[1] } else { d.params[3] };
            (t_star, var.sqrt(), Some(dom))
        }
        _ => (single.params[1], single.sigma[1], None),
    };
    let (t2_star, t2_star_sigma) = if selected == ExponentialModel::Single && single_unbounded {
        warnings.push("no decay resolved within the window; T₂* unbounded".to_string());
        (f64::INFINITY, f64::INFINITY)
    } else {
        (t2_star, t2_star_sigma)
    };
    if !single.converged {
        warnings.push("single-exponential fit did not converge".to_string());
    }
    Ok(ExponentialFit {
        selected,
        single,
        double,
        aicc_single,
        aicc_double,
        t2_star,
        t2_star_sigma,
        dominant_time,
        warnings,
    })
}

/// Non-negative least-squares amplitudes for two fixed time constants.
fn two_amplitudes(t: &[f64], y: &[f64], t1: f64, t2: f64) -> Option<(f64, f64, f64)> {
    let e1: Vec<f64> = t.iter().map(|t| (-t / t1).exp()).collect();
    let e2: Vec<f64> = t.iter().map(|t| (-t / t2).exp()).collect();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let (s11, s12, s22) = (dot(&e1, &e1), dot(&e1, &e2), dot(&e2, &e2));
    let (b1, b2) = (dot(&e1, y), dot(&e2, y));
    let det = s11 * s22 - s12 * s12;
    if det <= 1e-14 * s11 * s22 {
        return None;
    }
    let mut a1 = (b1 * s22 - b2 * s12) / det;
    let mut a2 = (b2 * s11 - b1 * s12) / det;
    if a1 < 0.0 || a2 < 0.0 {
        // Best single-component fallbacks on the boundary.
        let c1 = (b1 / s11).max(0.0);
        let c2 = (b2 / s22).max(0.0);
        let r1: f64 = y.iter().zip(&e1).map(|(y, e)| (y - c1 * e).powi(2)).sum();
        let r2: f64 = y.iter().zip(&e2).map(|(y, e)| (y - c2 * e).powi(2)).sum();
        if r1 <= r2 {
            a1 = c1;
            a2 = 0.0;
        } else {
            a1 = 0.0;
            a2 = c2;
        }
    }
    let a1 = a1.min(10.0);
    let a2 = a2.min(10.0);
    let rss = y.iter().zip(e1.iter().zip(&e2)).map(|(y, (p, q))| (y - a1 * p - a2 * q).powi(2)).sum();
    Some((rss, a1, a2))
}

/// Superradiant burst fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BurstFit {
    /// Parameters `gamma_c` (Hz), `t_d` (s), `amplitude` (trace units).
    pub fit: FitResult,
    /// `gamma_c / n0` with its uncertainty, when a spin number was supplied.
    pub gamma_sr_single: Option<(f64, f64)>,
}

/// `sech²(Γ(t − t_d)/4)` with `Γ = 2π·gamma_c`.
pub fn sech2_burst(t: f64, gamma_c: f64, t_d: f64, amplitude: f64) -> f64 {
    let x = TAU * gamma_c * (t - t_d) / 4.0;
    amplitude / x.cosh().powi(2)
}

/// Fit `I(t) = A·sech²(2π·gamma_c·(t − t_d)/4)` to an emission trace.
///
/// Traces whose maximum sits at the first sample are fitted with
/// `t_d` before the window and flagged.
pub fn fit_sech2_burst(t: &[f64], intensity: &[f64], n0: Option<f64>) -> Result<BurstFit> {
    check_xy("sech2_burst", t, intensity, 4)?;
    let (k_max, &i_max) = intensity
        .iter()
        .enumerate()
        .fold((0, &f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    if i_max <= 0.0 {
        return Err(Error::Fit {
            model: "sech2_burst".into(),
            reason: "trace has no positive maximum".into(),
        });
    }
    // Fit on the peak-normalized trace; amplitude is rescaled afterwards.
    let y: Vec<f64> = intensity.iter().map(|v| v / i_max).collect();
    let n = t.len();
    let half_x = 0.881_373_587_019_543; // asech(1/√2)
    let crossing = |range: Box<dyn Iterator<Item = usize>>, level: f64| -> Option<f64> {
        let mut prev: Option<usize> = None;
        for i in range {
            if let Some(p) = prev {
                if (y[p] - level) * (y[i] - level) <= 0.0 && y[p] != y[i] {
                    return Some(t[p] + (level - y[p]) * (t[i] - t[p]) / (y[i] - y[p]));
                }
            }
            prev = Some(i);
        }
        None
    };
    let mut warnings = Vec::new();
    let mut starts: Vec<Vec<f64>> = Vec::new();
    if k_max > 0 && k_max + 1 < n {
        let left = crossing(Box::new((0..=k_max).rev()), 0.5);
        let right = crossing(Box::new(k_max..n), 0.5);
        let t_peak = t[k_max];
        let half_width = match (left, right) {
            (Some(l), Some(r)) => 0.5 * (r - l),
            (Some(l), None) => t_peak - l,
            (None, Some(r)) => r - t_peak,
            (None, None) => 0.25 * (t[n - 1] - t[0]),
        };
        let gamma = 4.0 * half_x / half_width / TAU;
        starts.push(vec![gamma, t_peak, 1.0]);
    } else {
        if k_max == 0 {
            warnings.push("trace is monotone over the window; t_d fitted at or before the window start".to_string());
        }
        // Late-time decay is ∝ e^{−Γ t/2}.
        let hi = crossing(Box::new(0..n), 0.1);
        let lo = crossing(Box::new(0..n), 0.01);
        let gamma_ang = match (hi, lo) {
            (Some(a), Some(b)) if b > a => 2.0 * 10f64.ln() / (b - a),
            _ => {
                let h = crossing(Box::new(0..n), 0.5).unwrap_or(t[n - 1] - t[0]);
                4.0 * half_x / (h - t[0]).max(1e-300)
            }
        };
        for u in [-0.05, -0.2, -0.5, -1.0, -1.5, -2.5] {
            let t_d = t[k_max] + 4.0 * u / gamma_ang;
            starts.push(vec![gamma_ang / TAU, t_d, u.cosh().powi(2)]);
        }
    }
    let guess = starts.remove(0);
    let model = ModelSpec::new("sech2_burst", &["gamma_c", "t_d", "amplitude"], guess, |p| {
        t.iter().zip(&y).map(|(t, y)| sech2_burst(*t, p[0], p[1], p[2]) - y).collect()
    })
    .with_bounds(vec![0.0, f64::NEG_INFINITY, 0.0], vec![f64::INFINITY; 3])
    .with_jacobian(|p| {
        DMatrix::from_fn(n, 3, |i, j| {
            let x = TAU * p[0] * (t[i] - p[1]) / 4.0;
            let s2 = 1.0 / x.cosh().powi(2);
            let dfdx = -2.0 * p[2] * s2 * x.tanh();
            match j {
                0 => dfdx * TAU * (t[i] - p[1]) / 4.0,
                1 => -dfdx * TAU * p[0] / 4.0,
                _ => s2,
            }
        })
    });
    let opts = FitOptions {
        multi_start: starts,
        ..FitOptions::default()
    };
    let mut fit = least_squares(&model, &opts)?;
    fit.params[2] *= i_max;
    fit.sigma[2] *= i_max;
    if fit.params[1] <= t[0] && k_max > 0 {
        warnings.push("fitted t_d precedes the window start".to_string());
    }
    fit.warnings.extend(warnings);
    let gamma_sr_single = match n0 {
        Some(n0) if n0 > 0.0 => Some((fit.params[0] / n0, fit.sigma[0] / n0)),
        _ => None,
    };
    Ok(BurstFit { fit, gamma_sr_single })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_power_law() {
        let x: Vec<f64> = (1..=10).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|x| x * x).collect();
        let fit = fit_power_law(&x, &y).unwrap();
        assert!((fit.params[1] - 2.0).abs() < 1e-6);
        assert!((fit.params[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn sinusoid_round_trip() {
        let phi: Vec<f64> = (0..12).map(|k| k as f64 * TAU / 12.0).collect();
        let y: Vec<f64> = phi.iter().map(|f| 0.5 * (f - 0.3).cos()).collect();
        let fit = fit_sinusoid(&phi, &y).unwrap();
        assert!((fit.params[2] - 0.3).abs() < 1e-8);
        assert!((fit.params[1] - 0.5).abs() < 1e-8);
        assert!(fit.params[0].abs() < 1e-10);
        assert!(fit.converged);
    }

    #[test]
    fn exact_readout_scan_converges() {
        let phi: Vec<f64> = (0..16).map(|k| k as f64 * TAU / 16.0).collect();
        let y: Vec<f64> = phi.iter().map(|f| 0.5 + 0.353 * (f - 2.0038).cos()).collect();
        let fit = fit_sinusoid(&phi, &y).unwrap();
        assert!(fit.converged, "{:?}", fit.warnings);
    }

    #[test]
    fn sinusoid_phase_is_canonical() {
        let phi: Vec<f64> = (0..16).map(|k| k as f64 * TAU / 16.0).collect();
        for phase in [-3.0, -1.0, 0.0, 2.0, 3.1] {
            let y: Vec<f64> = phi.iter().map(|f| 0.5 + 0.4 * (f - phase).cos()).collect();
            let fit = fit_sinusoid(&phi, &y).unwrap();
            assert!(fit.params[1] > 0.0);
            assert!((wrap_phase(fit.params[2] - phase)).abs() < 1e-8, "{phase}");
        }
    }

    #[test]
    fn exact_single_exponential() {
        let tau = 64e-6;
        let t: Vec<f64> = (0..=120).map(|k| 1e-6 * 10f64.powf(k as f64 / 40.0)).collect();
        let y: Vec<f64> = t.iter().map(|t| (-t / tau).exp()).collect();
        let fit = fit_exponential_family(&t, &y, true).unwrap();
        assert_eq!(fit.selected, ExponentialModel::Single);
        assert!((fit.t2_star / tau - 1.0).abs() < 1e-6);
    }

    #[test]
    fn double_exponential_recovered() {
        let t: Vec<f64> = (0..=160).map(|k| 1e-6 * 10f64.powf(k as f64 / 40.0)).collect();
        let y: Vec<f64> = t.iter().map(|t| 0.5 * (-t / 50e-6).exp() + 0.5 * (-t / 3e-3).exp()).collect();
        let fit = fit_exponential_family(&t, &y, true).unwrap();
        assert_eq!(fit.selected, ExponentialModel::Double);
        let d = fit.double.as_ref().unwrap();
        assert!((d.get("t_fast").unwrap() / 50e-6 - 1.0).abs() < 0.02);
        assert!((d.get("t_slow").unwrap() / 3e-3 - 1.0).abs() < 0.02);
        // Model 1/e crossing of the exact curve.
        let exact = one_over_e_time(&[0.5, 50e-6, 0.5, 3e-3]);
        assert!((fit.t2_star / exact - 1.0).abs() < 1e-3);
    }

    #[test]
    fn constant_trace_is_flagged() {
        let t: Vec<f64> = (0..40).map(|k| 1e-6 * (k + 1) as f64).collect();
        let y = vec![1.0; 40];
        let fit = fit_exponential_family(&t, &y, true).unwrap();
        assert!(fit.t2_star.is_infinite());
        assert!(!fit.warnings.is_empty());
    }

    #[test]
    fn rejects_out_of_range_coherence() {
        let t: Vec<f64> = (0..10).map(|k| k as f64).collect();
        let mut y = vec![0.5; 10];
        y[3] = 1.5;
        assert!(fit_exponential_family(&t, &y, false).is_err());
        assert!(fit_exponential_family(&t[..5], &y[..5], false).is_err());
    }

    #[test]
    fn burst_round_trip() {
        let (g, td) = (100e3, 30e-6);
        let t: Vec<f64> = (0..400).map(|k| k as f64 * 0.25e-6).collect();
        let y: Vec<f64> = t.iter().map(|&t| sech2_burst(t, g, td, 2.5)).collect();
        let fit = fit_sech2_burst(&t, &y, Some(1e10)).unwrap();
        assert!((fit.fit.params[0] / g - 1.0).abs() < 1e-3);
        assert!((fit.fit.params[1] / td - 1.0).abs() < 1e-3);
        assert!((fit.gamma_sr_single.unwrap().0 - g / 1e10).abs() < 1e-3 * g / 1e10);

        let scaled: Vec<f64> = y.iter().map(|v| v * 10.0).collect();
        let fit10 = fit_sech2_burst(&t, &scaled, None).unwrap();
        assert!((fit10.fit.params[0] / fit.fit.params[0] - 1.0).abs() < 1e-9);
        assert!((fit10.fit.params[1] / fit.fit.params[1] - 1.0).abs() < 1e-9);
        assert!((fit10.fit.params[2] / fit.fit.params[2] - 10.0).abs() < 1e-8);
    }

    #[test]
    fn monotone_burst_is_flagged() {
        let (g, td) = (50e3, -4e-6);
        let t: Vec<f64> = (0..300).map(|k| k as f64 * 0.2e-6).collect();
        let y: Vec<f64> = t.iter().map(|&t| sech2_burst(t, g, td, 1.0)).collect();
        let fit = fit_sech2_burst(&t, &y, None).unwrap();
        assert!((fit.fit.params[0] / g - 1.0).abs() < 1e-6);
        assert!((fit.fit.params[1] - td).abs() < 1e-9);
        assert!(!fit.fit.warnings.is_empty());
    }

    #[test]
    fn burst_fit_is_shift_equivariant() {
        let (g, td) = (80e3, 20e-6);
        let t: Vec<f64> = (0..300).map(|k| k as f64 * 0.25e-6).collect();
        let y: Vec<f64> = t.iter().map(|&t| sech2_burst(t, g, td, 1.0)).collect();
        let shift = 7.5e-6;
        let ts: Vec<f64> = t.iter().map(|t| t + shift).collect();
        let a = fit_sech2_burst(&t, &y, None).unwrap().fit;
        let b = fit_sech2_burst(&ts, &y, None).unwrap().fit;
        assert!((b.params[1] - a.params[1] - shift).abs() < 1e-10);
        assert!((b.params[0] / a.params[0] - 1.0).abs() < 1e-7);
    }
}
