//! Bounded Levenberg–Marquardt least squares.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

type ResidualFn<'a> = Box<dyn Fn(&[f64]) -> Vec<f64> + Sync + 'a>;
type JacobianFn<'a> = Box<dyn Fn(&[f64]) -> DMatrix<f64> + Sync + 'a>;

/// A residual model `r(p)` with named parameters, bounds and a fixed mask.
///
/// The residual vector embeds the data; `least_squares` minimizes `½‖r‖²`.
pub struct ModelSpec<'a> {
    pub model_id: String,
    pub names: Vec<String>,
    pub guess: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub fixed: Vec<bool>,
    residual: ResidualFn<'a>,
    jacobian: Option<JacobianFn<'a>>,
}

impl<'a> ModelSpec<'a> {
    /// Unbounded model with every parameter free.
    pub fn new(
        model_id: impl Into<String>,
        names: &[&str],
        guess: Vec<f64>,
        residual: impl Fn(&[f64]) -> Vec<f64> + Sync + 'a,
    ) -> Self {
        let n = guess.len();
        ModelSpec {
            model_id: model_id.into(),
            names: names.iter().map(|s| s.to_string()).collect(),
            guess,
            lower: vec![f64::NEG_INFINITY; n],
            upper: vec![f64::INFINITY; n],
            fixed: vec![false; n],
            residual: Box::new(residual),
            jacobian: None,
        }
    }

    /// Analytic Jacobian `∂r_i/∂p_j` over all parameters, fixed ones included.
    pub fn with_jacobian(mut self, jac: impl Fn(&[f64]) -> DMatrix<f64> + Sync + 'a) -> Self {
        self.jacobian = Some(Box::new(jac));
        self
    }

    pub fn with_bounds(mut self, lower: Vec<f64>, upper: Vec<f64>) -> Self {
        self.lower = lower;
        self.upper = upper;
        self
    }

    pub fn with_fixed(mut self, fixed: Vec<bool>) -> Self {
        self.fixed = fixed;
        self
    }

    pub fn with_guess(mut self, guess: Vec<f64>) -> Self {
        self.guess = guess;
        self
    }

    pub fn residual(&self, p: &[f64]) -> Vec<f64> {
        (self.residual)(p)
    }

    fn validate(&self) -> Result<()> {
        let n = self.guess.len();
        let fail = |reason: String| Error::Fit {
            model: self.model_id.clone(),
            reason,
        };
        if self.names.len() != n || self.lower.len() != n || self.upper.len() != n || self.fixed.len() != n {
            return Err(fail("parameter arrays differ in length".into()));
        }
        if self.fixed.iter().all(|&f| f) {
            return Err(fail("no free parameters".into()));
        }
        for i in 0..n {
            if !(self.lower[i] <= self.guess[i] && self.guess[i] <= self.upper[i]) || !self.guess[i].is_finite() {
                return Err(fail(format!("guess for `{}` outside its bounds", self.names[i])));
            }
        }
        Ok(())
    }

    /// Jacobian restricted to the free parameters.
    fn free_jacobian(&self, p: &[f64], r: &[f64], free: &[usize]) -> DMatrix<f64> {
        if let Some(jac) = &self.jacobian {
            let full = jac(p);
            return DMatrix::from_fn(r.len(), free.len(), |i, k| full[(i, free[k])]);
        }
        let mut out = DMatrix::zeros(r.len(), free.len());
        let mut q = p.to_vec();
        for (k, &j) in free.iter().enumerate() {
            let typical = p[j].abs().max(self.guess[j].abs());
            let h = f64::EPSILON.cbrt() * if typical > 0.0 { typical } else { 1.0 };
            let up = (p[j] + h).min(self.upper[j]);
            let dn = (p[j] - h).max(self.lower[j]);
            q[j] = up;
            let rp = self.residual(&q);
            q[j] = dn;
            let rm = self.residual(&q);
            q[j] = p[j];
            let span = up - dn;
            if span > 0.0 {
                for i in 0..r.len() {
                    out[(i, k)] = (rp[i] - rm[i]) / span;
                }
            }
        }
        out
    }
}

/// Stopping criteria and optional deterministic multi-start.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Cosine between the residual and any Jacobian column.
    pub gradient_tol: f64,
    /// Relative parameter step.
    pub step_tol: f64,
    /// Relative reduction of the cost.
    pub cost_tol: f64,
    /// Additional starting points tried in order after the model guess; the
    /// lowest-cost result wins.
    pub multi_start: Vec<Vec<f64>>,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iterations: 500,
            gradient_tol: 1e-10,
            step_tol: 1e-12,
            cost_tol: 1e-14,
            multi_start: Vec::new(),
        }
    }
}

impl FitOptions {
    pub fn with_tolerance(tol: f64) -> Self {
        FitOptions {
            gradient_tol: tol,
            step_tol: tol * 1e-2,
            cost_tol: tol * 1e-4,
            ..FitOptions::default()
        }
    }
}

/// Outcome of a least-squares fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model_id: String,
    pub names: Vec<String>,
    pub params: Vec<f64>,
    /// One-standard-deviation uncertainties from the linearized covariance,
    /// scaled by the residual variance. Fixed parameters report 0;
    /// unidentifiable ones report infinity.
    pub sigma: Vec<f64>,
    pub residual_norm: f64,
    pub n_points: usize,
    pub n_iterations: usize,
    pub converged: bool,
    /// The Jacobian at the optimum is rank deficient.
    pub singular: bool,
    pub warnings: Vec<String>,
}

impl FitResult {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.params[i])
    }

    pub fn sigma_of(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.sigma[i])
    }

    pub fn n_free(&self) -> usize {
        self.sigma.iter().filter(|s| **s != 0.0).count()
    }

    pub fn rss(&self) -> f64 {
        self.residual_norm * self.residual_norm
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

fn clamp(p: &mut [f64], model: &ModelSpec) {
    for i in 0..p.len() {
        p[i] = p[i].clamp(model.lower[i], model.upper[i]);
    }
}

fn finite_cost(r: &[f64]) -> f64 {
    let c = norm2(r);
    if c.is_finite() {
        c
    } else {
        f64::INFINITY
    }
}

/// Minimize `‖r(p)‖²` over the free parameters of `model`.
///
/// Non-convergence within the iteration budget is not an error: the result
/// carries `converged = false` and the best parameters found.
pub fn least_squares(model: &ModelSpec, opts: &FitOptions) -> Result<FitResult> {
    model.validate()?;
    let mut best = solve_from(model, &model.guess, opts)?;
    for start in &opts.multi_start {
        let mut s = start.clone();
        if s.len() != model.guess.len() {
            return Err(Error::Fit {
                model: model.model_id.clone(),
                reason: "multi-start point has the wrong length".into(),
            });
        }
        for i in 0..s.len() {
            if model.fixed[i] {
                s[i] = model.guess[i];
            }
        }
        clamp(&mut s, model);
        let candidate = solve_from(model, &s, opts)?;
        if candidate.residual_norm < best.residual_norm {
            best = candidate;
        }
    }
    Ok(best)
}

fn solve_from(model: &ModelSpec, start: &[f64], opts: &FitOptions) -> Result<FitResult> {
    let free: Vec<usize> = (0..start.len()).filter(|&i| !model.fixed[i]).collect();
    let nf = free.len();
    let mut p = start.to_vec();
    let mut r = model.residual(&p);
    let m = r.len();
    if m < nf {
        return Err(Error::Fit {
            model: model.model_id.clone(),
            reason: format!("{m} data points for {nf} free parameters"),
        });
    }
    let mut cost = finite_cost(&r);
    if !cost.is_finite() {
        return Err(Error::Fit {
            model: model.model_id.clone(),
            reason: "residual is not finite at the starting point".into(),
        });
    }

    let r_floor = 1e-6 * cost.sqrt();
    let mut lambda = 1e-3;
    let mut scale = vec![0.0f64; nf];
    let mut converged = false;
    let mut iterations = 0;
    let mut jac = model.free_jacobian(&p, &r, &free);

    while iterations < opts.max_iterations {
        iterations += 1;
        let rv = DVector::from_column_slice(&r);
        let mut jtj = jac.transpose() * &jac;
        let mut g = jac.transpose() * &rv;
        // Active set: parameters held at a bound by the gradient stay put.
        for (k, &j) in free.iter().enumerate() {
            if (p[j] <= model.lower[j] && g[k] > 0.0) || (p[j] >= model.upper[j] && g[k] < 0.0) {
                let d = jtj[(k, k)].max(1e-300);
                jtj.row_mut(k).fill(0.0);
                jtj.column_mut(k).fill(0.0);
                jtj[(k, k)] = d;
                g[k] = 0.0;
            }
        }

        // Scaled-gradient test: max_j |J_jᵀ r| / (‖J_j‖ ‖r‖).
        if cost == 0.0 || cost.sqrt() <= rounding_level(&jac, &p, &free) {
            converged = true;
            break;
        }
        if scaled_cosine(model, &p, &free, &jac, &r, r_floor) <= opts.gradient_tol {
            converged = true;
            break;
        }
        for k in 0..nf {
            scale[k] = scale[k].max(jtj[(k, k)]);
        }

        let mut accepted = false;
        while lambda < 1e16 {
            let mut a = jtj.clone();
            for k in 0..nf {
                a[(k, k)] += lambda * scale[k].max(1e-300);
            }
            let Some(chol) = a.cholesky() else {
                lambda *= 10.0;
                continue;
            };
            let step = chol.solve(&(-&g));
            let mut trial = p.clone();
            for (k, &j) in free.iter().enumerate() {
                trial[j] += step[k];
            }
            clamp(&mut trial, model);
            let r_trial = model.residual(&trial);
            let c_trial = finite_cost(&r_trial);
            if c_trial < cost {
                let actual_step: f64 = free.iter().map(|&j| (trial[j] - p[j]).powi(2)).sum::<f64>().sqrt();
                let xnorm: f64 = free.iter().map(|&j| p[j].powi(2)).sum::<f64>().sqrt();
                let reduction = (cost - c_trial) / cost;
                p = trial;
                r = r_trial;
                cost = c_trial;
                lambda = (lambda / 3.0).max(1e-12);
                accepted = true;
                if actual_step <= opts.step_tol * (xnorm + opts.step_tol) || reduction <= opts.cost_tol {
                    jac = model.free_jacobian(&p, &r, &free);
                    converged = scaled_cosine(model, &p, &free, &jac, &r, r_floor) <= opts.gradient_tol.sqrt()
                        || cost.sqrt() <= rounding_level(&jac, &p, &free);
                    return Ok(finish(model, p, &r, &jac, &free, iterations, converged));
                }
                break;
            }
            lambda *= 4.0;
        }
        if !accepted {
            // No descent direction improves the cost: stationary to rounding.
            converged = scaled_cosine(model, &p, &free, &jac, &r, r_floor) <= opts.gradient_tol.sqrt()
                || cost.sqrt() <= rounding_level(&jac, &p, &free);
            break;
        }
        jac = model.free_jacobian(&p, &r, &free);
    }
    Ok(finish(model, p, &r, &jac, &free, iterations, converged))
}

/// Residual norm attributable to rounding in evaluating the model,
/// estimated as a few ulps of `Σ_j ‖J_j‖·|p_j|`.
fn rounding_level(jac: &DMatrix<f64>, p: &[f64], free: &[usize]) -> f64 {
    let size: f64 = free.iter().enumerate().map(|(k, &j)| jac.column(k).norm() * p[j].abs()).sum();
    64.0 * f64::EPSILON * size
}

/// `max_j |J_jᵀ r| / (‖J_j‖ ‖r‖)`, with `‖r‖` floored at `r_floor` so that
/// rounding-level residuals of an exact fit do not masquerade as a gradient.
/// Parameters held at a bound by a gradient pointing outward are skipped.
fn scaled_cosine(model: &ModelSpec, p: &[f64], free: &[usize], jac: &DMatrix<f64>, r: &[f64], r_floor: f64) -> f64 {
    let rnorm = norm2(r).sqrt().max(r_floor);
    if rnorm == 0.0 {
        return 0.0;
    }
    let rv = DVector::from_column_slice(r);
    let g = jac.transpose() * rv;
    (0..jac.ncols())
        .map(|k| {
            let j = free[k];
            let pinned = (p[j] <= model.lower[j] && g[k] > 0.0) || (p[j] >= model.upper[j] && g[k] < 0.0);
            let cn = jac.column(k).norm();
            if cn > 0.0 && !pinned {
                g[k].abs() / (cn * rnorm)
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max)
}

fn finish(
    model: &ModelSpec,
    p: Vec<f64>,
    r: &[f64],
    jac: &DMatrix<f64>,
    free: &[usize],
    n_iterations: usize,
    converged: bool,
) -> FitResult {
    let m = r.len();
    let nf = free.len();
    let rss = norm2(r);
    let variance = if m > nf { rss / (m - nf) as f64 } else { 0.0 };
    let mut sigma = vec![0.0; p.len()];
    let mut singular = false;
    let jtj = jac.transpose() * jac;
    // Column equilibration keeps the rank test meaningful across scales.
    let d: Vec<f64> = (0..nf).map(|k| jtj[(k, k)].sqrt()).collect();
    if d.iter().any(|&x| x == 0.0 || !x.is_finite()) {
        singular = true;
    }
    let scaled = DMatrix::from_fn(nf, nf, |i, j| if singular { 0.0 } else { jtj[(i, j)] / (d[i] * d[j]) });
    let inverse = if singular { None } else { scaled.clone().try_inverse() };
    match inverse {
        Some(inv) if condition_ok(&scaled) => {
            for (k, &j) in free.iter().enumerate() {
                sigma[j] = (variance * inv[(k, k)]).max(0.0).sqrt() / d[k];
            }
        }
        _ => {
            singular = true;
            for &j in free {
                sigma[j] = f64::INFINITY;
            }
        }
    }
    let mut warnings = Vec::new();
    if singular {
        warnings.push("singular Jacobian at the optimum; uncertainties unbounded".to_string());
    }
    if !converged {
        warnings.push(format!("not converged after {n_iterations} iterations"));
    }
    FitResult {
        model_id: model.model_id.clone(),
        names: model.names.clone(),
        params: p,
        sigma,
        residual_norm: rss.sqrt(),
        n_points: m,
        n_iterations,
        converged,
        singular,
        warnings,
    }
}

fn condition_ok(scaled: &DMatrix<f64>) -> bool {
    let sv = scaled.clone().symmetric_eigenvalues();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    max > 0.0 && min > max * 1e-14
}
