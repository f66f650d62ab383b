//! Dispersive regime: per-group Bloch vectors with static frequency offsets,
//! coupled all-to-all through the cavity-mediated mean field.
//!
//! Each group's equations are integrated in the frame co-rotating with its
//! own offset, so the free precession is exact and the integrator only has to
//! follow the interaction-driven motion. Groups whose offset exceeds a cutoff
//! can be decoupled from the mean field and advanced analytically; this
//! bounds the fastest rotating-frame oscillation the integrator must resolve.

use std::f64::consts::TAU;
use std::ops::Range;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::radau::{integrate, IntegrationStats, IntegratorOptions, OdeSystem, Singular, StageSolver};
use super::reduce::pairwise;
use super::{BlochState, EnsembleState, Observation};
use crate::error::Result;
use crate::lineshape::Lineshape;
use crate::params::DerivedRates;

/// Default decoupling cutoff in units of the lineshape FWHM. The fastest
/// coupled offset sets the step size; beyond ten widths a Lorentzian holds
/// about 3% of the spins, which dephase before they can lock to the mean field.
pub const DECOUPLE_FWHMS: f64 = 10.0;

const PAR_MIN: usize = 512;
const PHASE_CACHE: usize = 4;

type C = Complex64;

fn czero() -> C {
    C::new(0.0, 0.0)
}

/// Mean-field time derivative of every group in the lab frame.
///
/// With `m = Σ w̄_j s₊,j` and `K = −iχN₀ + Γ_c/4` (rad/s):
/// `ds₊,j/dt = K·m·s_z,j + (2πiδ_j − γ₂)·s₊,j` and
/// `ds_z,j/dt = −Re(K·m·s̄₊,j) − (Γ_SR/4)·s_z,j`.
pub fn dispersive_rhs(state: &EnsembleState, rates: &DerivedRates, gamma_2: f64) -> Vec<BlochState> {
    let ang = rates.angular();
    let k = C::new(ang.gamma_c / 4.0, -ang.chi_n);
    let g2 = TAU * gamma_2;
    let g_self = ang.gamma_sr_single / 4.0;
    let m = state.mean().s_plus;
    state
        .groups
        .iter()
        .zip(&state.offsets.offsets)
        .map(|(g, &d)| {
            let km = k * m;
            BlochState {
                s_plus: km * g.s_z + C::new(-g2, TAU * d) * g.s_plus,
                s_z: -(km * g.s_plus.conj()).re - g_self * g.s_z,
            }
        })
        .collect()
}

/// Controls for [`evolve_ensemble`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleOptions {
    /// Groups with `|δ_j|` above this value (Hz) precess freely and do not
    /// take part in the mean field. `None` couples every group.
    pub decouple_beyond: Option<f64>,
}

impl EnsembleOptions {
    /// Decoupling cutoff at ±[`DECOUPLE_FWHMS`] of the lineshape.
    pub fn for_lineshape(shape: &Lineshape) -> Self {
        EnsembleOptions {
            decouple_beyond: Some(DECOUPLE_FWHMS * shape.fwhm),
        }
    }

    pub fn fully_coupled() -> Self {
        EnsembleOptions { decouple_beyond: None }
    }
}

impl Default for EnsembleOptions {
    fn default() -> Self {
        EnsembleOptions::fully_coupled()
    }
}

/// Bookkeeping returned by [`evolve_ensemble`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EvolveReport {
    pub stats: IntegrationStats,
    pub decoupled_groups: usize,
    pub decoupled_weight: f64,
}

/// Interaction-picture system for the coupled groups.
///
/// State layout is `(Re s̃₊, Im s̃₊, s_z)` per group with
/// `s₊,j = s̃₊,j·e^{iΔ_j t}`.
pub struct DispersiveSystem {
    k: C,
    gamma_2: f64,
    g_self: f64,
    detuning: Vec<f64>,
    weight: Vec<f64>,
    phase_cache: Mutex<Vec<(u64, Arc<Vec<C>>)>>,
}

impl DispersiveSystem {
    /// `detuning_hz` and `weight` (normalized over the full ensemble) per
    /// coupled group.
    pub fn new(rates: &DerivedRates, gamma_2: f64, detuning_hz: &[f64], weight: &[f64]) -> Self {
        let ang = rates.angular();
        DispersiveSystem {
            k: C::new(ang.gamma_c / 4.0, -ang.chi_n),
            gamma_2: TAU * gamma_2,
            g_self: ang.gamma_sr_single / 4.0,
            detuning: detuning_hz.iter().map(|d| TAU * d).collect(),
            weight: weight.to_vec(),
            phase_cache: Mutex::new(Vec::with_capacity(PHASE_CACHE)),
        }
    }

    /// `e^{iΔ_j t}` for every group. The Newton iteration revisits the same
    /// stage times, so recent vectors are cached.
    fn phases(&self, t: f64) -> Arc<Vec<C>> {
        let key = t.to_bits();
        let mut cache = self.phase_cache.lock().expect("phase cache poisoned");
        if let Some((_, v)) = cache.iter().find(|(k, _)| *k == key) {
            return Arc::clone(v);
        }
        let v: Vec<C> = self
            .detuning
            .par_iter()
            .with_min_len(PAR_MIN)
            .map(|d| {
                let (s, c) = (d * t).sin_cos();
                C::new(c, s)
            })
            .collect();
        let v = Arc::new(v);
        if cache.len() == PHASE_CACHE {
            cache.remove(0);
        }
        cache.push((key, Arc::clone(&v)));
        v
    }

    /// Lab-frame mean field of the coupled groups.
    fn mean_field(&self, y: &[f64], phase: &[C]) -> C {
        let w = &self.weight;
        pairwise(
            w.len(),
            czero(),
            &|r: Range<usize>| {
                let mut acc = czero();
                for j in r {
                    acc += phase[j] * C::new(y[3 * j], y[3 * j + 1]) * w[j];
                }
                acc
            },
            &|a, b| a + b,
        )
    }

    fn mean_z(&self, y: &[f64]) -> f64 {
        let w = &self.weight;
        pairwise(
            w.len(),
            0.0,
            &|r: Range<usize>| r.map(|j| w[j] * y[3 * j + 2]).sum::<f64>(),
            &|a, b| a + b,
        )
    }
}

impl OdeSystem for DispersiveSystem {
    type Jacobian = DispersiveJacobian;

    fn dim(&self) -> usize {
        3 * self.weight.len()
    }

    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) {
        let phase = self.phases(t);
        let m = self.mean_field(y, &phase);
        let (k, g2, gs) = (self.k, self.gamma_2, self.g_self);
        dy.par_chunks_mut(3)
            .zip(y.par_chunks(3))
            .zip(phase.par_iter())
            .with_min_len(PAR_MIN)
            .for_each(|((d, s), e)| {
                let km = k * m * e.conj();
                let sp = C::new(s[0], s[1]);
                let ds = km * s[2] - sp * g2;
                d[0] = ds.re;
                d[1] = ds.im;
                d[2] = -(km * sp.conj()).re - gs * s[2];
            });
    }

    fn jacobian(&self, t: f64, y: &[f64], _f: &[f64]) -> DispersiveJacobian {
        let phase = self.phases(t);
        let m = self.mean_field(y, &phase);
        let k = self.k;
        let blocks = y
            .par_chunks(3)
            .zip(phase.par_iter())
            .zip(self.weight.par_iter())
            .with_min_len(PAR_MIN)
            .map(|((s, e), &w)| {
                let ec = e.conj();
                let km = k * m * ec;
                let sp_conj = C::new(s[0], -s[1]);
                let z = s[2];
                // ∂f/∂m_re and ∂f/∂m_im.
                let dre = k * ec * z;
                let dim = C::new(0.0, 1.0) * k * ec * z;
                let zre = -(k * ec * sp_conj).re;
                let zim = -(C::new(0.0, 1.0) * k * ec * sp_conj).re;
                Block {
                    a: km.re,
                    b: km.im,
                    u: [[dre.re, dim.re], [dre.im, dim.im], [zre, zim]],
                    v: [[w * e.re, w * e.im], [-w * e.im, w * e.re], [0.0, 0.0]],
                }
            })
            .collect();
        DispersiveJacobian {
            gamma_2: self.gamma_2,
            g_self: self.g_self,
            blocks,
            factored: [Vec::new(), Vec::new()],
            schur_inv: [[[czero(); 2]; 2]; 2],
        }
    }
}

/// One group's share of the Jacobian `J = D + U Vᵀ`: a 3×3 diagonal block
/// plus its rows/columns of the rank-2 mean-field coupling.
#[derive(Debug, Clone, Copy)]
struct Block {
    /// Off-diagonal entries `a = Re(K m e^{−iΔt})`, `b = Im(…)` of the 3×3 block.
    a: f64,
    b: f64,
    u: [[f64; 2]; 3],
    v: [[f64; 2]; 3],
}

#[derive(Debug, Clone, Copy, Default)]
struct FactoredBlock {
    minv: [[C; 3]; 3],
    /// `M⁻¹ U`.
    mu: [[C; 2]; 3],
}

/// Block-diagonal plus rank-2 Jacobian, solved with the Woodbury identity.
pub struct DispersiveJacobian {
    gamma_2: f64,
    g_self: f64,
    blocks: Vec<Block>,
    factored: [Vec<FactoredBlock>; 2],
    schur_inv: [[[C; 2]; 2]; 2],
}

/// Inverse of `s·I − D` for a block `D = [[−γ₂, 0, a], [0, −γ₂, b], [−a, −b, −γ_s]]`.
fn shifted_inverse(b: &Block, gamma_2: f64, g_self: f64, shift: C) -> Option<[[C; 3]; 3]> {
    let p = shift + gamma_2;
    let q = shift + g_self;
    let (a, bb) = (b.a, b.b);
    let d = p * q + (a * a + bb * bb);
    let det = p * d;
    if det.norm() == 0.0 || !det.re.is_finite() || !det.im.is_finite() {
        return None;
    }
    let id = d.inv();
    let ipd = det.inv();
    Some([
        [(p * q + bb * bb) * ipd, -(a * bb) * ipd, a * id],
        [-(a * bb) * ipd, (p * q + a * a) * ipd, bb * id],
        [-a * id, -bb * id, p * id],
    ])
}

impl DispersiveJacobian {
    fn factor(&mut self, slot: usize, shift: C) -> std::result::Result<(), Singular> {
        let (g2, gs) = (self.gamma_2, self.g_self);
        let mut factored = std::mem::take(&mut self.factored[slot]);
        factored.resize(self.blocks.len(), FactoredBlock::default());
        let ok = factored
            .par_iter_mut()
            .zip(self.blocks.par_iter())
            .with_min_len(PAR_MIN)
            .all(|(f, b)| match shifted_inverse(b, g2, gs, shift) {
                Some(minv) => {
                    for i in 0..3 {
                        for c in 0..2 {
                            f.mu[i][c] = minv[i][0] * b.u[0][c] + minv[i][1] * b.u[1][c] + minv[i][2] * b.u[2][c];
                        }
                    }
                    f.minv = minv;
                    true
                }
                None => false,
            });
        if !ok {
            return Err(Singular);
        }
        let blocks = &self.blocks;
        let fb = &factored;
        // S = I − Vᵀ M⁻¹ U.
        let vt_mu = pairwise(
            blocks.len(),
            [[czero(); 2]; 2],
            &|r: Range<usize>| {
                let mut acc = [[czero(); 2]; 2];
                for j in r {
                    for a in 0..2 {
                        for c in 0..2 {
                            for k in 0..3 {
                                acc[a][c] += fb[j].mu[k][c] * blocks[j].v[k][a];
                            }
                        }
                    }
                }
                acc
            },
            &|x, y| {
                let mut s = x;
                for a in 0..2 {
                    for c in 0..2 {
                        s[a][c] += y[a][c];
                    }
                }
                s
            },
        );
        let s = [
            [C::new(1.0, 0.0) - vt_mu[0][0], -vt_mu[0][1]],
            [-vt_mu[1][0], C::new(1.0, 0.0) - vt_mu[1][1]],
        ];
        let det = s[0][0] * s[1][1] - s[0][1] * s[1][0];
        if det.norm() == 0.0 || !det.re.is_finite() {
            return Err(Singular);
        }
        let id = det.inv();
        self.schur_inv[slot] = [[s[1][1] * id, -s[0][1] * id], [-s[1][0] * id, s[0][0] * id]];
        self.factored[slot] = factored;
        Ok(())
    }

    fn solve(&self, slot: usize, x: &mut [C]) {
        let fb = &self.factored[slot];
        x.par_chunks_mut(3).zip(fb.par_iter()).with_min_len(PAR_MIN).for_each(|(xj, f)| {
            let b = [xj[0], xj[1], xj[2]];
            for i in 0..3 {
                xj[i] = f.minv[i][0] * b[0] + f.minv[i][1] * b[1] + f.minv[i][2] * b[2];
            }
        });
        let blocks = &self.blocks;
        let xs: &[C] = x;
        let r = pairwise(
            blocks.len(),
            [czero(); 2],
            &|rg: Range<usize>| {
                let mut acc = [czero(); 2];
                for j in rg {
                    for a in 0..2 {
                        for k in 0..3 {
                            acc[a] += xs[3 * j + k] * blocks[j].v[k][a];
                        }
                    }
                }
                acc
            },
            &|p, q| [p[0] + q[0], p[1] + q[1]],
        );
        let si = &self.schur_inv[slot];
        let q = [si[0][0] * r[0] + si[0][1] * r[1], si[1][0] * r[0] + si[1][1] * r[1]];
        x.par_chunks_mut(3).zip(fb.par_iter()).with_min_len(PAR_MIN).for_each(|(xj, f)| {
            for i in 0..3 {
                xj[i] += f.mu[i][0] * q[0] + f.mu[i][1] * q[1];
            }
        });
    }
}

impl StageSolver for DispersiveJacobian {
    fn factor_real(&mut self, shift: f64) -> std::result::Result<(), Singular> {
        self.factor(0, C::new(shift, 0.0))
    }

    fn solve_real(&self, b: &mut [f64]) {
        let mut x: Vec<C> = b.iter().map(|&v| C::new(v, 0.0)).collect();
        self.solve(0, &mut x);
        for (bi, xi) in b.iter_mut().zip(&x) {
            *bi = xi.re;
        }
    }

    fn factor_complex(&mut self, shift: C) -> std::result::Result<(), Singular> {
        self.factor(1, shift)
    }

    fn solve_complex(&self, re: &mut [f64], im: &mut [f64]) {
        let mut x: Vec<C> = re.iter().zip(im.iter()).map(|(&a, &b)| C::new(a, b)).collect();
        self.solve(1, &mut x);
        for ((r, i), v) in re.iter_mut().zip(im.iter_mut()).zip(&x) {
            *r = v.re;
            *i = v.im;
        }
    }
}

/// Advance the ensemble by `duration` seconds of free evolution under the
/// dispersive mean-field equations, recording collective observables at the
/// (segment-relative) times in `grid`.
pub fn evolve_ensemble(
    state: &mut EnsembleState,
    rates: &DerivedRates,
    gamma_2: f64,
    duration: f64,
    opts: &IntegratorOptions,
    ens: &EnsembleOptions,
    grid: &[f64],
    mut on_record: impl FnMut(f64, Observation),
) -> Result<EvolveReport> {
    state.validate()?;
    let w = state.normalized_weights();
    let offsets = &state.offsets.offsets;
    let ang = rates.angular();
    let interacting = ang.chi_n != 0.0 || ang.gamma_c != 0.0 || ang.gamma_sr_single != 0.0;
    let coupled: Vec<usize> = if interacting {
        (0..offsets.len())
            .filter(|&j| ens.decouple_beyond.map_or(true, |cut| offsets[j].abs() <= cut))
            .collect()
    } else {
        Vec::new()
    };
    let mut is_coupled = vec![false; offsets.len()];
    for &j in &coupled {
        is_coupled[j] = true;
    }
    let free: Vec<usize> = (0..offsets.len()).filter(|&j| !is_coupled[j]).collect();
    let decoupled_weight: f64 = free.iter().map(|&j| w[j]).sum();
    let g2 = TAU * gamma_2;
    let g_self = ang.gamma_sr_single / 4.0;

    let free_obs = |t: f64| -> (C, f64) {
        let groups = &state.groups;
        let (sp, sz) = pairwise(
            free.len(),
            (czero(), 0.0),
            &|r: Range<usize>| {
                let mut acc = (czero(), 0.0);
                for i in r {
                    let j = free[i];
                    let (s, c) = (TAU * offsets[j] * t).sin_cos();
                    acc.0 += groups[j].s_plus * C::new(c, s) * w[j];
                    acc.1 += w[j] * groups[j].s_z;
                }
                acc
            },
            &|a, b| (a.0 + b.0, a.1 + b.1),
        );
        (sp * (-g2 * t).exp(), sz * (-g_self * t).exp())
    };

    let mut report = EvolveReport {
        stats: IntegrationStats::default(),
        decoupled_groups: if interacting { free.len() } else { 0 },
        decoupled_weight: if interacting { decoupled_weight } else { 0.0 },
    };

    let final_coupled: Vec<f64>;
    if coupled.is_empty() {
        for &t in grid {
            let (sp, sz) = free_obs(t);
            on_record(t, Observation { s_plus: sp, s_z: sz });
        }
        final_coupled = Vec::new();
    } else {
        let det: Vec<f64> = coupled.iter().map(|&j| offsets[j]).collect();
        let wc: Vec<f64> = coupled.iter().map(|&j| w[j]).collect();
        let sys = DispersiveSystem::new(rates, gamma_2, &det, &wc);
        let mut y0 = Vec::with_capacity(3 * coupled.len());
        for &j in &coupled {
            let g = &state.groups[j];
            y0.extend_from_slice(&[g.s_plus.re, g.s_plus.im, g.s_z]);
        }
        let sol = integrate(&sys, 0.0, &y0, duration, opts, grid, |t, y| {
            let phase = sys.phases(t);
            let m = sys.mean_field(y, &phase);
            let z = sys.mean_z(y);
            let (sp, sz) = free_obs(t);
            on_record(t, Observation { s_plus: m + sp, s_z: z + sz });
        })?;
        report.stats = sol.stats;
        final_coupled = sol.y_end;
    }

    let decay = (-g2 * duration).exp();
    let z_decay = (-g_self * duration).exp();
    for &j in &free {
        let (s, c) = (TAU * offsets[j] * duration).sin_cos();
        let g = &mut state.groups[j];
        g.s_plus *= C::new(c, s) * decay;
        g.s_z *= z_decay;
    }
    for (i, &j) in coupled.iter().enumerate() {
        let (s, c) = (TAU * offsets[j] * duration).sin_cos();
        let y = &final_coupled[3 * i..3 * i + 3];
        state.groups[j] = BlochState::new(C::new(y[0], y[1]) * C::new(c, s), y[2]);
    }
    state.time += duration;
    Ok(report)
}
