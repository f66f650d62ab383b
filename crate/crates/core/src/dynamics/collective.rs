//! Resonant regime: a single collective Bloch vector decaying superradiantly
//! through the adiabatically eliminated cavity.

use std::f64::consts::FRAC_PI_2;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::radau::{integrate, DenseJacobian, IntegrationStats, IntegratorOptions, OdeSystem};
use super::{BlochState, Observation, Trajectory};
use crate::error::Result;

/// Mean-field time derivative of the collective Bloch vector.
///
/// `ds₊/dt = (Γ_c/4)·s₊·s_z`, `ds_z/dt = −(Γ_c/4)·|s₊|² − (Γ_SR/4)·s_z`, with the
/// rates given in Hz and converted to rad/s here.
pub fn collective_rhs(state: &BlochState, gamma_c: f64, gamma_sr_single: f64) -> BlochState {
    let k = FRAC_PI_2 * gamma_c;
    let ks = FRAC_PI_2 * gamma_sr_single;
    BlochState {
        s_plus: state.s_plus * (k * state.s_z),
        s_z: -k * state.s_plus.norm_sqr() - ks * state.s_z,
    }
}

/// [`collective_rhs`] packaged for the integrator; state `(Re s₊, Im s₊, s_z)`.
#[derive(Debug, Clone, Copy)]
pub struct CollectiveSystem {
    k: f64,
    k_self: f64,
}

impl CollectiveSystem {
    pub fn new(gamma_c: f64, gamma_sr_single: f64) -> Self {
        CollectiveSystem {
            k: FRAC_PI_2 * gamma_c,
            k_self: FRAC_PI_2 * gamma_sr_single,
        }
    }
}

impl OdeSystem for CollectiveSystem {
    type Jacobian = DenseJacobian;

    fn dim(&self) -> usize {
        3
    }

    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
        let (a, b, z) = (y[0], y[1], y[2]);
        dy[0] = self.k * a * z;
        dy[1] = self.k * b * z;
        dy[2] = -self.k * (a * a + b * b) - self.k_self * z;
    }

    fn jacobian(&self, _t: f64, y: &[f64], _f: &[f64]) -> DenseJacobian {
        let (a, b, z, k) = (y[0], y[1], y[2], self.k);
        DenseJacobian::new(DMatrix::from_row_slice(
            3,
            3,
            &[k * z, 0.0, k * a, 0.0, k * z, k * b, -2.0 * k * a, -2.0 * k * b, -self.k_self],
        ))
    }
}

/// Integrate the collective equations for `duration` seconds, recording on
/// `grid` (times relative to the start). Returns the final state.
pub fn evolve_collective(
    state: &BlochState,
    gamma_c: f64,
    gamma_sr_single: f64,
    duration: f64,
    opts: &IntegratorOptions,
    grid: &[f64],
) -> Result<(BlochState, Trajectory, IntegrationStats)> {
    let sys = CollectiveSystem::new(gamma_c, gamma_sr_single);
    let y0 = [state.s_plus.re, state.s_plus.im, state.s_z];
    let mut traj = Trajectory::with_capacity(grid.len());
    let sol = integrate(&sys, 0.0, &y0, duration, opts, grid, |t, y| {
        traj.push(
            t,
            Observation {
                s_plus: Complex64::new(y[0], y[1]),
                s_z: y[2],
            },
        )
    })?;
    traj.check_finite()?;
    let y = &sol.y_end;
    Ok((BlochState::new(Complex64::new(y[0], y[1]), y[2]), traj, sol.stats))
}
