//! Ramsey coherence time versus interaction strength: the many-body gap
//! suppresses inhomogeneous dephasing once `χN₀` exceeds the linewidth.

use std::time::Instant;

use cavspin::experiments::{default_tau_grid, run_ramsey, EnsembleConfig, RamseyOptions};
use cavspin::lineshape::LineshapeKind;
use cavspin::PhysicalParams;

fn main() -> cavspin::Result<()> {
    let (kappa, delta): (f64, f64) = (660e3, 22e6);
    let n_groups = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(10_000);
    let cfg = EnsembleConfig {
        n_groups,
        kind: LineshapeKind::Lorentzian,
        ..EnsembleConfig::default()
    };
    println!("chi_n_hz,t2_star_s,model,seconds,steps");
    for chi_n in [0.1e3_f64, 0.7e3, 2e3, 4e3, 7e3] {
        // Collective coupling giving the requested χN₀ at fixed κ and Δ.
        let g_coll = (chi_n * (4.0 * delta * delta + kappa * kappa) / (4.0 * delta)).sqrt();
        let mut p = PhysicalParams::from_collective_coupling(0.015, g_coll, kappa, delta)?;
        p.gamma_inh = 5e3;
        let start = Instant::now();
        let run = run_ramsey(&p, &cfg, &default_tau_grid(), &RamseyOptions::default())?;
        let fit = run.fit.expect("fit requested");
        println!(
            "{chi_n},{:.4e},{:?},{:.1},{}",
            fit.t2_star,
            fit.selected,
            start.elapsed().as_secs_f64(),
            run.stats.accepted
        );
    }
    Ok(())
}
