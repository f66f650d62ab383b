//! Spin-echo phase shift from one-axis twisting.
//!
//! Scans the tipping angle at a fixed delay, then extracts `χN₀` from the
//! slope of the phase against delay.

use std::f64::consts::{FRAC_PI_4, PI};

use cavspin::experiments::{default_phase_grid, oat_rate_scan, run_oat, EnsembleConfig, ScanAxis};
use cavspin::lineshape::LineshapeKind;
use cavspin::{derive_rates, PhysicalParams};

fn main() -> cavspin::Result<()> {
    let mut p = PhysicalParams::from_collective_coupling(0.015, 150e3, 660e3, 22e6)?;
    p.gamma_inh = 100.0;
    let cfg = EnsembleConfig {
        n_groups: 2000,
        kind: LineshapeKind::Gaussian,
        lorentzian_fraction: 0.0,
        ..EnsembleConfig::default()
    };
    let phases = default_phase_grid(16);

    println!("theta/pi,delta_phi_rad,sigma_rad,contrast");
    for k in 1..=9 {
        let scan = run_oat(&p, &cfg, k as f64 * PI / 10.0, 100e-6, &phases)?;
        println!("{:.1},{:+.5},{:.1e},{:.6}", k as f64 / 10.0, scan.delta_phi, scan.delta_phi_sigma, scan.contrast);
    }

    let taus = vec![50e-6, 100e-6, 150e-6, 200e-6];
    let scan = oat_rate_scan(&p, &cfg, FRAC_PI_4, &ScanAxis::Tau { values: taus }, &phases)?;
    println!(
        "chi_n from slope: {:.2} ± {:.2} Hz (rates: {:.2} Hz)",
        scan.rate,
        scan.rate_sigma,
        derive_rates(&p)?.chi_n
    );
    Ok(())
}
