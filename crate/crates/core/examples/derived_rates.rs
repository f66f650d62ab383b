//! Coupling constants and the rates they imply in both regimes.

use cavspin::{derive_rates, n0_from_coupling, single_ion_coupling, PhysicalParams};

fn main() -> cavspin::Result<()> {
    // Magnetic-dipole coupling of one spin to a lumped-element resonator.
    let g = single_ion_coupling(1.08, 275e-9, 3.08385e9)?;
    println!("single-spin coupling g = {:.2} mHz", g * 1e3);

    let g_coll = 150e3;
    println!("spins for g_coll = {:.0} kHz: {:.3e}", g_coll / 1e3, n0_from_coupling(g_coll, g)?);

    for delta in [0.0, 2e6, 22e6] {
        let p = PhysicalParams::from_collective_coupling(g, g_coll, 660e3, delta)?;
        let r = derive_rates(&p)?;
        println!(
            "Δ = {:>5.1} MHz: chi_n = {:>10.3} Hz, gamma_c = {:>10.3} Hz, gap = {:>10.3} Hz",
            delta / 1e6,
            r.chi_n,
            r.gamma_c,
            r.gap
        );
    }
    Ok(())
}
