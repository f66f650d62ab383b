//! A hand-built Hahn echo executed on an inhomogeneous ensemble.

use std::f64::consts::{FRAC_PI_2, PI};

use cavspin::dynamics::{BlochState, EnsembleOptions, EnsembleState, IntegratorOptions};
use cavspin::experiments::{Observable, PulseSequence};
use cavspin::{derive_rates, sample_offsets, Lineshape, PhysicalParams, SamplingStrategy};

fn main() -> cavspin::Result<()> {
    let mut p = PhysicalParams::from_collective_coupling(0.015, 150e3, 660e3, 22e6)?;
    p.gamma_inh = 5e3;
    let shape = Lineshape::lorentzian(p.gamma_inh);
    let offsets = sample_offsets(&shape, 2000, SamplingStrategy::Quantile)?;
    let mut state = EnsembleState::uniform(offsets, p.n0, BlochState::south_pole())?;

    let tau = 100e-6;
    let seq = PulseSequence::new()
        .rotate(0.0, FRAC_PI_2)
        .record(&[Observable::Coherence])
        .evolve(tau)
        .record(&[Observable::Coherence])
        .rotate(0.0, PI)
        .evolve(tau)
        .record(&[Observable::Coherence, Observable::SZ]);
    let (records, stats) = seq.execute(
        &mut state,
        &derive_rates(&p)?,
        p.gamma_2,
        &IntegratorOptions::default(),
        &EnsembleOptions::for_lineshape(&shape),
    )?;
    for r in &records {
        let values: Vec<String> = r.observables.iter().map(|o| format!("{o:?} = {:.5}", r.value(*o))).collect();
        println!("t = {:>8.2e} s: {}", r.time, values.join(", "));
    }
    println!("{} accepted steps", stats.accepted);
    Ok(())
}
