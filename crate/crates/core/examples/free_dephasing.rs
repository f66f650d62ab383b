//! Non-interacting Ramsey decay for the three lineshapes against the
//! closed-form Fourier transforms.

use cavspin::experiments::{run_ramsey, EnsembleConfig, RamseyOptions};
use cavspin::lineshape::{free_dephasing_coherence, Lineshape, LineshapeKind};
use cavspin::PhysicalParams;

fn main() -> cavspin::Result<()> {
    let fwhm = 5e3;
    let p = PhysicalParams {
        g: 0.0,
        kappa: 660e3,
        delta: 22e6,
        gamma_inh: fwhm,
        gamma_2: 0.0,
        n0: 0.0,
        kappa_out: 330e3,
    };
    let taus: Vec<f64> = (0..=12).map(|k| k as f64 * 25e-6).collect();
    let opts = RamseyOptions {
        fit: false,
        ..RamseyOptions::default()
    };
    for (kind, eta, shape) in [
        (LineshapeKind::Gaussian, 0.0, Lineshape::gaussian(fwhm)),
        (LineshapeKind::Lorentzian, 1.0, Lineshape::lorentzian(fwhm)),
        (LineshapeKind::PseudoVoigt, 0.3, Lineshape::pseudo_voigt(fwhm, 0.3)),
    ] {
        let cfg = EnsembleConfig {
            n_groups: 20_000,
            kind,
            lorentzian_fraction: eta,
            ..EnsembleConfig::default()
        };
        let run = run_ramsey(&p, &cfg, &taus, &opts)?;
        let worst = taus
            .iter()
            .zip(&run.coherence.values)
            .map(|(t, c)| (c - free_dephasing_coherence(&shape, *t)).abs())
            .fold(0.0, f64::max);
        println!("{kind:?}: max deviation from closed form {worst:.2e}");
    }
    Ok(())
}
