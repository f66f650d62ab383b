//! Transmission spectrum of the dispersively coupled resonator and the fit
//! that extracts the collective coupling from a noisy trace.

use cavspin::experiments::{add_transmission_noise, fit_s21, s21_model, S21Data, S21Fixed, S21Guess};
use cavspin::PhysicalParams;

fn main() -> cavspin::Result<()> {
    let (g_coll, kappa, delta, f_c) = (350e3, 660e3, 2e6, 7e9);
    let f_s = f_c - delta;
    let mut p = PhysicalParams::from_collective_coupling(0.015, g_coll, kappa, delta)?;
    p.gamma_inh = 5e3;

    // Span centred on the dispersively shifted spin feature.
    let centre = f_s - g_coll * g_coll / delta;
    let freqs: Vec<f64> = (0..801).map(|k| centre - 100e3 + 250.0 * k as f64).collect();
    let clean = s21_model(&freqs, &p, f_c, f_s);
    let noisy = add_transmission_noise(&clean, 30.0, 1);

    let fixed = S21Fixed { kappa, delta, f_c };
    let guess = S21Guess {
        g_coll: 300e3,
        gamma_inh: 10e3,
        amplitude: 1.0,
        baseline: 0.0,
    };
    let fit = fit_s21(&freqs, &S21Data::Complex(noisy), &fixed, &guess)?;
    for (name, (v, s)) in fit.fit.names.iter().zip(fit.fit.params.iter().zip(&fit.fit.sigma)) {
        println!("{name:>10} = {v:.6e} ± {s:.1e}");
    }
    println!("feature found: {}", fit.feature_found);
    Ok(())
}
