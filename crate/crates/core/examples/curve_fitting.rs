//! The fit families on synthetic data: single/double exponential model
//! selection, sinusoid phase and a power law.

use cavspin::fit::{fit_exponential_family, fit_power_law, fit_sinusoid};

fn main() -> cavspin::Result<()> {
    let t: Vec<f64> = (0..200).map(|k| k as f64 * 5e-6).collect();
    let single: Vec<f64> = t.iter().map(|t| (-t / 80e-6).exp()).collect();
    let double: Vec<f64> = t.iter().map(|t| 0.6 * (-t / 40e-6).exp() + 0.4 * (-t / 400e-6).exp()).collect();
    for (label, y) in [("single", &single), ("double", &double)] {
        let fit = fit_exponential_family(&t, y, true)?;
        println!(
            "{label}: selected {:?}, T2* = {:.3e} s, dominant time {:.3e} s",
            fit.selected,
            fit.t2_star,
            fit.dominant_time.unwrap_or(fit.t2_star)
        );
    }

    let phi: Vec<f64> = (0..16).map(|k| k as f64 * std::f64::consts::TAU / 16.0).collect();
    let fringe: Vec<f64> = phi.iter().map(|p| 0.5 + 0.45 * (p - 0.3).cos()).collect();
    let sine = fit_sinusoid(&phi, &fringe)?;
    println!("sinusoid: {:?} = {:?}", sine.names, sine.params);

    let n: Vec<f64> = (0..6).map(|k| 1e13 * 10f64.powf(k as f64 / 5.0)).collect();
    let peak: Vec<f64> = n.iter().map(|n| 3e-9 * n * n).collect();
    let law = fit_power_law(&n, &peak)?;
    println!("power law exponent {:.4}", law.params[1]);
    Ok(())
}
