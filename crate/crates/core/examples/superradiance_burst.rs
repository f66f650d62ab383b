//! Superradiant emission from a partially inverted ensemble and the
//! sech² fit that recovers the collective rate and burst delay.

use std::f64::consts::{PI, TAU};

use cavspin::experiments::{burst_delay, run_superradiance, SuperradianceOptions};
use cavspin::fit::fit_sech2_burst;
use cavspin::{derive_rates, PhysicalParams};

fn main() -> cavspin::Result<()> {
    let p = PhysicalParams {
        g: 0.015,
        kappa: 660e3,
        delta: 0.0,
        gamma_inh: 0.0,
        gamma_2: 0.0,
        n0: 1e14,
        kappa_out: 330e3,
    };
    let gamma_c = derive_rates(&p)?.gamma_c;
    let lifetime = 4.0 / (TAU * gamma_c);
    println!("theta/pi,t_d_expected_s,t_d_fit_s,gamma_c_fit_hz,peak_intensity_per_s");
    for k in [0.25, 0.5, 0.75, 0.9] {
        let theta = k * PI;
        let t_max = burst_delay(gamma_c, theta).max(0.0) + 10.0 * lifetime;
        let run = run_superradiance(&p, theta, t_max, &SuperradianceOptions::default())?;
        let fit = fit_sech2_burst(&run.intensity.times, &run.intensity.values, Some(p.n0))?;
        println!(
            "{k},{:.4e},{:.4e},{:.3},{:.4e}",
            burst_delay(gamma_c, theta),
            fit.fit.params[1],
            fit.fit.params[0],
            run.peak_intensity
        );
    }
    println!("gamma_c from rates: {gamma_c:.3} Hz");
    Ok(())
}
