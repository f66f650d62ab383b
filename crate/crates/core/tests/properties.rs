//! Invariants checked over randomized inputs.

use std::f64::consts::{PI, TAU};

use cavspin::dynamics::{evolve_collective, BlochState, IntegratorOptions};
use cavspin::fit::{fit_sech2_burst, sech2_burst, wrap_phase};
use cavspin::io::{read_table, Table};
use cavspin::{free_dephasing_coherence, sample_offsets, Lineshape, SamplingStrategy};
use proptest::prelude::*;

fn lineshape() -> impl Strategy<Value = Lineshape> {
    (1.0..1e5f64, 0.0..=1.0f64).prop_map(|(fwhm, eta)| Lineshape::pseudo_voigt(fwhm, eta))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn quantile_offsets_are_sorted_and_symmetric(shape in lineshape(), n in 1usize..400) {
        let set = sample_offsets(&shape, n, SamplingStrategy::Quantile).unwrap();
        prop_assert_eq!(set.len(), n);
        prop_assert!(set.offsets.windows(2).all(|w| w[0] <= w[1]));
        let mean = set.offsets.iter().sum::<f64>() / n as f64;
        prop_assert!(mean.abs() <= 1e-9 * shape.fwhm * n as f64);
    }

    #[test]
    fn random_offsets_are_reproducible(shape in lineshape(), seed in any::<u64>()) {
        let a = sample_offsets(&shape, 64, SamplingStrategy::Random(seed)).unwrap();
        let b = sample_offsets(&shape, 64, SamplingStrategy::Random(seed)).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn free_dephasing_decays_from_one(shape in lineshape(), t in 0.0..1e-2f64, dt in 1e-7..1e-3f64) {
        prop_assert!((free_dephasing_coherence(&shape, 0.0) - 1.0).abs() < 1e-12);
        let c = free_dephasing_coherence(&shape, t);
        prop_assert!((0.0..=1.0).contains(&c));
        prop_assert!(free_dephasing_coherence(&shape, t + dt) <= c + 1e-15);
    }

    #[test]
    fn rotations_preserve_length(theta in 0.0..PI, az in -PI..PI, axis in -PI..PI, angle in -TAU..TAU) {
        let s = BlochState::south_pole().rotated(az, theta).rotated(axis, angle);
        prop_assert!((s.length() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn wrapped_phase_lies_in_half_open_interval(x in -1e3..1e3f64) {
        let w = wrap_phase(x);
        prop_assert!(w > -PI && w <= PI);
        prop_assert!(((x - w) / TAU - ((x - w) / TAU).round()).abs() < 1e-9);
    }

    #[test]
    fn tables_round_trip(values in prop::collection::vec(-1e300..1e300f64, 0..50)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let squares: Vec<f64> = values.iter().map(|v| v.abs().sqrt()).collect();
        let t = Table::new("prop").column("x", "Hz", values).column("y", "1", squares);
        t.write(&path).unwrap();
        prop_assert_eq!(read_table(&path).unwrap(), t);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn pure_superradiance_keeps_the_bloch_vector_on_the_sphere(theta in 0.05..PI - 0.05) {
        let gamma_c = 1e5;
        let start = BlochState::south_pole().rotated(0.0, theta);
        let grid: Vec<f64> = (0..=50).map(|k| k as f64 * 2e-6).collect();
        let (end, _, _) = evolve_collective(&start, gamma_c, 0.0, 1e-4, &IntegratorOptions::default(), &grid).unwrap();
        prop_assert!((end.length() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn burst_fit_is_shift_equivariant(shift in -5e-6..5e-6f64) {
        let (gamma_c, t_d) = (1e5, 8e-6);
        let t: Vec<f64> = (0..400).map(|k| k as f64 * 1e-7).collect();
        let y: Vec<f64> = t.iter().map(|t| sech2_burst(*t, gamma_c, t_d, 1.0)).collect();
        let shifted: Vec<f64> = t.iter().map(|t| t + shift).collect();
        let a = fit_sech2_burst(&t, &y, None).unwrap();
        let b = fit_sech2_burst(&shifted, &y, None).unwrap();
        prop_assert!((b.fit.params[1] - a.fit.params[1] - shift).abs() < 1e-10);
        prop_assert!((b.fit.params[0] / a.fit.params[0] - 1.0).abs() < 1e-8);
    }
}
