use ael_core::{
    adjust, psi_profile_centered, solve_dual, AdjustmentPolicy, ArmaSpec, Error, NoiseKind, Order, Periodogram,
    PsiMatrix, TimeSeries,
};
use proptest::prelude::*;

fn series(len: usize, seed: u64) -> TimeSeries {
    ArmaSpec::arma11(0.4, 0.2, 1.0)
        .unwrap()
        .simulate(len, NoiseKind::StandardNormal, seed)
        .unwrap()
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn periodogram_scales_quadratically(seed in 0u64..10_000, c in -20.0f64..20.0, len in 8usize..200) {
        prop_assume!(c.abs() > 1e-3);
        let x = series(len, seed);
        let scaled = TimeSeries::new(x.values().iter().map(|v| c * v).collect()).unwrap();
        let a = Periodogram::compute(&x);
        let b = Periodogram::compute(&scaled);
        for (i, j) in a.ords().iter().zip(b.ords()) {
            prop_assert!(rel_close(c * c * i, *j, 1e-10));
        }
    }

    #[test]
    fn periodogram_ignores_shifts(seed in 0u64..10_000, shift in -1e3f64..1e3, len in 8usize..200) {
        let x = series(len, seed);
        let shifted = TimeSeries::new(x.values().iter().map(|v| v + shift).collect()).unwrap();
        let a = Periodogram::compute(&x);
        let b = Periodogram::compute(&shifted);
        let scale = a.ords().iter().cloned().fold(0.0, f64::max);
        for (i, j) in a.ords().iter().zip(b.ords()) {
            prop_assert!((i - j).abs() <= 1e-9 * (1.0 + scale));
        }
    }

    #[test]
    fn stat_is_permutation_invariant(seed in 0u64..10_000, rot in 1usize..30) {
        let pg = Periodogram::compute(&series(97, seed));
        let psi = psi_profile_centered(&pg, Order::new(1, 1), &[0.3, 0.1]).unwrap();
        let rows: Vec<Vec<f64>> = psi.rows().map(<[f64]>::to_vec).collect();
        let mut permuted = rows.clone();
        permuted.rotate_left(rot % rows.len());
        permuted.reverse();
        let a = solve_dual(&psi);
        let b = solve_dual(&PsiMatrix::from_rows(&permuted).unwrap());
        match (a, b) {
            (Ok(a), Ok(b)) => prop_assert!(rel_close(a.stat, b.stat, 1e-8), "{} vs {}", a.stat, b.stat),
            (Err(Error::NoSolution), Err(Error::NoSolution)) => {}
            (a, b) => prop_assert!(false, "{a:?} vs {b:?}"),
        }
    }

    #[test]
    fn adjusted_stat_never_exceeds_plain(seed in 0u64..10_000, phi in -0.8f64..0.8, theta in -0.8f64..0.8) {
        let pg = Periodogram::compute(&series(61, seed));
        let psi = psi_profile_centered(&pg, Order::new(1, 1), &[phi, theta]).unwrap();
        let adjusted = solve_dual(&adjust(&psi, AdjustmentPolicy::MaxOneHalfLog).unwrap()).unwrap();
        prop_assert!(adjusted.stat.is_finite());
        if let Ok(plain) = solve_dual(&psi) {
            prop_assert!(adjusted.stat <= plain.stat + 1e-8 * (1.0 + plain.stat));
        }
    }

    #[test]
    fn spectral_density_integrates_to_variance(phi in -0.9f64..0.9, theta in -0.9f64..0.9, s2 in 0.1f64..5.0) {
        let spec = ArmaSpec::arma11(phi, theta, s2).unwrap();
        let n = 4096;
        let h = 2.0 * std::f64::consts::PI / n as f64;
        let integral: f64 = (0..n).map(|j| spec.spectral_density(-std::f64::consts::PI + (j as f64 + 0.5) * h)).sum::<f64>() * h;
        prop_assert!(rel_close(integral, spec.process_variance(), 1e-6), "{integral} vs {}", spec.process_variance());
    }

    #[test]
    fn log_spectral_gradient_matches_differences(
        phi in -0.85f64..0.85,
        theta in -0.85f64..0.85,
        s2 in 0.2f64..4.0,
        omega in 0.01f64..3.13,
    ) {
        let spec = ArmaSpec::arma11(phi, theta, s2).unwrap();
        let grad = spec.log_spectral_gradient(omega, false);
        let base = [phi, theta, s2];
        let h = 1e-6;
        for (i, g) in grad.iter().enumerate() {
            let mut up = base;
            let mut down = base;
            up[i] += h;
            down[i] -= h;
            let f = |b: [f64; 3]| ArmaSpec::arma11(b[0], b[1], b[2]).unwrap().spectral_density(omega).ln();
            let fd = (f(up) - f(down)) / (2.0 * h);
            prop_assert!((fd - g).abs() <= 1e-5 * (1.0 + g.abs()), "component {i}: {fd} vs {g}");
        }
    }
}
