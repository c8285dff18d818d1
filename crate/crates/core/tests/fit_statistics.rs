use bragg_core::fitting::linspace;
use bragg_core::{fit_aspect_ratio, synth_scan, AspectRatio, FitOptions, ProbeConfig};

const NM: f64 = 1e-9;

fn base() -> ProbeConfig {
    ProbeConfig::at_resonance(780.0 * NM, 811.0 * NM).unwrap()
}

#[test]
fn noisy_fits_recover_zeta_within_twenty_percent() {
    let zeta = AspectRatio::new(0.01).unwrap();
    let noise = 0.01f64.to_radians();
    let mut within = 0;
    let mut pulls = Vec::new();
    for seed in 0..100 {
        let scan = synth_scan(&base(), zeta, (810.0 * NM, 813.0 * NM), 31, noise, seed).unwrap();
        let fit = fit_aspect_ratio(&scan, &FitOptions::default()).unwrap();
        if (fit.zeta_hat / 0.01 - 1.0).abs() <= 0.2 {
            within += 1;
        }
        pulls.push((fit.zeta_hat - 0.01) / fit.zeta_stderr);
    }
    assert!(within >= 95, "{within} of 100 within 20%");
    // absolute uncertainties: pulls should have roughly unit spread
    let n = pulls.len() as f64;
    let mean = pulls.iter().sum::<f64>() / n;
    let sd = (pulls.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    assert!(sd > 0.7 && sd < 1.4, "pull sd {sd}");
}

#[test]
fn stderr_shrinks_as_inverse_sqrt_of_points() {
    let zeta = AspectRatio::new(0.01).unwrap();
    let noise = 0.01f64.to_radians();
    let stderr = |n: usize| {
        let scan = synth_scan(&base(), zeta, (810.0 * NM, 813.0 * NM), n, noise, 7).unwrap();
        fit_aspect_ratio(&scan, &FitOptions::default())
            .unwrap()
            .zeta_stderr
    };
    let (s1, s4, s16) = (stderr(16), stderr(64), stderr(256));
    for ratio in [s1 / s4, s4 / s16] {
        assert!((ratio / 2.0 - 1.0).abs() < 0.3, "ratio {ratio}");
    }
}

#[test]
fn unweighted_fit_rescales_by_residuals() {
    let zeta = AspectRatio::new(0.05).unwrap();
    let scan = synth_scan(
        &base(),
        zeta,
        (810.0 * NM, 813.0 * NM),
        31,
        0.02f64.to_radians(),
        3,
    )
    .unwrap();
    let stripped: Vec<_> = scan
        .records()
        .iter()
        .map(|r| bragg_core::ScanRecord { sigma: None, ..*r })
        .collect();
    let plain = bragg_core::AngleScan::new(stripped, scan.beta_i(), scan.lambda_brg()).unwrap();
    let a = fit_aspect_ratio(&scan, &FitOptions::default()).unwrap();
    let b = fit_aspect_ratio(&plain, &FitOptions::default()).unwrap();
    // equal sigmas: same estimate, error scaled by sqrt(chi2 / (n - 1))
    assert!((a.zeta_hat / b.zeta_hat - 1.0).abs() < 1e-6);
    let scale = (a.chi_square / 30.0).sqrt();
    assert!((b.zeta_stderr / (a.zeta_stderr * scale) - 1.0).abs() < 1e-3);
}

#[test]
fn round_trip_across_log_spaced_zeta() {
    for u in linspace(-4.0, 2.0, 13) {
        let z = 10f64.powf(u);
        let scan = synth_scan(
            &base(),
            AspectRatio::new(z).unwrap(),
            (810.0 * NM, 813.0 * NM),
            31,
            0.0,
            0,
        )
        .unwrap();
        let fit = fit_aspect_ratio(&scan, &FitOptions::default()).unwrap();
        assert!(
            (fit.zeta_hat / z - 1.0).abs() < 1e-4,
            "zeta {z}: {}",
            fit.zeta_hat
        );
    }
}
