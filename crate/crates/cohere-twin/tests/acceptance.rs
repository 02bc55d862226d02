//! Acceptance gate. Each test prints exactly one PASS/FAIL line with the
//! measured numbers so a log scrape shows the whole verdict table.

use cohere_twin::analysis::{
    aggregate_reduced, fit_circ_coherence, fit_gaussian_coherence, visibility_sweep,
    AggregateOptions, FitModel, ShearCoordinate, VisibilityPoint,
};
use cohere_twin::geometry::{min_collimation_radius, InstrumentConfig};
use cohere_twin::quantum::{coherence_length_delta, g_spatial, QuantumSourceSpec};
use cohere_twin::scan::{
    centered_tau_grid, run_scan, CountingNoise, NoiseSpec, Records, ScanMode, ScanPlan, SourceSpec,
};
use cohere_twin::specfun::bessel_j1;
use cohere_twin::thermal::{
    mu_circ, mu_circ_reduced, temporal_coherence, SpectralBaseline, ThermalSourceSpec,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

fn verdict(name: &str, pass: bool, detail: &str) {
    println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "{name}: {detail}");
}

/// Wide-walkoff instrument so shears up to ~1 mm stay in the small-angle
/// regime (the 4.18 mm crystal caps out near 417 um).
fn instrument_10mm() -> InstrumentConfig {
    InstrumentConfig {
        walkoff_d_m: 10e-3,
        focal_f_m: 0.5,
        aperture_phi_m: 2e-3,
        detector_distance_d_m: 0.1,
        alpha_rad: 0.0,
        gamma_rad: 0.0,
    }
}

fn thermal_source() -> ThermalSourceSpec {
    ThermalSourceSpec {
        lambda0_m: 680e-9,
        fwhm_dlambda_m: 150e-9,
        source_radius_r_m: 0.5e-3,
        focal_f_m: 0.5,
        baseline: SpectralBaseline::GaussianWavelength,
    }
}

#[test]
fn coherence_length_formula() {
    let d1 = coherence_length_delta(&QuantumSourceSpec::degenerate(405e-9, 560e-6, 3e-3, 0.5));
    let d2 = coherence_length_delta(&QuantumSourceSpec::degenerate(405e-9, 840e-6, 3e-3, 0.5));
    // 3 significant figures: 230 um and 153 um (exact values 230.2 / 153.5)
    let pass = (d1 - 230e-6).abs() < 0.5e-6 && (d2 - 153.5e-6).abs() < 0.5e-6;
    verdict(
        "coherence-length formula",
        pass,
        &format!("delta(560 um) = {:.1} um, delta(840 um) = {:.1} um", d1 * 1e6, d2 * 1e6),
    );
}

#[test]
fn quantum_round_trip() {
    let lambda0 = 810e-9;
    let focal_f = 0.5;
    let mut worst = (0usize, 0.0f64);
    let mut all_pass = true;
    let mut detail = String::new();
    for &delta_target in &[150e-6, 230e-6, 250e-6] {
        let waist = lambda0 * focal_f / (std::f64::consts::PI * delta_target);
        let source = QuantumSourceSpec::degenerate(405e-9, waist, 3e-3, focal_f);
        let mut plan = ScanPlan {
            mode: ScanMode::SpdcCoincidence,
            delta_y_values_m: (0..17).map(|i| i as f64 * 50e-6).collect(),
            tau_grid_s: Some(centered_tau_grid(lambda0, 2.0, 20)),
            tau_fixed_s: None,
            wavelength_grid_m: None,
            spectrometer_resolution_fwhm_m: None,
            noise: NoiseSpec {
                counting: CountingNoise::Binomial,
                spectrometer_sigma: 0.0,
                rate_scale: 1e4,
            },
            seed: 0,
            instrument: instrument_10mm(),
            source: SourceSpec::Quantum(source),
        };
        let mut hits = 0usize;
        for seed in 0..100u64 {
            plan.seed = seed;
            let ds = run_scan(&plan).expect("plan is valid");
            let points = visibility_sweep(&ds).expect("sweep extraction");
            let fit = fit_gaussian_coherence(&points).expect("fit");
            let rel = (fit.params["delta_m"] / delta_target - 1.0).abs();
            if rel <= 0.03 {
                hits += 1;
            }
            if rel > worst.1 {
                worst = (seed as usize, rel);
            }
        }
        all_pass &= hits >= 95;
        detail.push_str(&format!("delta={}um: {hits}/100 within 3%; ", delta_target * 1e6));
    }
    detail.push_str(&format!("worst rel err {:.4}", worst.1));
    verdict("quantum round trip", all_pass, &detail);
}

#[test]
fn classical_round_trip_interferograms() {
    let t = thermal_source();
    let mut plan = ScanPlan {
        mode: ScanMode::ThermalInterferogram,
        delta_y_values_m: (1..=16).map(|i| i as f64 * 30e-6).collect(),
        tau_grid_s: Some(centered_tau_grid(t.lambda0_m, 6.0, 16)),
        tau_fixed_s: None,
        wavelength_grid_m: None,
        spectrometer_resolution_fwhm_m: None,
        noise: NoiseSpec {
            counting: CountingNoise::Binomial,
            spectrometer_sigma: 0.0,
            rate_scale: 4e6,
        },
        seed: 0,
        instrument: instrument_10mm(),
        source: SourceSpec::Thermal(t.clone()),
    };
    let mut diameters = Vec::new();
    let mut pass = true;
    for seed in [11u64, 23, 47] {
        plan.seed = seed;
        let ds = run_scan(&plan).expect("plan is valid");
        let points = visibility_sweep(&ds).expect("sweep extraction");
        let fit = fit_circ_coherence(
            &points,
            t.focal_f_m,
            ShearCoordinate::Physical { lambda0_m: t.lambda0_m },
        )
        .expect("fit");
        let diameter = 2.0 * fit.params["radius_r_m"];
        pass &= (diameter / 1.0e-3 - 1.0).abs() <= 0.01;
        diameters.push(format!("{:.4} mm", diameter * 1e3));
    }
    verdict(
        "classical round trip (interferograms)",
        pass,
        &format!("fitted diameters {} vs 1.0000 mm truth (1% gate)", diameters.join(", ")),
    );
}

#[test]
fn classical_round_trip_spectra() {
    let t = thermal_source();
    let grid: Vec<f64> = (0..=1800).map(|i| 580e-9 + i as f64 * 0.1e-9).collect();
    let mut plan = ScanPlan {
        mode: ScanMode::ThermalSpectrum,
        delta_y_values_m: (1..=7).map(|i| i as f64 * 100e-6).collect(),
        tau_grid_s: None,
        tau_fixed_s: Some(93e-15),
        wavelength_grid_m: Some(grid),
        spectrometer_resolution_fwhm_m: None,
        noise: NoiseSpec {
            counting: CountingNoise::None,
            spectrometer_sigma: 0.005,
            rate_scale: 1.0,
        },
        seed: 29,
        instrument: instrument_10mm(),
        source: SourceSpec::Thermal(t.clone()),
    };
    let fit_radius = |plan: &ScanPlan| {
        let ds = run_scan(plan).expect("plan is valid");
        let Records::Spectra(traces) = &ds.records else { unreachable!() };
        let points = aggregate_reduced(traces, &t, &AggregateOptions::default()).expect("aggregate");
        fit_circ_coherence(&points, t.focal_f_m, ShearCoordinate::Reduced).expect("fit")
    };
    let clean = fit_radius(&plan);
    plan.noise.spectrometer_sigma = 0.05; // 10x worse signal-to-noise
    let noisy = fit_radius(&plan);
    let r_clean = clean.params["radius_r_m"];
    let var_clean = clean.covariance[1][1];
    let var_noisy = noisy.covariance[1][1];
    let inflation = var_noisy / var_clean;
    let pass = (r_clean / 0.5e-3 - 1.0).abs() <= 0.02 && inflation >= 3.0;
    verdict(
        "classical round trip (spectra)",
        pass,
        &format!(
            "r = {:.2} um at high signal (2% gate); variance inflation x{:.0} at 10x noise (>= 3 gate)",
            r_clean * 1e6,
            inflation
        ),
    );
}

#[test]
fn collimation_bound() {
    let r_min = min_collimation_radius(1e-3, 2e-3, 700e-9, 100e-3);
    let pass = (2.70..=2.80).contains(&r_min);
    verdict("collimation bound", pass, &format!("R_min = {r_min:.4} m in [2.70, 2.80]"));
}

#[test]
fn oracle_suites() {
    // Bessel J1 against the extended-precision series
    let mut worst_j1 = 0.0f64;
    let n = 4001;
    for i in 0..n {
        let z = -50.0 + 100.0 * i as f64 / (n - 1) as f64;
        let diff = (bessel_j1(z).unwrap() - twin_oracles::bessel_j1_series(z)).abs();
        worst_j1 = worst_j1.max(diff);
    }
    // closed-form spatial correlation against adaptive quadrature
    let source = QuantumSourceSpec::degenerate(405e-9, 560e-6, 3e-3, 0.5);
    let delta = coherence_length_delta(&source);
    let mut worst_g = 0.0f64;
    for i in 0..=50 {
        let dy = 5.0 * delta * i as f64 / 50.0;
        let closed = g_spatial(dy, &source);
        let quad = twin_oracles::g_spatial_quadrature(dy, 560e-6, 810e-9, 0.5);
        worst_g = worst_g.max((closed - quad).abs());
    }
    // numeric Wiener-Khinchin transform against the analytic Gaussian
    let t = ThermalSourceSpec {
        baseline: SpectralBaseline::GaussianFrequency,
        ..thermal_source()
    };
    let mut worst_mu = 0.0f64;
    for i in 0..=60 {
        let tau = i as f64 * 1e-15;
        let numeric = temporal_coherence(tau, &t);
        let analytic = twin_oracles::gaussian_transform_abs(t.sigma_nu(), tau);
        worst_mu = worst_mu.max((numeric - analytic).abs());
    }
    let pass = worst_j1 <= 1e-12 && worst_g <= 1e-9 && worst_mu <= 1e-6;
    verdict(
        "oracle suites",
        pass,
        &format!(
            "J1 max err {worst_j1:.2e} (1e-12 gate); g max err {worst_g:.2e} (1e-9 gate); mu_T max err {worst_mu:.2e} (1e-6 gate)"
        ),
    );
}

#[test]
fn estimator_gradient_checks() {
    fn check<M: FitModel>(model: &M, params: &[f64], x: f64) -> f64 {
        let p = M::N_PARAMS;
        let mut grad = vec![0.0; p];
        model.gradient(x, params, &mut grad);
        let mut worst = 0.0f64;
        for j in 0..p {
            // Richardson-extrapolated central difference: O(h^4) truncation
            let central = |h: f64| {
                let mut lo = params.to_vec();
                let mut hi = params.to_vec();
                lo[j] -= h;
                hi[j] += h;
                (model.eval(x, &hi) - model.eval(x, &lo)) / (2.0 * h)
            };
            let h = 1e-4 * params[j].abs().max(1e-6);
            let fd = (4.0 * central(0.5 * h) - central(h)) / 3.0;
            let denom = fd.abs().max(grad[j].abs()).max(1e-9);
            worst = worst.max((fd - grad[j]).abs() / denom);
        }
        worst
    }
    let mut rng = ChaCha12Rng::seed_from_u64(97);
    let gaussian = cohere_twin::analysis::GaussianCoherenceModel;
    let scale_k = 2.0 * std::f64::consts::PI / (0.5 * 680e-9);
    let circ = cohere_twin::analysis::CircCoherenceModel { scale_k };
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let x: f64 = rng.random_range(1e-6..6e-4);
        let pg = [rng.random_range(0.5..1.0), rng.random_range(1e-4..5e-4)];
        worst = worst.max(check(&gaussian, &pg, x));
        // keep the jinc argument in the instrument's working range
        let rc: f64 = rng.random_range(2e-4..1e-3);
        let z: f64 = rng.random_range(0.1..7.0);
        let xc = z / (scale_k * rc);
        let pc = [rng.random_range(0.5..1.0), rc];
        worst = worst.max(check(&circ, &pc, xc));
    }
    let pass = worst <= 1e-6;
    verdict(
        "estimator gradient checks",
        pass,
        &format!("max relative error {worst:.2e} over 100 random points per kernel (1e-6 gate)"),
    );
}

#[test]
fn model_visibility_at_small_shear() {
    // the measured 92.6% embeds instrumental loss outside the model; the
    // model value at (93 fs, 40 um) is asserted instead, and a uniform
    // visibility scale is shown not to move the fitted radius
    let t = thermal_source();
    let mu = mu_circ(40e-6, t.lambda0_m, &t);
    let mu_ok = (mu - 0.983).abs() < 0.001;

    let points = |scale: f64| -> Vec<VisibilityPoint> {
        (1..40)
            .map(|i| {
                let x = i as f64 * 20.0;
                VisibilityPoint {
                    x,
                    visibility: scale * mu_circ_reduced(x, &t).abs(),
                    uncertainty: 0.0,
                    phase_rad: 0.0,
                    over_unity: false,
                }
            })
            .collect()
    };
    let full = fit_circ_coherence(&points(1.0), t.focal_f_m, ShearCoordinate::Reduced).unwrap();
    let scaled = fit_circ_coherence(
        &points(0.926 / 0.983),
        t.focal_f_m,
        ShearCoordinate::Reduced,
    )
    .unwrap();
    let r_invariant =
        (full.params["radius_r_m"] / scaled.params["radius_r_m"] - 1.0).abs() < 1e-9;
    let v0_tracks = (scaled.params["scale_V0"] / full.params["scale_V0"] - 0.926 / 0.983).abs() < 1e-9;
    let pass = mu_ok && r_invariant && v0_tracks;
    verdict(
        "model visibility at small shear",
        pass,
        &format!(
            "mu(93 fs, 40 um) = {mu:.4} vs 0.983; radius invariant under visibility scaling: {r_invariant}"
        ),
    );
}

#[test]
fn end_to_end_determinism() {
    let bin = env!("CARGO_BIN_EXE_cohere-twin");
    let config = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/spdc_scan.json");
    let tmp = tempfile::tempdir().unwrap();
    let run = |tag: &str| {
        let base = tmp.path().join(tag).join("scan");
        let dir = base.parent().unwrap().to_path_buf();
        std::fs::create_dir_all(&dir).unwrap();
        for args in [
            vec!["simulate", "--config", config, "--out", base.to_str().unwrap()],
            vec![
                "analyze",
                "--data",
                base.to_str().unwrap(),
                "--out",
                dir.join("points.json").to_str().unwrap(),
            ],
            vec![
                "fit",
                "--data",
                base.to_str().unwrap(),
                "--model",
                "gaussian",
                "--out",
                dir.join("fit.json").to_str().unwrap(),
            ],
            vec![
                "report",
                "--data",
                base.to_str().unwrap(),
                "--out",
                dir.join("report.svg").to_str().unwrap(),
            ],
        ] {
            let status = std::process::Command::new(bin)
                .args(&args)
                .status()
                .expect("spawn cohere-twin");
            assert!(status.success(), "{args:?} failed");
        }
        dir
    };
    let a = run("a");
    let b = run("b");
    let mut pass = true;
    let mut checked = Vec::new();
    for name in ["scan.csv", "scan.json", "scan.manifest.json", "points.json", "fit.json", "report.svg"] {
        let fa = std::fs::read(a.join(name)).unwrap();
        let fb = std::fs::read(b.join(name)).unwrap();
        pass &= fa == fb;
        checked.push(name);
    }
    verdict(
        "end-to-end determinism",
        pass,
        &format!("byte-identical across two runs: {}", checked.join(", ")),
    );
}
