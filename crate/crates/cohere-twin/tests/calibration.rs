//! Statistical calibration of the fringe-visibility estimator against
//! shot-noise Monte Carlo: at a shear where the true spatial coherence is
//! 0.6, the estimate must land within +/-0.02 in at least 95% of trials.

use cohere_twin::analysis::{visibility_from_interferogram, InterferogramOptions};
use cohere_twin::quantum::{
    coherence_length_delta, simulate_coincidences, QuantumSourceSpec,
};
use cohere_twin::scan::centered_tau_grid;

#[test]
fn visibility_estimator_is_calibrated_at_v_0_6() {
    let spec = QuantumSourceSpec::degenerate(405e-9, 560e-6, 3e-3, 0.5);
    let delta = coherence_length_delta(&spec);
    // g(dy) = exp(-dy^2 / 2 delta^2) = 0.6
    let dy = delta * (-2.0 * 0.6f64.ln()).sqrt();
    let tau_grid = centered_tau_grid(810e-9, 2.0, 20);
    let pairs_per_point = 10_000;

    let trials: usize = if cfg!(debug_assertions) { 120 } else { 500 };
    let target = 0.6;
    let mut hits = 0usize;
    let mut worst = 0.0f64;
    for seed in 0..trials as u64 {
        let records =
            simulate_coincidences(&tau_grid, dy, &spec, pairs_per_point, 1000 + seed).unwrap();
        let samples: Vec<(f64, f64)> = records
            .iter()
            .map(|r| (r.tau_s, r.counts / r.window_pairs as f64))
            .collect();
        let est = visibility_from_interferogram(
            &samples,
            spec.omega0(),
            &InterferogramOptions::default(),
        )
        .unwrap();
        let err = (est.visibility - target).abs();
        worst = worst.max(err);
        if err <= 0.02 {
            hits += 1;
        }
    }
    let needed = (trials * 95).div_ceil(100);
    assert!(
        hits >= needed,
        "only {hits}/{trials} trials within 0.02 of V=0.6 (worst error {worst:.4}), need {needed}"
    );
}
