//! Forward model of the SPDC twin-photon source.
//!
//! The pump's Gaussian angular spectrum, mapped through the collimation
//! lens, gives a Gaussian spatial correlation g(delta_y) between signal
//! and idler; the coincidence rate under delay tau and shear delta_y is
//! P = 1/2 + (1/2) g(delta_y) cos(omega0 tau). The phase-matching sinc
//! is taken as unity (broad compared to the pump spectrum); the crystal
//! length is carried only so a future extension can restore it.

use crate::error::ModelError;
use crate::scan::rng_for_point;
use crate::SPEED_OF_LIGHT;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantumSourceSpec {
    /// Pump wavelength, meters.
    pub pump_wavelength_m: f64,
    /// Pump beam waist in the crystal, meters.
    pub pump_waist_w_m: f64,
    /// Nonlinear crystal length, meters (unused while the phase-matching
    /// factor is unity).
    #[serde(rename = "crystal_length_L_m")]
    pub crystal_length_l_m: f64,
    /// Degenerate down-converted wavelength, meters; must be twice the
    /// pump wavelength.
    pub downconv_wavelength_lambda0_m: f64,
    /// Collimation lens focal length, meters.
    pub focal_f_m: f64,
}

impl QuantumSourceSpec {
    /// Degenerate type-I source: down-converted photons at 2 * lambda_p.
    pub fn degenerate(pump_wavelength_m: f64, pump_waist_w_m: f64, crystal_length_l_m: f64, focal_f_m: f64) -> Self {
        Self {
            pump_wavelength_m,
            pump_waist_w_m,
            crystal_length_l_m,
            downconv_wavelength_lambda0_m: 2.0 * pump_wavelength_m,
            focal_f_m,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.pump_wavelength_m > 0.0 && self.pump_waist_w_m > 0.0 && self.focal_f_m > 0.0) {
            return Err(ModelError::InvalidSpec(
                "pump wavelength, waist and focal length must be positive".into(),
            ));
        }
        let expected = 2.0 * self.pump_wavelength_m;
        if (self.downconv_wavelength_lambda0_m - expected).abs() > 1e-9 * expected {
            return Err(ModelError::InvalidSpec(format!(
                "degenerate SPDC requires lambda0 = 2 lambda_p ({} != {})",
                self.downconv_wavelength_lambda0_m, expected
            )));
        }
        Ok(())
    }

    /// Central angular frequency of the down-converted light.
    pub fn omega0(&self) -> f64 {
        2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / self.downconv_wavelength_lambda0_m
    }
}

/// Spatial coherence length delta = lambda0 f / (pi w).
pub fn coherence_length_delta(spec: &QuantumSourceSpec) -> f64 {
    spec.downconv_wavelength_lambda0_m * spec.focal_f_m / (std::f64::consts::PI * spec.pump_waist_w_m)
}

/// Normalized spatial correlation between the two replicas.
///
/// The overlap integral of the lens-mapped pump spectrum with its shifted
/// copy evaluates to a Gaussian in the shear:
/// g(delta_y) = exp(-delta_y^2 / (2 delta^2)), delta = lambda0 f / (pi w).
pub fn g_spatial(delta_y: f64, spec: &QuantumSourceSpec) -> f64 {
    let delta = coherence_length_delta(spec);
    let x = delta_y / delta;
    (-0.5 * x * x).exp()
}

/// Coincidence detection probability P = 1/2 + (1/2) g(delta_y) cos(omega0 tau).
pub fn coincidence_probability(tau: f64, delta_y: f64, spec: &QuantumSourceSpec) -> f64 {
    0.5 + 0.5 * g_spatial(delta_y, spec) * (spec.omega0() * tau).cos()
}

/// One coincidence-counting sample point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoincidenceRecord {
    pub tau_s: f64,
    pub delta_y_m: f64,
    /// Coincidence counts. Integer-valued when counting noise is on;
    /// the exact expectation P * window_pairs when noise is off.
    pub counts: f64,
    /// Pump-produced pair trials per point.
    pub window_pairs: u64,
}

/// Monte Carlo coincidence counting over a delay grid at fixed shear.
///
/// Counts per point are Binomial(pairs_per_point, P(tau, delta_y)); each
/// point draws from an RNG keyed by (seed, point index), so the output is
/// deterministic for a fixed seed regardless of evaluation order.
pub fn simulate_coincidences(
    tau_grid: &[f64],
    delta_y: f64,
    spec: &QuantumSourceSpec,
    pairs_per_point: u64,
    seed: u64,
) -> Result<Vec<CoincidenceRecord>, ModelError> {
    spec.validate()?;
    if pairs_per_point == 0 {
        return Err(ModelError::InvalidSpec("pairs_per_point must be >= 1".into()));
    }
    Ok(tau_grid
        .iter()
        .enumerate()
        .map(|(idx, &tau)| {
            let p = coincidence_probability(tau, delta_y, spec);
            let mut rng = rng_for_point(seed, idx as u64);
            let counts = Binomial::new(pairs_per_point, p.clamp(0.0, 1.0))
                .expect("probability in [0,1]")
                .sample(&mut rng);
            CoincidenceRecord {
                tau_s: tau,
                delta_y_m: delta_y,
                counts: counts as f64,
                window_pairs: pairs_per_point,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec_560() -> QuantumSourceSpec {
        QuantumSourceSpec::degenerate(405e-9, 560e-6, 3e-3, 0.5)
    }

    #[test]
    fn coherence_length_paper_values() {
        // 810 nm, f = 500 mm: w = 560 um -> 230 um; w = 840 um -> 153.5 um
        let d1 = coherence_length_delta(&spec_560());
        assert!((d1 - 230.2e-6).abs() < 0.5e-6);
        let d2 = coherence_length_delta(&QuantumSourceSpec::degenerate(405e-9, 840e-6, 3e-3, 0.5));
        assert!((d2 - 153.5e-6).abs() < 0.5e-6);
    }

    #[test]
    fn coherence_length_inverse_in_waist() {
        let d1 = coherence_length_delta(&spec_560());
        let d2 = coherence_length_delta(&QuantumSourceSpec::degenerate(405e-9, 1120e-6, 3e-3, 0.5));
        assert!((d1 - 2.0 * d2).abs() < 1e-18);
    }

    #[test]
    fn g_reference_points() {
        let s = spec_560();
        let delta = coherence_length_delta(&s);
        assert_eq!(g_spatial(0.0, &s), 1.0);
        assert!((g_spatial(delta, &s) - 0.6065306597126334).abs() < 1e-12);
        assert!((g_spatial(3.0 * delta, &s) - 0.011108996538242306).abs() < 1e-12);
    }

    #[test]
    fn g_even_and_monotone() {
        let s = spec_560();
        let mut prev = g_spatial(0.0, &s);
        for i in 1..100 {
            let dy = i as f64 * 10e-6;
            let g = g_spatial(dy, &s);
            assert!(g < prev);
            assert_eq!(g, g_spatial(-dy, &s));
            prev = g;
        }
    }

    #[test]
    fn probability_reference_points() {
        let s = spec_560();
        assert!((coincidence_probability(0.0, 0.0, &s) - 1.0).abs() < 1e-15);
        // omega0 tau = pi -> full destructive interference
        let tau_pi = std::f64::consts::PI / s.omega0();
        assert!(coincidence_probability(tau_pi, 0.0, &s).abs() < 1e-12);
        let delta = coherence_length_delta(&s);
        let p = coincidence_probability(0.0, delta, &s);
        assert!((p - 0.8032653298563167).abs() < 1e-12);
    }

    #[test]
    fn fringe_visibility_equals_g() {
        // max_tau P - min_tau P = g(delta_y) by construction
        let s = spec_560();
        for &dy in &[0.0, 100e-6, 300e-6] {
            let g = g_spatial(dy, &s);
            let pmax = 0.5 + 0.5 * g;
            let pmin = 0.5 - 0.5 * g;
            assert!((pmax - pmin - g).abs() < 1e-15);
        }
    }

    #[test]
    fn degenerate_binomials() {
        let s = spec_560();
        // P = 1 at tau = 0, delta_y = 0
        let recs = simulate_coincidences(&[0.0], 0.0, &s, 1000, 1).unwrap();
        assert_eq!(recs[0].counts, 1000.0);
        // P = 0 at omega0 tau = pi
        let tau_pi = std::f64::consts::PI / s.omega0();
        let recs = simulate_coincidences(&[tau_pi], 0.0, &s, 1000, 1).unwrap();
        assert_eq!(recs[0].counts, 0.0);
    }

    #[test]
    fn binomial_concentration_at_half() {
        // P = 0.5 at the quadrature delay: counts within 4 sigma of n/2
        let s = spec_560();
        let tau_quarter = 0.5 * std::f64::consts::PI / s.omega0();
        let n = 1_000_000u64;
        let recs = simulate_coincidences(&[tau_quarter], 0.0, &s, n, 42).unwrap();
        let sigma = (0.25 * n as f64).sqrt();
        assert!((recs[0].counts - 0.5 * n as f64).abs() < 4.0 * sigma);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let s = spec_560();
        let grid: Vec<f64> = (0..50).map(|i| i as f64 * 1e-16).collect();
        let a = simulate_coincidences(&grid, 40e-6, &s, 10_000, 7).unwrap();
        let b = simulate_coincidences(&grid, 40e-6, &s, 10_000, 7).unwrap();
        assert_eq!(a, b);
        let c = simulate_coincidences(&grid, 40e-6, &s, 10_000, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn empty_grid_and_bad_spec() {
        let s = spec_560();
        assert!(simulate_coincidences(&[], 0.0, &s, 10, 0).unwrap().is_empty());
        let mut bad = s;
        bad.downconv_wavelength_lambda0_m = 700e-9;
        assert!(bad.validate().is_err());
        assert!(simulate_coincidences(&[0.0], 0.0, &s, 0, 0).is_err());
    }
}
