//! Synthetic experiment generation: delta-y sweeps of coincidence scans,
//! spectra, or interferograms, with seeded noise and canonical CSV/JSON
//! persistence.

mod dataset;

pub use dataset::{load_dataset, save_dataset, InterferogramSample, Records, ScanDataset, FORMAT_VERSION};

use crate::error::ScanError;
use crate::geometry::{shear_to_gamma, InstrumentConfig};
use crate::quantum::{coincidence_probability, CoincidenceRecord, QuantumSourceSpec};
use crate::thermal::{
    convolve_resolution, interferogram_model_with_envelope, spectrum_model, temporal_coherence,
    SpectrumTrace, ThermalSourceSpec,
};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Binomial, Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanMode {
    SpdcCoincidence,
    ThermalSpectrum,
    ThermalInterferogram,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceSpec {
    Quantum(QuantumSourceSpec),
    Thermal(ThermalSourceSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountingNoise {
    None,
    Binomial,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub counting: CountingNoise,
    /// Relative standard deviation of multiplicative spectrometer noise.
    pub spectrometer_sigma: f64,
    /// Expected pairs (or photons) per sample point for counting modes.
    pub rate_scale: f64,
}

impl NoiseSpec {
    pub const NONE: NoiseSpec = NoiseSpec {
        counting: CountingNoise::None,
        spectrometer_sigma: 0.0,
        rate_scale: 1.0,
    };

    fn validate(&self) -> Result<(), ScanError> {
        if !(self.spectrometer_sigma >= 0.0) {
            return Err(ScanError::InvalidPlan(format!(
                "spectrometer_sigma must be >= 0, got {}",
                self.spectrometer_sigma
            )));
        }
        if self.counting == CountingNoise::Binomial && !(self.rate_scale >= 1.0) {
            return Err(ScanError::InvalidPlan(format!(
                "rate_scale must be >= 1 for binomial counting, got {}",
                self.rate_scale
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanPlan {
    pub mode: ScanMode,
    pub delta_y_values_m: Vec<f64>,
    /// Delay grid for coincidence and interferogram modes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_grid_s: Option<Vec<f64>>,
    /// Fixed delay for spectrum mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_fixed_s: Option<f64>,
    /// Wavelength grid for spectrum mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wavelength_grid_m: Option<Vec<f64>>,
    /// Optional Gaussian spectrometer-resolution FWHM applied to spectra.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrometer_resolution_fwhm_m: Option<f64>,
    pub noise: NoiseSpec,
    pub seed: u64,
    pub instrument: InstrumentConfig,
    pub source: SourceSpec,
}

impl ScanPlan {
    pub fn validate(&self) -> Result<(), ScanError> {
        self.noise.validate()?;
        if self.delta_y_values_m.is_empty() {
            return Err(ScanError::InvalidPlan("delta_y_values is empty".into()));
        }
        let offending: Vec<f64> = self
            .delta_y_values_m
            .iter()
            .copied()
            .filter(|&dy| shear_to_gamma(dy, self.instrument.walkoff_d_m).is_err())
            .collect();
        if !offending.is_empty() {
            return Err(ScanError::UnrealizableShear {
                walkoff_m: self.instrument.walkoff_d_m,
                offending,
            });
        }
        match self.mode {
            ScanMode::SpdcCoincidence => {
                let SourceSpec::Quantum(q) = &self.source else {
                    return Err(ScanError::InvalidPlan(
                        "spdc_coincidence mode needs a quantum source".into(),
                    ));
                };
                q.validate()?;
                if self.tau_grid_s.as_ref().map_or(true, |g| g.is_empty()) {
                    return Err(ScanError::InvalidPlan(
                        "spdc_coincidence mode needs a non-empty tau_grid".into(),
                    ));
                }
            }
            ScanMode::ThermalSpectrum => {
                let SourceSpec::Thermal(t) = &self.source else {
                    return Err(ScanError::InvalidPlan(
                        "thermal_spectrum mode needs a thermal source".into(),
                    ));
                };
                t.validate()?;
                if self.tau_fixed_s.is_none() {
                    return Err(ScanError::InvalidPlan(
                        "thermal_spectrum mode needs tau_fixed".into(),
                    ));
                }
                match &self.wavelength_grid_m {
                    Some(g) if g.len() >= 2 && g.windows(2).all(|w| w[1] > w[0]) => {}
                    _ => {
                        return Err(ScanError::InvalidPlan(
                            "thermal_spectrum mode needs a strictly increasing wavelength_grid"
                                .into(),
                        ))
                    }
                }
            }
            ScanMode::ThermalInterferogram => {
                let SourceSpec::Thermal(t) = &self.source else {
                    return Err(ScanError::InvalidPlan(
                        "thermal_interferogram mode needs a thermal source".into(),
                    ));
                };
                t.validate()?;
                if self.tau_grid_s.as_ref().map_or(true, |g| g.is_empty()) {
                    return Err(ScanError::InvalidPlan(
                        "thermal_interferogram mode needs a non-empty tau_grid".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-based RNG keyed by (seed, point index): bit-identical streams
/// regardless of the order points are generated in.
pub fn rng_for_point(seed: u64, index: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(splitmix64(splitmix64(seed).wrapping_add(index)))
}

/// Sub-seed for the point at position `index` along the shear sweep.
fn point_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index.wrapping_add(0xC0FF_EE00)))
}

/// Run a validated plan to completion. Deterministic for a fixed seed;
/// shear points are generated in parallel with sequential-identical output.
pub fn run_scan(plan: &ScanPlan) -> Result<ScanDataset, ScanError> {
    plan.validate()?;
    let records = match plan.mode {
        ScanMode::SpdcCoincidence => {
            let SourceSpec::Quantum(q) = &plan.source else {
                unreachable!()
            };
            let tau_grid = plan.tau_grid_s.as_ref().unwrap();
            let per_dy: Vec<Vec<CoincidenceRecord>> = plan
                .delta_y_values_m
                .par_iter()
                .enumerate()
                .map(|(i, &dy)| spdc_point(tau_grid, dy, q, &plan.noise, point_seed(plan.seed, i as u64)))
                .collect();
            Records::Coincidence(per_dy.into_iter().flatten().collect())
        }
        ScanMode::ThermalSpectrum => {
            let SourceSpec::Thermal(t) = &plan.source else {
                unreachable!()
            };
            let grid = plan.wavelength_grid_m.as_ref().unwrap();
            let tau = plan.tau_fixed_s.unwrap();
            let traces: Vec<SpectrumTrace> = plan
                .delta_y_values_m
                .par_iter()
                .enumerate()
                .map(|(i, &dy)| {
                    spectrum_point(
                        grid,
                        tau,
                        dy,
                        t,
                        plan.spectrometer_resolution_fwhm_m,
                        &plan.noise,
                        point_seed(plan.seed, i as u64),
                    )
                })
                .collect();
            Records::Spectra(traces)
        }
        ScanMode::ThermalInterferogram => {
            let SourceSpec::Thermal(t) = &plan.source else {
                unreachable!()
            };
            let tau_grid = plan.tau_grid_s.as_ref().unwrap();
            let mu_t: Vec<f64> = tau_grid
                .par_iter()
                .map(|&tau| temporal_coherence(tau, t))
                .collect();
            let per_dy: Vec<Vec<InterferogramSample>> = plan
                .delta_y_values_m
                .par_iter()
                .enumerate()
                .map(|(i, &dy)| {
                    interferogram_point(
                        tau_grid,
                        &mu_t,
                        dy,
                        t,
                        &plan.noise,
                        point_seed(plan.seed, i as u64),
                    )
                })
                .collect();
            Records::Interferograms(per_dy.into_iter().flatten().collect())
        }
    };
    Ok(ScanDataset {
        format_version: FORMAT_VERSION.to_string(),
        plan: plan.clone(),
        records,
    })
}

fn spdc_point(
    tau_grid: &[f64],
    delta_y: f64,
    spec: &QuantumSourceSpec,
    noise: &NoiseSpec,
    seed: u64,
) -> Vec<CoincidenceRecord> {
    let pairs = noise.rate_scale.round().max(1.0) as u64;
    tau_grid
        .iter()
        .enumerate()
        .map(|(j, &tau)| {
            let p = coincidence_probability(tau, delta_y, spec).clamp(0.0, 1.0);
            let counts = match noise.counting {
                CountingNoise::None => p * pairs as f64,
                CountingNoise::Binomial => {
                    let mut rng = rng_for_point(seed, j as u64);
                    Binomial::new(pairs, p).expect("probability in [0,1]").sample(&mut rng) as f64
                }
            };
            CoincidenceRecord {
                tau_s: tau,
                delta_y_m: delta_y,
                counts,
                window_pairs: pairs,
            }
        })
        .collect()
}

fn spectrum_point(
    grid: &[f64],
    tau: f64,
    delta_y: f64,
    spec: &ThermalSourceSpec,
    resolution_fwhm: Option<f64>,
    noise: &NoiseSpec,
    seed: u64,
) -> SpectrumTrace {
    let mut trace = spectrum_model(grid, tau, delta_y, spec);
    if let Some(fwhm) = resolution_fwhm {
        trace = convolve_resolution(&trace, fwhm);
    }
    if noise.spectrometer_sigma > 0.0 {
        let normal = Normal::new(0.0, noise.spectrometer_sigma).expect("sigma >= 0");
        let mut rng = rng_for_point(seed, 0);
        for v in &mut trace.intensity {
            *v = (*v * (1.0 + normal.sample(&mut rng))).max(0.0);
        }
    }
    trace
}

fn interferogram_point(
    tau_grid: &[f64],
    mu_t: &[f64],
    delta_y: f64,
    spec: &ThermalSourceSpec,
    noise: &NoiseSpec,
    seed: u64,
) -> Vec<InterferogramSample> {
    let curve = interferogram_model_with_envelope(tau_grid, mu_t, delta_y, 0.0, spec);
    curve
        .into_iter()
        .enumerate()
        .map(|(j, (tau, intensity))| {
            let value = match noise.counting {
                CountingNoise::None => intensity,
                CountingNoise::Binomial => {
                    // normalized intensity in [0,2] -> success probability I/2
                    let rate = noise.rate_scale.round().max(1.0) as u64;
                    let mut rng = rng_for_point(seed, j as u64);
                    let counts = Binomial::new(rate, (intensity / 2.0).clamp(0.0, 1.0))
                        .expect("probability in [0,1]")
                        .sample(&mut rng);
                    2.0 * counts as f64 / rate as f64
                }
            };
            InterferogramSample {
                delta_y_m: delta_y,
                tau_s: tau,
                intensity: value,
            }
        })
        .collect()
}

/// Uniform delay grid spanning +/- `periods` fringe periods around zero
/// with `samples_per_period` samples per period.
pub fn centered_tau_grid(lambda0: f64, periods: f64, samples_per_period: usize) -> Vec<f64> {
    let period = lambda0 / crate::SPEED_OF_LIGHT;
    let half = periods * period;
    let n = (2.0 * periods * samples_per_period as f64).round() as usize;
    (0..=n)
        .map(|i| -half + i as f64 * 2.0 * half / n as f64)
        .collect()
}
