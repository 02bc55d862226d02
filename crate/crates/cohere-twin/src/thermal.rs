//! Forward model of the classical thermal source.
//!
//! A circular incoherent source of radius r, collimated at focal length
//! f, has spatial coherence mu_circ = 2|J1(z)/z| with
//! z = 2 pi r delta_y / (f lambda). The spectrometer sees the baseline
//! spectrum modulated by mu(delta_y, lambda) cos(2 pi c tau / lambda);
//! the photon counter sees interferograms whose envelope factorizes into
//! temporal times spatial coherence.

use crate::error::ModelError;
use crate::specfun::jinc_finite;
use crate::SPEED_OF_LIGHT;
use serde::{Deserialize, Serialize};

/// Baseline spectral density S0. Gaussian profiles derive their center
/// and width from the source spec; a tabulated profile carries its own
/// sample points (linear interpolation, zero outside the table).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpectralBaseline {
    /// Gaussian in wavelength, FWHM = fwhm_dlambda.
    GaussianWavelength,
    /// Gaussian in optical frequency; its temporal coherence has an
    /// exact closed form, which the oracle tests exploit.
    GaussianFrequency,
    Tabulated {
        wavelengths_m: Vec<f64>,
        values: Vec<f64>,
    },
}

const FWHM_TO_SIGMA: f64 = 2.354820045030949; // 2 sqrt(2 ln 2)

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermalSourceSpec {
    /// Center wavelength, meters.
    pub lambda0_m: f64,
    /// Spectral FWHM, meters.
    pub fwhm_dlambda_m: f64,
    /// Radius of the circular source, meters.
    pub source_radius_r_m: f64,
    /// Collimation lens focal length, meters.
    pub focal_f_m: f64,
    pub baseline: SpectralBaseline,
}

impl ThermalSourceSpec {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.lambda0_m > 0.0) {
            return Err(ModelError::InvalidSpec("lambda0 must be positive".into()));
        }
        if !(self.fwhm_dlambda_m > 0.0 && self.fwhm_dlambda_m < self.lambda0_m) {
            return Err(ModelError::InvalidSpec(
                "spectral FWHM must lie in (0, lambda0)".into(),
            ));
        }
        if !(self.source_radius_r_m > 0.0 && self.focal_f_m > 0.0) {
            return Err(ModelError::InvalidSpec(
                "source radius and focal length must be positive".into(),
            ));
        }
        if let SpectralBaseline::Tabulated {
            wavelengths_m,
            values,
        } = &self.baseline
        {
            if wavelengths_m.len() != values.len() || wavelengths_m.len() < 2 {
                return Err(ModelError::InvalidSpec(
                    "tabulated baseline needs matching tables of length >= 2".into(),
                ));
            }
            if !wavelengths_m.windows(2).all(|w| w[1] > w[0]) {
                return Err(ModelError::InvalidSpec(
                    "tabulated wavelengths must be strictly increasing".into(),
                ));
            }
            if values.iter().any(|&v| !(v >= 0.0)) {
                return Err(ModelError::InvalidSpec(
                    "tabulated baseline values must be non-negative".into(),
                ));
            }
        }
        Ok(())
    }

    /// Longitudinal coherence length lambda0^2 / delta_lambda
    /// (about 3 um for the 680 nm / 150 nm source).
    pub fn longitudinal_coherence_length(&self) -> f64 {
        self.lambda0_m * self.lambda0_m / self.fwhm_dlambda_m
    }

    fn sigma_lambda(&self) -> f64 {
        self.fwhm_dlambda_m / FWHM_TO_SIGMA
    }

    /// Gaussian width in frequency corresponding to the spectral FWHM.
    pub fn sigma_nu(&self) -> f64 {
        SPEED_OF_LIGHT * self.fwhm_dlambda_m / (self.lambda0_m * self.lambda0_m) / FWHM_TO_SIGMA
    }

    /// Baseline spectral density per wavelength, S0(lambda).
    pub fn baseline_lambda(&self, lambda: f64) -> f64 {
        match &self.baseline {
            SpectralBaseline::GaussianWavelength => {
                let x = (lambda - self.lambda0_m) / self.sigma_lambda();
                (-0.5 * x * x).exp()
            }
            SpectralBaseline::GaussianFrequency => {
                // density conversion S_lambda = S_nu(c/lambda) c / lambda^2
                let nu = SPEED_OF_LIGHT / lambda;
                let nu0 = SPEED_OF_LIGHT / self.lambda0_m;
                let x = (nu - nu0) / self.sigma_nu();
                (-0.5 * x * x).exp() * SPEED_OF_LIGHT / (lambda * lambda)
            }
            SpectralBaseline::Tabulated {
                wavelengths_m,
                values,
            } => interp_linear(wavelengths_m, values, lambda),
        }
    }

    /// Baseline spectral density per frequency, S0(nu).
    fn baseline_nu(&self, nu: f64) -> f64 {
        match &self.baseline {
            SpectralBaseline::GaussianFrequency => {
                let nu0 = SPEED_OF_LIGHT / self.lambda0_m;
                let x = (nu - nu0) / self.sigma_nu();
                (-0.5 * x * x).exp()
            }
            _ => {
                let lambda = SPEED_OF_LIGHT / nu;
                self.baseline_lambda(lambda) * SPEED_OF_LIGHT / (nu * nu)
            }
        }
    }

    /// Wavelength support used for numeric integration.
    fn support_lambda(&self) -> (f64, f64) {
        match &self.baseline {
            SpectralBaseline::Tabulated { wavelengths_m, .. } => {
                (wavelengths_m[0], *wavelengths_m.last().unwrap())
            }
            SpectralBaseline::GaussianFrequency => {
                // symmetric in frequency so the truncated tails cancel
                let nu0 = SPEED_OF_LIGHT / self.lambda0_m;
                let half = (8.0 * self.sigma_nu()).min(0.9 * nu0);
                (SPEED_OF_LIGHT / (nu0 + half), SPEED_OF_LIGHT / (nu0 - half))
            }
            _ => {
                let lo = (self.lambda0_m - 7.0 * self.sigma_lambda()).max(self.lambda0_m / 10.0);
                let hi = self.lambda0_m + 7.0 * self.sigma_lambda();
                (lo, hi)
            }
        }
    }
}

fn interp_linear(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if x < xs[0] || x > *xs.last().unwrap() {
        return 0.0;
    }
    let idx = xs.partition_point(|&v| v < x).min(xs.len() - 1).max(1);
    let (x0, x1) = (xs[idx - 1], xs[idx]);
    let t = if x1 > x0 { (x - x0) / (x1 - x0) } else { 0.0 };
    ys[idx - 1] * (1.0 - t) + ys[idx] * t
}

/// Spatial coherence of the circular source at a given wavelength:
/// jinc(2 pi r delta_y / (f lambda)).
pub fn mu_circ(delta_y: f64, wavelength: f64, spec: &ThermalSourceSpec) -> f64 {
    let z = 2.0 * std::f64::consts::PI * spec.source_radius_r_m * delta_y
        / (spec.focal_f_m * wavelength);
    jinc_finite(z)
}

/// Spatial coherence in the reduced coordinate dy_tilde = delta_y / lambda:
/// jinc(2 pi r dy_tilde / f). Wavelength-independent by construction.
pub fn mu_circ_reduced(delta_y_reduced: f64, spec: &ThermalSourceSpec) -> f64 {
    let z = 2.0 * std::f64::consts::PI * spec.source_radius_r_m * delta_y_reduced / spec.focal_f_m;
    jinc_finite(z)
}

/// A measured (or simulated) spectrometer trace at fixed delay and shear.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumTrace {
    pub wavelength_grid_m: Vec<f64>,
    pub intensity: Vec<f64>,
    pub tau_s: f64,
    pub delta_y_m: f64,
}

impl SpectrumTrace {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.wavelength_grid_m.len() != self.intensity.len() {
            return Err(ModelError::InvalidSpec(
                "wavelength grid and intensity lengths differ".into(),
            ));
        }
        if !self.wavelength_grid_m.windows(2).all(|w| w[1] > w[0]) {
            return Err(ModelError::InvalidSpec(
                "wavelength grid must be strictly increasing".into(),
            ));
        }
        Ok(())
    }
}

/// Fringe-modulated spectrum S(lambda) = S0(lambda) [1 + mu(delta_y,
/// lambda) cos(2 pi c tau / lambda)], with mu evaluated per wavelength
/// sample. The per-sample mu is what makes the reduced-coordinate
/// analysis meaningful.
pub fn spectrum_model(
    wavelength_grid: &[f64],
    tau: f64,
    delta_y: f64,
    spec: &ThermalSourceSpec,
) -> SpectrumTrace {
    let intensity = wavelength_grid
        .iter()
        .map(|&lam| {
            let mu = mu_circ(delta_y, lam, spec);
            let phase = 2.0 * std::f64::consts::PI * SPEED_OF_LIGHT * tau / lam;
            spec.baseline_lambda(lam) * (1.0 + mu * phase.cos())
        })
        .collect();
    SpectrumTrace {
        wavelength_grid_m: wavelength_grid.to_vec(),
        intensity,
        tau_s: tau,
        delta_y_m: delta_y,
    }
}

/// Gaussian spectrometer-resolution blur applied to a trace on a uniform
/// wavelength grid. Kernel truncated at 5 sigma.
pub fn convolve_resolution(trace: &SpectrumTrace, fwhm: f64) -> SpectrumTrace {
    if fwhm <= 0.0 || trace.wavelength_grid_m.len() < 2 {
        return trace.clone();
    }
    let step = trace.wavelength_grid_m[1] - trace.wavelength_grid_m[0];
    let sigma = fwhm / FWHM_TO_SIGMA;
    let half = ((5.0 * sigma / step).ceil() as usize).max(1);
    let kernel: Vec<f64> = (0..=2 * half)
        .map(|i| {
            let x = (i as f64 - half as f64) * step / sigma;
            (-0.5 * x * x).exp()
        })
        .collect();
    let n = trace.intensity.len();
    let intensity = (0..n)
        .map(|i| {
            let mut acc = 0.0;
            let mut w = 0.0;
            for (k, &kv) in kernel.iter().enumerate() {
                let j = i as isize + k as isize - half as isize;
                if (0..n as isize).contains(&j) {
                    acc += kv * trace.intensity[j as usize];
                    w += kv;
                }
            }
            acc / w
        })
        .collect();
    SpectrumTrace {
        wavelength_grid_m: trace.wavelength_grid_m.clone(),
        intensity,
        tau_s: trace.tau_s,
        delta_y_m: trace.delta_y_m,
    }
}

/// Map a trace into reduced coordinates: each sample (lambda, S) becomes
/// (delta_y / lambda, S / S0(lambda)), ordered by increasing reduced
/// coordinate. Samples where the baseline vanishes are dropped; the
/// second return value counts them.
pub fn reduced_spectrum(
    trace: &SpectrumTrace,
    spec: &ThermalSourceSpec,
) -> Result<(Vec<(f64, f64)>, usize), ModelError> {
    trace.validate()?;
    if !(trace.delta_y_m > 0.0) {
        return Err(ModelError::InvalidSpec(
            "reduced coordinates need delta_y > 0".into(),
        ));
    }
    let mut dropped = 0usize;
    let mut out: Vec<(f64, f64)> = trace
        .wavelength_grid_m
        .iter()
        .zip(&trace.intensity)
        .filter_map(|(&lam, &s)| {
            let s0 = spec.baseline_lambda(lam);
            if s0 <= 0.0 {
                dropped += 1;
                None
            } else {
                Some((trace.delta_y_m / lam, s / s0))
            }
        })
        .collect();
    // increasing lambda means decreasing reduced coordinate
    out.reverse();
    Ok((out, dropped))
}

/// Temporal coherence magnitude from the Wiener-Khinchin transform of
/// the baseline: |int S0(nu) e^{-2 pi i nu tau} dnu| / int S0(nu) dnu.
pub fn temporal_coherence(tau: f64, spec: &ThermalSourceSpec) -> f64 {
    let (lam_lo, lam_hi) = spec.support_lambda();
    let nu_lo = SPEED_OF_LIGHT / lam_hi;
    let nu_hi = SPEED_OF_LIGHT / lam_lo;
    // composite Simpson on a fixed frequency grid
    let n = 4000usize; // even
    let h = (nu_hi - nu_lo) / n as f64;
    let mut re = 0.0;
    let mut im = 0.0;
    let mut norm = 0.0;
    for i in 0..=n {
        let nu = nu_lo + i as f64 * h;
        let w = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let s = spec.baseline_nu(nu);
        let phase = -2.0 * std::f64::consts::PI * nu * tau;
        re += w * s * phase.cos();
        im += w * s * phase.sin();
        norm += w * s;
    }
    if norm == 0.0 {
        return 0.0;
    }
    (re * re + im * im).sqrt() / norm
}

/// Normalized interferogram I(tau) = 1 + mu_T(tau) mu_S(delta_y)
/// cos(2 pi c tau / lambda0 + phi), using a precomputed temporal envelope
/// (one envelope evaluation is shared across all shears of a scan).
pub fn interferogram_model_with_envelope(
    tau_grid: &[f64],
    mu_t: &[f64],
    delta_y: f64,
    phase_phi: f64,
    spec: &ThermalSourceSpec,
) -> Vec<(f64, f64)> {
    let mu_s = mu_circ(delta_y, spec.lambda0_m, spec);
    let omega0 = 2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / spec.lambda0_m;
    tau_grid
        .iter()
        .zip(mu_t)
        .map(|(&tau, &mt)| (tau, 1.0 + mt * mu_s * (omega0 * tau + phase_phi).cos()))
        .collect()
}

/// Normalized interferogram at fixed shear over a delay grid.
pub fn interferogram_model(
    tau_grid: &[f64],
    delta_y: f64,
    phase_phi: f64,
    spec: &ThermalSourceSpec,
) -> Vec<(f64, f64)> {
    let mu_t: Vec<f64> = tau_grid
        .iter()
        .map(|&tau| temporal_coherence(tau, spec))
        .collect();
    interferogram_model_with_envelope(tau_grid, &mu_t, delta_y, phase_phi, spec)
}
