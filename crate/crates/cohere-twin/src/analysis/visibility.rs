//! Visibility extraction from interferograms and fringe-modulated
//! spectra: linear least squares of a + p cos(theta) + q sin(theta)
//! against samples with known fringe phase theta.

use crate::error::AnalysisError;
use crate::thermal::{SpectrumTrace, ThermalSourceSpec};
use crate::SPEED_OF_LIGHT;

/// Result of a single-fringe-train visibility estimate.
#[derive(Debug, Clone, Copy)]
pub struct VisibilityEstimate {
    pub visibility: f64,
    pub phase_rad: f64,
    pub uncertainty: f64,
    /// Mean (offset) level of the fitted fringe train.
    pub offset: f64,
}

/// Least-squares fit of y = a + p cos(theta) + q sin(theta); returns
/// (a, p, q, covariance, rss).
fn fit_sinusoid(
    thetas: &[f64],
    ys: &[f64],
) -> Result<([f64; 3], [[f64; 3]; 3], f64), AnalysisError> {
    fit_modulated_sinusoid(thetas, None, ys)
}

/// As [`fit_sinusoid`], with an optional per-sample modulation m of the
/// oscillatory basis: y = a + p m cos(theta) + q m sin(theta). Used to
/// divide out a known coherence envelope that would otherwise leak into
/// the offset term (the envelope correlates with the carrier around the
/// zero-delay fringe).
fn fit_modulated_sinusoid(
    thetas: &[f64],
    modulation: Option<&[f64]>,
    ys: &[f64],
) -> Result<([f64; 3], [[f64; 3]; 3], f64), AnalysisError> {
    let n = thetas.len();
    let m_at = |i: usize| modulation.map_or(1.0, |m| m[i]);
    // normal equations X^T X b = X^T y with X = [1, m cos, m sin]
    let mut xtx = [[0.0f64; 3]; 3];
    let mut xty = [0.0f64; 3];
    for (i, (&th, &y)) in thetas.iter().zip(ys).enumerate() {
        let m = m_at(i);
        let row = [1.0, m * th.cos(), m * th.sin()];
        for i in 0..3 {
            xty[i] += row[i] * y;
            for j in 0..3 {
                xtx[i][j] += row[i] * row[j];
            }
        }
    }
    let inv = invert3(&xtx).ok_or_else(|| {
        AnalysisError::EstimatorFailure("rank-deficient sinusoid design matrix".into())
    })?;
    let mut b = [0.0f64; 3];
    for i in 0..3 {
        for j in 0..3 {
            b[i] += inv[i][j] * xty[j];
        }
    }
    let rss: f64 = thetas
        .iter()
        .zip(ys)
        .enumerate()
        .map(|(i, (&th, &y))| {
            let m = m_at(i);
            let r = y - b[0] - m * (b[1] * th.cos() + b[2] * th.sin());
            r * r
        })
        .sum();
    let dof = (n.saturating_sub(3)).max(1) as f64;
    let sigma2 = rss / dof;
    let mut cov = [[0.0f64; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            cov[i][j] = inv[i][j] * sigma2;
        }
    }
    Ok((b, cov, rss))
}

fn invert3(m: &[[f64; 3]; 3]) -> Option<[[f64; 3]; 3]> {
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    let scale = m
        .iter()
        .flatten()
        .fold(0.0f64, |acc, &v| acc.max(v.abs()));
    if det.abs() < 1e-12 * scale.powi(3).max(1e-300) {
        return None;
    }
    let inv_det = 1.0 / det;
    let mut out = [[0.0f64; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let (a, b, c, d) = (
                m[(j + 1) % 3][(i + 1) % 3],
                m[(j + 1) % 3][(i + 2) % 3],
                m[(j + 2) % 3][(i + 1) % 3],
                m[(j + 2) % 3][(i + 2) % 3],
            );
            out[i][j] = (a * d - b * c) * inv_det;
        }
    }
    Some(out)
}

/// Propagate the sinusoid-fit covariance to V = sqrt(p^2 + q^2) / a.
fn visibility_from_coeffs(
    b: &[f64; 3],
    cov: &[[f64; 3]; 3],
) -> Result<VisibilityEstimate, AnalysisError> {
    let (a, p, q) = (b[0], b[1], b[2]);
    if a <= 0.0 {
        return Err(AnalysisError::EstimatorFailure(format!(
            "non-positive fringe offset a = {a:.3e}"
        )));
    }
    let amp = (p * p + q * q).sqrt();
    let visibility = amp / a;
    let phase = (-q).atan2(p);
    // delta method: dV/da = -amp/a^2, dV/dp = p/(amp a), dV/dq = q/(amp a)
    let grad = if amp > 0.0 {
        [-amp / (a * a), p / (amp * a), q / (amp * a)]
    } else {
        [0.0, 1.0 / a, 1.0 / a]
    };
    let mut var = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            var += grad[i] * cov[i][j] * grad[j];
        }
    }
    Ok(VisibilityEstimate {
        visibility,
        phase_rad: phase,
        uncertainty: var.max(0.0).sqrt(),
        offset: a,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct InterferogramOptions {
    /// Half-width of the central-fringe fit window, in fringe periods.
    pub window_periods: f64,
    /// Required minimum samples per fringe period.
    pub min_samples_per_period: f64,
    /// Required minimum total span, in fringe periods.
    pub min_span_periods: f64,
}

impl Default for InterferogramOptions {
    fn default() -> Self {
        InterferogramOptions {
            window_periods: 1.0,
            min_samples_per_period: 3.0,
            min_span_periods: 2.0,
        }
    }
}

/// Fringe visibility of an interferogram sampled at known carrier
/// frequency omega0. Fits a + b cos(omega0 tau + phi) over the central
/// fringes, where the envelope is treated as locally constant.
pub fn visibility_from_interferogram(
    samples: &[(f64, f64)],
    omega0: f64,
    opts: &InterferogramOptions,
) -> Result<VisibilityEstimate, AnalysisError> {
    visibility_from_interferogram_enveloped(samples, omega0, |_| 1.0, opts)
}

/// Envelope-aware variant: `envelope` gives the known temporal-coherence
/// magnitude at each delay, and the fit demodulates against
/// envelope(tau) cos(omega0 tau + phi). The returned visibility is then
/// the spatial factor alone, free of the offset bias the decaying
/// envelope otherwise induces.
pub fn visibility_from_interferogram_enveloped(
    samples: &[(f64, f64)],
    omega0: f64,
    envelope: impl Fn(f64) -> f64,
    opts: &InterferogramOptions,
) -> Result<VisibilityEstimate, AnalysisError> {
    if samples.len() < 4 {
        return Err(AnalysisError::EstimatorFailure(format!(
            "{} samples are too few for a fringe fit",
            samples.len()
        )));
    }
    let period = 2.0 * std::f64::consts::PI / omega0;
    let tau_min = samples.iter().map(|s| s.0).fold(f64::MAX, f64::min);
    let tau_max = samples.iter().map(|s| s.0).fold(f64::MIN, f64::max);
    let span = tau_max - tau_min;
    if span < opts.min_span_periods * period {
        return Err(AnalysisError::InsufficientFringes {
            fringes: span / period,
            required: opts.min_span_periods,
        });
    }
    let density = samples.len() as f64 / (span / period);
    if density < opts.min_samples_per_period {
        return Err(AnalysisError::EstimatorFailure(format!(
            "{density:.1} samples per fringe period; need >= {}",
            opts.min_samples_per_period
        )));
    }
    // central window around the delay of the densest fringe contrast
    let center = 0.0f64.clamp(tau_min, tau_max);
    let half = opts.window_periods * period;
    let windowed: Vec<&(f64, f64)> = samples
        .iter()
        .filter(|(tau, _)| (tau - center).abs() <= half)
        .collect();
    let used: Vec<&(f64, f64)> = if windowed.len() >= 8 {
        windowed
    } else {
        samples.iter().collect()
    };
    let thetas: Vec<f64> = used.iter().map(|(tau, _)| omega0 * tau).collect();
    let mods: Vec<f64> = used.iter().map(|(tau, _)| envelope(*tau)).collect();
    let ys: Vec<f64> = used.iter().map(|(_, y)| *y).collect();
    let (b, cov, _) = fit_modulated_sinusoid(&thetas, Some(&mods), &ys)?;
    visibility_from_coeffs(&b, &cov)
}

#[derive(Debug, Clone, Copy)]
pub struct SpectrumWindowOptions {
    /// Half-width of the demodulation window around lambda0, meters.
    pub window_halfwidth_m: f64,
    /// Minimum number of spectral fringes inside the window.
    pub min_fringes: f64,
}

impl Default for SpectrumWindowOptions {
    fn default() -> Self {
        SpectrumWindowOptions {
            window_halfwidth_m: 40e-9,
            min_fringes: 3.0,
        }
    }
}

/// Fringe visibility of a spectrum at known delay tau. Normalizes by the
/// baseline and fits 1 + V cos(2 pi c tau / lambda + phi) over a window
/// around lambda0 where the spatial-coherence variation is small.
pub fn visibility_from_spectrum(
    trace: &SpectrumTrace,
    spec: &ThermalSourceSpec,
    tau_known: f64,
    opts: &SpectrumWindowOptions,
) -> Result<(f64, f64), AnalysisError> {
    let lam0 = spec.lambda0_m;
    let (lo, hi) = (
        lam0 - opts.window_halfwidth_m,
        lam0 + opts.window_halfwidth_m,
    );
    // spectral fringe period near lambda0 is lambda0^2 / (c tau)
    let fringe_period = lam0 * lam0 / (SPEED_OF_LIGHT * tau_known.abs().max(1e-30));
    let fringes = (hi - lo) / fringe_period;
    if fringes < opts.min_fringes {
        return Err(AnalysisError::InsufficientFringes {
            fringes,
            required: opts.min_fringes,
        });
    }
    let mut thetas = Vec::new();
    let mut ys = Vec::new();
    for (&lam, &s) in trace.wavelength_grid_m.iter().zip(&trace.intensity) {
        if lam < lo || lam > hi {
            continue;
        }
        let s0 = spec.baseline_lambda(lam);
        if s0 <= 0.0 {
            continue;
        }
        thetas.push(2.0 * std::f64::consts::PI * SPEED_OF_LIGHT * tau_known / lam);
        ys.push(s / s0);
    }
    if thetas.len() < 8 {
        return Err(AnalysisError::EstimatorFailure(format!(
            "{} usable samples in the demodulation window",
            thetas.len()
        )));
    }
    let (b, cov, _) = fit_sinusoid(&thetas, &ys)?;
    let est = visibility_from_coeffs(&b, &cov)?;
    Ok((est.visibility, est.uncertainty))
}

/// Demodulated amplitude of a uniformly phased fringe segment; used by
/// the reduced-coordinate envelope extraction. `phases` must cover about
/// one fringe period for the three coefficients to separate.
pub fn local_envelope(
    phases: &[f64],
    values_minus_one: &[f64],
) -> Result<(f64, f64), AnalysisError> {
    let (b, cov, _) = fit_sinusoid(phases, values_minus_one)?;
    let amp = (b[1] * b[1] + b[2] * b[2]).sqrt();
    let grad = if amp > 0.0 {
        [0.0, b[1] / amp, b[2] / amp]
    } else {
        [0.0, 1.0, 1.0]
    };
    let mut var = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            var += grad[i] * cov[i][j] * grad[j];
        }
    }
    Ok((amp, var.max(0.0).sqrt()))
}
