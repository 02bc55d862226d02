//! Estimation pipeline: fringe visibility extraction, reduced-coordinate
//! envelope aggregation, and coherence-kernel fits.

pub mod lm;
pub mod models;
pub mod visibility;

pub use lm::{FitModel, LmOptions, LmOutcome};
pub use models::{CircCoherenceModel, GaussianCoherenceModel};
pub use visibility::{
    visibility_from_interferogram, visibility_from_interferogram_enveloped,
    visibility_from_spectrum, InterferogramOptions, SpectrumWindowOptions, VisibilityEstimate,
};

use crate::error::AnalysisError;
use crate::quantum::CoincidenceRecord;
use crate::scan::{Records, ScanDataset, SourceSpec};
use crate::thermal::{reduced_spectrum, SpectrumTrace, ThermalSourceSpec};
use crate::SPEED_OF_LIGHT;
use serde::Serialize;
use std::collections::BTreeMap;

/// One visibility sample along a shear sweep. `x` is the physical shear
/// in meters, or the reduced coordinate delta_y / lambda for aggregated
/// spectra.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct VisibilityPoint {
    pub x: f64,
    pub visibility: f64,
    pub uncertainty: f64,
    pub phase_rad: f64,
    /// Noise can push the raw estimate above 1; it is reported unclamped
    /// and flagged so downstream fits can decide.
    pub over_unity: bool,
}

impl VisibilityPoint {
    fn new(x: f64, visibility: f64, uncertainty: f64, phase_rad: f64) -> Self {
        VisibilityPoint {
            x,
            visibility,
            uncertainty,
            phase_rad,
            over_unity: visibility > 1.0,
        }
    }
}

/// Serializable summary of a coherence-kernel fit.
#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    pub model: String,
    pub params: BTreeMap<String, f64>,
    /// One-sigma uncertainties from the scaled covariance diagonal.
    pub uncertainties: BTreeMap<String, f64>,
    /// Row/column order of `covariance`.
    pub param_order: Vec<String>,
    pub covariance: Vec<Vec<f64>>,
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub n_points: usize,
}

fn outcome_to_result<M: FitModel>(
    model_name: &str,
    model: &M,
    outcome: lm::LmOutcome,
    param_scales: &[f64],
    n_points: usize,
) -> Result<FitResult, AnalysisError> {
    // `converged` means the gradient tolerance was met; a stalled iterate
    // (no descent step at maximum damping) is also a stationary point in
    // working precision, so only the iteration cap is fatal.
    if !outcome.converged && outcome.iterations >= LmOptions::default().max_iterations {
        return Err(AnalysisError::NonConvergence {
            iterations: outcome.iterations,
            residual_norm: outcome.residual_norm,
        });
    }
    let names = model.param_names();
    let mut params = BTreeMap::new();
    let mut uncertainties = BTreeMap::new();
    let p = names.len();
    let mut covariance = vec![vec![0.0; p]; p];
    for i in 0..p {
        for j in 0..p {
            covariance[i][j] = outcome.covariance[i][j] * param_scales[i] * param_scales[j];
        }
    }
    for (i, &name) in names.iter().enumerate() {
        params.insert(name.to_string(), outcome.params[i] * param_scales[i]);
        uncertainties.insert(name.to_string(), covariance[i][i].max(0.0).sqrt());
    }
    Ok(FitResult {
        model: model_name.to_string(),
        params,
        uncertainties,
        param_order: names.iter().map(|s| s.to_string()).collect(),
        covariance,
        residual_norm: outcome.residual_norm,
        iterations: outcome.iterations,
        converged: true,
        n_points,
    })
}

fn fit_weights(points: &[VisibilityPoint]) -> Vec<f64> {
    // inverse-variance weights when every point carries a usable sigma;
    // unit weights otherwise (noiseless data report sigma ~ 0)
    let usable = points
        .iter()
        .all(|p| p.uncertainty.is_finite() && p.uncertainty > 1e-12);
    let mut w: Vec<f64> = points
        .iter()
        .map(|p| {
            if usable {
                1.0 / (p.uncertainty * p.uncertainty)
            } else {
                1.0
            }
        })
        .collect();
    // normalize to mean 1 so the gradient tolerance stays meaningful;
    // fitted parameters are invariant to the overall weight scale
    let mean = w.iter().sum::<f64>() / w.len() as f64;
    for v in &mut w {
        *v /= mean;
    }
    w
}

const SQRT_2LN2: f64 = 1.1774100225154747;

/// Fit V(x) = V0 exp(-x^2 / (2 delta^2)) to a visibility sweep.
pub fn fit_gaussian_coherence(points: &[VisibilityPoint]) -> Result<FitResult, AnalysisError> {
    if points.len() < 3 {
        return Err(AnalysisError::DegenerateData(format!(
            "{} visibility points cannot constrain the Gaussian kernel",
            points.len()
        )));
    }
    let x_scale = points
        .iter()
        .map(|p| p.x.abs())
        .fold(0.0f64, f64::max);
    if !(x_scale > 0.0) {
        return Err(AnalysisError::DegenerateData(
            "all shear values are zero".into(),
        ));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.x / x_scale).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.visibility).collect();
    let weights = fit_weights(points);
    let v0 = ys.iter().cloned().fold(0.0f64, f64::max);
    if !(v0 > 0.0) {
        return Err(AnalysisError::DegenerateData(
            "no positive visibility sample to anchor the fit".into(),
        ));
    }
    // half-power crossing gives the initial width
    let mut sorted: Vec<(f64, f64)> = xs.iter().cloned().zip(ys.iter().cloned()).collect();
    sorted.sort_by(|a, b| a.0.abs().total_cmp(&b.0.abs()));
    let x_half = sorted
        .iter()
        .find(|&&(_, v)| v < 0.5 * v0)
        .map(|&(x, _)| x.abs())
        .unwrap_or(1.0);
    let delta0 = (x_half / SQRT_2LN2).max(1e-3);
    let model = GaussianCoherenceModel;
    let outcome = lm::levenberg_marquardt(
        &model,
        &xs,
        &ys,
        &weights,
        &[v0, delta0],
        &LmOptions::default(),
    )?;
    outcome_to_result("gaussian_coherence", &model, outcome, &[1.0, x_scale], points.len())
}

/// Coordinate convention of the shear axis for the circular-source fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ShearCoordinate {
    /// `x` is the physical shear in meters; the jinc argument is
    /// 2 pi r x / (f lambda0).
    Physical { lambda0_m: f64 },
    /// `x` is the reduced coordinate delta_y / lambda; the jinc argument
    /// is 2 pi r x / f, wavelength-independent.
    Reduced,
}

/// Fit V(x) = V0 |2 J1(z)/z|, z = 2 pi r x / (f lambda), to a visibility
/// sweep; the focal length is a fixed instrument constant, so the only
/// shape parameter is the source radius r.
pub fn fit_circ_coherence(
    points: &[VisibilityPoint],
    focal_f_m: f64,
    coordinate: ShearCoordinate,
) -> Result<FitResult, AnalysisError> {
    if points.len() < 3 {
        return Err(AnalysisError::DegenerateData(format!(
            "{} visibility points cannot constrain the circular kernel",
            points.len()
        )));
    }
    let k = match coordinate {
        ShearCoordinate::Physical { lambda0_m } => {
            2.0 * std::f64::consts::PI / (focal_f_m * lambda0_m)
        }
        ShearCoordinate::Reduced => 2.0 * std::f64::consts::PI / focal_f_m,
    };
    let x_scale = points
        .iter()
        .map(|p| p.x.abs())
        .fold(0.0f64, f64::max);
    if !(x_scale > 0.0 && k > 0.0) {
        return Err(AnalysisError::DegenerateData(
            "all shear values are zero".into(),
        ));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.x / x_scale).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.visibility).collect();
    let weights = fit_weights(points);
    let v0 = ys.iter().cloned().fold(0.0f64, f64::max);
    if !(v0 > 0.0) {
        return Err(AnalysisError::DegenerateData(
            "no positive visibility sample to anchor the fit".into(),
        ));
    }
    // initial radius from the first envelope zero if the sweep reaches
    // it, else the half-power point of the jinc kernel
    let mut sorted: Vec<(f64, f64)> = xs.iter().cloned().zip(ys.iter().cloned()).collect();
    sorted.sort_by(|a, b| a.0.abs().total_cmp(&b.0.abs()));
    let r0_scaled = if let Some(&(xz, _)) = sorted.iter().find(|&&(_, v)| v < 0.05 * v0) {
        crate::specfun::J1_FIRST_ZERO / xz.abs()
    } else if let Some(&(xh, _)) = sorted.iter().find(|&&(_, v)| v < 0.5 * v0) {
        crate::specfun::JINC_HALF_POINT / xh.abs()
    } else {
        return Err(AnalysisError::Initialization(
            "sweep never drops below half power; cannot seed the source radius".into(),
        ));
    };
    if !r0_scaled.is_finite() || r0_scaled <= 0.0 {
        return Err(AnalysisError::Initialization(format!(
            "degenerate initial radius {r0_scaled:e}"
        )));
    }
    // fit with z = r' x', r' = k x_scale r, so both parameters are O(1)
    let model = CircCoherenceModel { scale_k: 1.0 };
    let outcome = lm::levenberg_marquardt(
        &model,
        &xs,
        &ys,
        &weights,
        &[v0, r0_scaled],
        &LmOptions::default(),
    )?;
    outcome_to_result(
        "circ_coherence",
        &model,
        outcome,
        &[1.0, 1.0 / (k * x_scale)],
        points.len(),
    )
}

/// Group consecutive coincidence records that share a shear value.
fn group_coincidences(records: &[CoincidenceRecord]) -> Vec<(f64, Vec<(f64, f64)>)> {
    let mut groups: Vec<(f64, Vec<(f64, f64)>)> = Vec::new();
    for r in records {
        match groups.last_mut() {
            Some((dy, samples)) if *dy == r.delta_y_m => {
                samples.push((r.tau_s, r.counts / r.window_pairs as f64))
            }
            _ => groups.push((r.delta_y_m, vec![(r.tau_s, r.counts / r.window_pairs as f64)])),
        }
    }
    groups
}

/// Visibility sweep extracted from a simulated (or loaded) dataset: one
/// point per shear value, with `x` the physical shear in meters.
pub fn visibility_sweep(dataset: &ScanDataset) -> Result<Vec<VisibilityPoint>, AnalysisError> {
    match (&dataset.records, &dataset.plan.source) {
        (Records::Coincidence(records), SourceSpec::Quantum(q)) => {
            let omega0 = q.omega0();
            let opts = InterferogramOptions::default();
            group_coincidences(records)
                .iter()
                .map(|(dy, samples)| {
                    let est = visibility_from_interferogram(samples, omega0, &opts)?;
                    Ok(VisibilityPoint::new(
                        *dy,
                        est.visibility,
                        est.uncertainty,
                        est.phase_rad,
                    ))
                })
                .collect()
        }
        (Records::Interferograms(samples), SourceSpec::Thermal(t)) => {
            let omega0 = 2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / t.lambda0_m;
            let opts = InterferogramOptions::default();
            let mut groups: Vec<(f64, Vec<(f64, f64)>)> = Vec::new();
            for s in samples {
                match groups.last_mut() {
                    Some((dy, g)) if *dy == s.delta_y_m => g.push((s.tau_s, s.intensity)),
                    _ => groups.push((s.delta_y_m, vec![(s.tau_s, s.intensity)])),
                }
            }
            // the temporal envelope is shared by all shears: memoize per
            // distinct delay (the Wiener-Khinchin integral is the cost)
            let mut envelope: std::collections::HashMap<u64, f64> = Default::default();
            for s in samples {
                envelope
                    .entry(s.tau_s.to_bits())
                    .or_insert_with(|| crate::thermal::temporal_coherence(s.tau_s, t));
            }
            groups
                .iter()
                .map(|(dy, g)| {
                    let est = visibility_from_interferogram_enveloped(
                        g,
                        omega0,
                        |tau| envelope[&tau.to_bits()],
                        &opts,
                    )?;
                    Ok(VisibilityPoint::new(
                        *dy,
                        est.visibility,
                        est.uncertainty,
                        est.phase_rad,
                    ))
                })
                .collect()
        }
        (Records::Spectra(traces), SourceSpec::Thermal(t)) => {
            let opts = SpectrumWindowOptions::default();
            traces
                .iter()
                .map(|trace| {
                    let (v, sigma) = visibility_from_spectrum(trace, t, trace.tau_s, &opts)?;
                    Ok(VisibilityPoint::new(trace.delta_y_m, v, sigma, 0.0))
                })
                .collect()
        }
        _ => Err(AnalysisError::EstimatorFailure(
            "record table does not match the plan's source kind".into(),
        )),
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AggregateOptions {
    /// Demodulation window width, in local fringe periods.
    pub window_periods: f64,
    /// Minimum samples required in a window.
    pub min_window_samples: usize,
    /// Maximum envelope jump allowed where traces overlap.
    pub consistency_limit: f64,
}

impl Default for AggregateOptions {
    fn default() -> Self {
        AggregateOptions {
            window_periods: 1.0,
            min_window_samples: 6,
            consistency_limit: 0.1,
        }
    }
}

/// Merge several fringe-modulated spectra, taken at different shears,
/// into one coherence-envelope curve over the reduced coordinate
/// delta_y / lambda.
///
/// Each trace is normalized by the baseline, demodulated in windows of
/// one local fringe period (period delta_y / (c tau) in the reduced
/// coordinate), and the window amplitudes are merged sorted. Where
/// traces overlap, neighboring envelope values from different traces
/// must agree to within `consistency_limit`.
pub fn aggregate_reduced(
    traces: &[SpectrumTrace],
    spec: &ThermalSourceSpec,
    opts: &AggregateOptions,
) -> Result<Vec<VisibilityPoint>, AnalysisError> {
    if traces.is_empty() {
        return Err(AnalysisError::DegenerateData("no spectra to aggregate".into()));
    }
    // (reduced coordinate, envelope, sigma, trace index)
    let mut merged: Vec<(f64, f64, f64, usize)> = Vec::new();
    for (t_idx, trace) in traces.iter().enumerate() {
        let tau = trace.tau_s;
        let dy = trace.delta_y_m;
        if !(tau.abs() > 0.0) {
            return Err(AnalysisError::EstimatorFailure(
                "zero delay leaves the spectrum unmodulated; nothing to demodulate".into(),
            ));
        }
        let (reduced, _) = reduced_spectrum(trace, spec)
            .map_err(|e| AnalysisError::EstimatorFailure(e.to_string()))?;
        let period = dy / (SPEED_OF_LIGHT * tau.abs()) * opts.window_periods;
        let phase_rate = 2.0 * std::f64::consts::PI * SPEED_OF_LIGHT * tau / dy;
        let mut start = 0usize;
        while start < reduced.len() {
            let window_end = reduced[start].0 + period;
            let mut end = start;
            while end < reduced.len() && reduced[end].0 <= window_end {
                end += 1;
            }
            if end - start >= opts.min_window_samples {
                let phases: Vec<f64> =
                    reduced[start..end].iter().map(|&(c, _)| phase_rate * c).collect();
                let values: Vec<f64> =
                    reduced[start..end].iter().map(|&(_, v)| v - 1.0).collect();
                let (amp, sigma) = visibility::local_envelope(&phases, &values)?;
                let center = reduced[start..end].iter().map(|&(c, _)| c).sum::<f64>()
                    / (end - start) as f64;
                merged.push((center, amp, sigma, t_idx));
            }
            start = end;
        }
    }
    if merged.is_empty() {
        return Err(AnalysisError::EstimatorFailure(
            "no demodulation window collected enough samples".into(),
        ));
    }
    merged.sort_by(|a, b| a.0.total_cmp(&b.0));
    // cross-trace consistency where the sweeps interleave
    for w in merged.windows(2) {
        let (c0, a0, _, t0) = w[0];
        let (c1, a1, _, t1) = w[1];
        if t0 != t1 {
            // the finer of the two local periods bounds "overlapping"
            let gap_limit = (c1 - c0).max(0.0);
            let local_period = traces[t0].delta_y_m
                / (SPEED_OF_LIGHT * traces[t0].tau_s.abs());
            if gap_limit < 0.5 * local_period && (a1 - a0).abs() > opts.consistency_limit {
                return Err(AnalysisError::AggregationInconsistency {
                    jump: (a1 - a0).abs(),
                    limit: opts.consistency_limit,
                });
            }
        }
    }
    Ok(merged
        .into_iter()
        .map(|(c, amp, sigma, _)| VisibilityPoint::new(c, amp, sigma, 0.0))
        .collect())
}
