//! Command-line interface.
//!
//! Exit codes: 0 success, 2 configuration/schema problems, 3 numerical
//! or estimator failures, 1 anything else (mostly I/O). Errors print as
//! a single `error: <category>: <message>` line on stderr.

use crate::analysis::{
    aggregate_reduced, fit_circ_coherence, fit_gaussian_coherence, visibility_sweep,
    AggregateOptions, FitResult, ShearCoordinate, VisibilityPoint,
};
use crate::error::{AnalysisError, DatasetError, ScanError};
use crate::geometry::min_collimation_radius;
use crate::report::render_visibility_svg;
use crate::scan::{load_dataset, run_scan, save_dataset, Records, ScanDataset, ScanPlan, SourceSpec};
use crate::units::{parse_length, parse_time};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "cohere-twin", version, about = "Interferometer digital twin: simulate shear scans and fit spatial coherence")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scan plan and write `<out>.csv` + `<out>.json` (+ manifest).
    Simulate {
        /// Scan plan JSON.
        #[arg(long)]
        config: PathBuf,
        /// Output base path (extensions are appended).
        #[arg(long)]
        out: PathBuf,
        /// Dotted-path overrides, e.g. `--set seed=7` or
        /// `--set source.thermal.lambda0_m=680nm`.
        #[arg(long = "set", value_name = "PATH=VALUE")]
        overrides: Vec<String>,
    },
    /// Extract the visibility sweep from a stored dataset.
    Analyze {
        /// Dataset base path (as passed to simulate --out).
        #[arg(long)]
        data: PathBuf,
        /// Write JSON here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit a coherence kernel to the extracted sweep.
    Fit {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum)]
        model: FitKind,
        /// Shear axis convention for the circular-source fit.
        #[arg(long, value_enum, default_value = "physical")]
        coordinate: CoordinateKind,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Minimum collimation radius for the plan's largest shear.
    CheckCollimation {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "set", value_name = "PATH=VALUE")]
        overrides: Vec<String>,
    },
    /// Render the sweep (and best-effort model fit) as SVG.
    Report {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum FitKind {
    /// Gaussian kernel (twin-photon source).
    Gaussian,
    /// Circular-source jinc kernel (thermal source).
    Circ,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum CoordinateKind {
    /// Physical shear in meters.
    Physical,
    /// Reduced coordinate delta_y / lambda (spectra only).
    Reduced,
}

#[derive(Debug)]
enum CliError {
    Config(String),
    Numerical(String),
    Other(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Other(_) => 1,
        }
    }

    fn report(&self) {
        let (cat, msg) = match self {
            CliError::Config(m) => ("config", m),
            CliError::Numerical(m) => ("numerical", m),
            CliError::Other(m) => ("io", m),
        };
        // single line, machine parsable
        eprintln!("error: {cat}: {}", msg.replace('\n', " "));
    }
}

impl From<ScanError> for CliError {
    fn from(e: ScanError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        match e {
            DatasetError::Io { .. } => CliError::Other(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Other(e.to_string())
    }
}

/// Parse the program arguments and run; returns the process exit code.
pub fn run() -> i32 {
    init_thread_pool();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            e.report();
            e.exit_code()
        }
    }
}

/// Honor COHERE_TWIN_THREADS (0 or unset: one thread per core).
fn init_thread_pool() {
    if let Ok(v) = std::env::var("COHERE_TWIN_THREADS") {
        if let Ok(n) = v.trim().parse::<usize>() {
            if n > 0 {
                // ignore failure: the pool may already exist in-process
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Simulate {
            config,
            out,
            overrides,
        } => simulate(&config, &out, &overrides),
        Command::Analyze { data, out } => analyze(&data, out.as_deref()),
        Command::Fit {
            data,
            model,
            coordinate,
            out,
        } => fit(&data, model, coordinate, out.as_deref()),
        Command::CheckCollimation { config, overrides } => check_collimation(&config, &overrides),
        Command::Report { data, out } => report(&data, &out),
    }
}

/// Resolve config text plus `--set` overrides into a validated plan.
/// The error is the single-line message the CLI prints.
pub fn resolve_plan(text: &str, overrides: &[String]) -> Result<ScanPlan, String> {
    let mut value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| e.to_string())?;
    for spec in overrides {
        apply_override(&mut value, spec).map_err(|e| match e {
            CliError::Config(m) | CliError::Numerical(m) | CliError::Other(m) => m,
        })?;
    }
    let plan: ScanPlan = serde_json::from_value(value).map_err(|e| e.to_string())?;
    plan.validate().map_err(|e| e.to_string())?;
    Ok(plan)
}

/// Load a scan plan, apply `--set` overrides, and validate the schema.
fn load_plan(path: &Path, overrides: &[String]) -> Result<ScanPlan, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Other(format!("{}: {e}", path.display())))?;
    resolve_plan(&text, overrides)
        .map_err(|m| CliError::Config(format!("{}: {m}", path.display())))
}

/// `path.to.field=value`; the value is parsed as JSON, falling back to
/// unit-suffixed lengths/times (for keys ending `_m` / `_s`) and then to
/// a bare string.
fn apply_override(root: &mut serde_json::Value, spec: &str) -> Result<(), CliError> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override {spec:?} is not PATH=VALUE")))?;
    let segments: Vec<&str> = path.split('.').collect();
    if segments.iter().any(|s| s.is_empty()) {
        return Err(CliError::Config(format!("empty override path segment in {spec:?}")));
    }
    // unit inference keys off the innermost named field, skipping indices
    let leaf = segments
        .iter()
        .rev()
        .find(|s| s.parse::<usize>().is_err())
        .copied()
        .unwrap_or(segments[segments.len() - 1]);
    let value = parse_override_value(raw, leaf)?;
    let mut cursor = root;
    for (i, seg) in segments.iter().enumerate() {
        let last = i + 1 == segments.len();
        cursor = match cursor {
            serde_json::Value::Array(arr) => {
                let idx: usize = seg.parse().map_err(|_| {
                    CliError::Config(format!("override path segment {seg:?} is not an array index"))
                })?;
                arr.get_mut(idx).ok_or_else(|| {
                    CliError::Config(format!("index {idx} out of bounds in override {spec:?}"))
                })?
            }
            serde_json::Value::Object(map) => {
                if last {
                    map.insert(seg.to_string(), value);
                    return Ok(());
                }
                map.entry(seg.to_string())
                    .or_insert_with(|| serde_json::Value::Object(Default::default()))
            }
            _ => {
                return Err(CliError::Config(format!(
                    "override path {path:?} descends into a scalar at {seg:?}"
                )))
            }
        };
        if last {
            *cursor = value;
            return Ok(());
        }
    }
    unreachable!("loop returns on the last segment")
}

fn parse_override_value(raw: &str, leaf_key: &str) -> Result<serde_json::Value, CliError> {
    if let Ok(v) = serde_json::from_str::<serde_json::Value>(raw) {
        return Ok(v);
    }
    if leaf_key.ends_with("_m") {
        if let Ok(v) = parse_length(raw) {
            return Ok(serde_json::json!(v));
        }
    }
    if leaf_key.ends_with("_s") {
        if let Ok(v) = parse_time(raw) {
            return Ok(serde_json::json!(v));
        }
    }
    Ok(serde_json::Value::String(raw.to_string()))
}

#[derive(Serialize)]
struct Manifest<'a> {
    format_version: &'a str,
    plan: &'a ScanPlan,
    records: usize,
    outputs: Vec<String>,
}

fn simulate(config: &Path, out: &Path, overrides: &[String]) -> Result<(), CliError> {
    let plan = load_plan(config, overrides)?;
    let dataset = run_scan(&plan)?;
    save_dataset(&dataset, out)?;
    let manifest = Manifest {
        format_version: crate::scan::FORMAT_VERSION,
        plan: &dataset.plan,
        records: dataset.records.len(),
        // names only, relative to the manifest itself: keeps manifests
        // byte-identical across output directories and relocatable
        outputs: vec![
            out.with_extension("csv")
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default(),
            out.with_extension("json")
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default(),
        ],
    };
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    let manifest_path = out.with_extension("manifest.json");
    fs::write(&manifest_path, text)
        .map_err(|e| CliError::Other(format!("{}: {e}", manifest_path.display())))?;
    println!(
        "wrote {} records to {} (+ sidecar, manifest)",
        dataset.records.len(),
        out.with_extension("csv").display()
    );
    Ok(())
}

fn write_or_print(json: String, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => {
            fs::write(path, json + "\n")
                .map_err(|e| CliError::Other(format!("{}: {e}", path.display())))?;
            Ok(())
        }
        None => {
            println!("{json}");
            Ok(())
        }
    }
}

fn analyze(data: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let dataset = load_dataset(data)?;
    let points = visibility_sweep(&dataset)?;
    let json = serde_json::to_string_pretty(&points).expect("points serialize");
    write_or_print(json, out)
}

/// Focal length and center wavelength of whichever source the plan used.
fn source_optics(plan: &ScanPlan) -> (f64, f64) {
    match &plan.source {
        SourceSpec::Quantum(q) => (q.focal_f_m, q.downconv_wavelength_lambda0_m),
        SourceSpec::Thermal(t) => (t.focal_f_m, t.lambda0_m),
    }
}

fn fit_points(
    dataset: &ScanDataset,
    model: FitKind,
    coordinate: CoordinateKind,
) -> Result<(Vec<VisibilityPoint>, FitResult), CliError> {
    let (focal_f, lambda0) = source_optics(&dataset.plan);
    let points = match coordinate {
        CoordinateKind::Physical => visibility_sweep(dataset)?,
        CoordinateKind::Reduced => {
            let (Records::Spectra(traces), SourceSpec::Thermal(t)) =
                (&dataset.records, &dataset.plan.source)
            else {
                return Err(CliError::Config(
                    "reduced-coordinate fits need a thermal spectrum dataset".into(),
                ));
            };
            aggregate_reduced(traces, t, &AggregateOptions::default())?
        }
    };
    let result = match model {
        FitKind::Gaussian => fit_gaussian_coherence(&points)?,
        FitKind::Circ => {
            let coord = match coordinate {
                CoordinateKind::Physical => ShearCoordinate::Physical { lambda0_m: lambda0 },
                CoordinateKind::Reduced => ShearCoordinate::Reduced,
            };
            fit_circ_coherence(&points, focal_f, coord)?
        }
    };
    Ok((points, result))
}

fn fit(
    data: &Path,
    model: FitKind,
    coordinate: CoordinateKind,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let dataset = load_dataset(data)?;
    let (_, result) = fit_points(&dataset, model, coordinate)?;
    let json = serde_json::to_string_pretty(&result).expect("fit result serializes");
    write_or_print(json, out)
}

#[derive(Serialize)]
struct CollimationReport {
    delta_y_max_m: f64,
    aperture_phi_m: f64,
    wavelength_m: f64,
    detector_distance_d_m: f64,
    min_collimation_radius_m: f64,
}

fn check_collimation(config: &Path, overrides: &[String]) -> Result<(), CliError> {
    let plan = load_plan(config, overrides)?;
    let (_, lambda0) = source_optics(&plan);
    let delta_y_max = plan
        .delta_y_values_m
        .iter()
        .fold(0.0f64, |m, &v| m.max(v.abs()));
    let r_min = min_collimation_radius(
        delta_y_max,
        plan.instrument.aperture_phi_m,
        lambda0,
        plan.instrument.detector_distance_d_m,
    );
    let report = CollimationReport {
        delta_y_max_m: delta_y_max,
        aperture_phi_m: plan.instrument.aperture_phi_m,
        wavelength_m: lambda0,
        detector_distance_d_m: plan.instrument.detector_distance_d_m,
        min_collimation_radius_m: r_min,
    };
    println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    Ok(())
}

fn report(data: &Path, out: &Path) -> Result<(), CliError> {
    let dataset = load_dataset(data)?;
    if dataset.records.is_empty() {
        return Err(CliError::Numerical(
            "dataset holds no records; nothing to render".into(),
        ));
    }
    let points = visibility_sweep(&dataset)?;
    let (model_kind, x_label, title) = match &dataset.plan.source {
        SourceSpec::Quantum(_) => (FitKind::Gaussian, "shear (m)", "twin-photon visibility sweep"),
        SourceSpec::Thermal(_) => (FitKind::Circ, "shear (m)", "thermal visibility sweep"),
    };
    // best effort: a sweep that defeats the fit still renders as points
    let curve = fit_points(&dataset, model_kind, CoordinateKind::Physical)
        .ok()
        .map(|(pts, result)| model_curve(&pts, &result, &dataset.plan));
    let svg = render_visibility_svg(&points, curve.as_deref(), x_label, title)?;
    fs::write(out, svg).map_err(|e| CliError::Other(format!("{}: {e}", out.display())))?;
    println!("wrote {}", out.display());
    Ok(())
}

fn model_curve(points: &[VisibilityPoint], result: &FitResult, plan: &ScanPlan) -> Vec<(f64, f64)> {
    let x_max = points.iter().map(|p| p.x.abs()).fold(0.0f64, f64::max);
    let n = 256;
    let (focal_f, lambda0) = source_optics(plan);
    (0..=n)
        .map(|i| {
            let x = i as f64 * x_max / n as f64;
            let y = if result.model == "gaussian_coherence" {
                let v0 = result.params["scale_V0"];
                let delta = result.params["delta_m"];
                v0 * (-0.5 * (x / delta).powi(2)).exp()
            } else {
                let v0 = result.params["scale_V0"];
                let r = result.params["radius_r_m"];
                let z = 2.0 * std::f64::consts::PI * r * x / (focal_f * lambda0);
                v0 * crate::specfun::jinc_finite(z)
            };
            (x, y)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn override_values_parse() {
        assert_eq!(parse_override_value("7", "seed").unwrap(), serde_json::json!(7));
        let lam = parse_override_value("680nm", "lambda0_m").unwrap();
        assert!((lam.as_f64().unwrap() / 680e-9 - 1.0).abs() < 1e-15);
        let v = parse_override_value("93fs", "tau_fixed_s").unwrap();
        assert!((v.as_f64().unwrap() / 9.3e-14 - 1.0).abs() < 1e-15);
        assert_eq!(
            parse_override_value("binomial", "counting").unwrap(),
            serde_json::json!("binomial")
        );
    }

    #[test]
    fn override_navigates_nested_paths() {
        let mut v = serde_json::json!({
            "seed": 1,
            "noise": {"spectrometer_sigma": 0.0},
            "delta_y_values_m": [1.0, 2.0]
        });
        apply_override(&mut v, "seed=9").unwrap();
        apply_override(&mut v, "noise.spectrometer_sigma=0.01").unwrap();
        apply_override(&mut v, "delta_y_values_m.1=40um").unwrap();
        assert_eq!(v["seed"], serde_json::json!(9));
        assert_eq!(v["noise"]["spectrometer_sigma"], serde_json::json!(0.01));
        let dy = v["delta_y_values_m"][1].as_f64().unwrap();
        assert!((dy / 4e-5 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn override_rejects_bad_shapes() {
        let mut v = serde_json::json!({"seed": 1});
        assert!(apply_override(&mut v, "no_equals_sign").is_err());
        assert!(apply_override(&mut v, "seed.deeper=1").is_err());
        let mut v = serde_json::json!({"xs": [1.0]});
        assert!(apply_override(&mut v, "xs.5=1").is_err());
        assert!(apply_override(&mut v, "xs.notanindex=1").is_err());
    }
}
