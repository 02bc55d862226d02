//! Canonical on-disk dataset format: `<base>.csv` (records) plus
//! `<base>.json` (sidecar with format version and the full plan).
//!
//! All floats are serialized with 17 significant digits so a reload is
//! bit-exact, and field order is fixed so identical datasets serialize
//! byte-identically.

use super::{ScanMode, ScanPlan};
use crate::error::DatasetError;
use crate::quantum::CoincidenceRecord;
use crate::thermal::SpectrumTrace;
use crate::units::format_f64_exact;
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::Write;
use std::path::Path;

pub const FORMAT_VERSION: &str = "1";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterferogramSample {
    pub delta_y_m: f64,
    pub tau_s: f64,
    pub intensity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Records {
    Coincidence(Vec<CoincidenceRecord>),
    Spectra(Vec<SpectrumTrace>),
    Interferograms(Vec<InterferogramSample>),
}

impl Records {
    pub fn len(&self) -> usize {
        match self {
            Records::Coincidence(v) => v.len(),
            Records::Spectra(v) => v.len(),
            Records::Interferograms(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanDataset {
    pub format_version: String,
    pub plan: ScanPlan,
    pub records: Records,
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    format_version: String,
    plan: ScanPlan,
}

fn io_err(path: &Path, source: std::io::Error) -> DatasetError {
    DatasetError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Write `<base>.csv` and `<base>.json`.
pub fn save_dataset(ds: &ScanDataset, base: &Path) -> Result<(), DatasetError> {
    let json_path = base.with_extension("json");
    let csv_path = base.with_extension("csv");
    if let Some(dir) = base.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        }
    }
    let sidecar = Sidecar {
        format_version: ds.format_version.clone(),
        plan: ds.plan.clone(),
    };
    let mut json = serde_json::to_vec_pretty(&sidecar).expect("plan serialization is infallible");
    json.push(b'\n');
    fs::write(&json_path, json).map_err(|e| io_err(&json_path, e))?;

    let mut out = Vec::new();
    match &ds.records {
        Records::Coincidence(recs) => {
            writeln!(out, "tau_s,delta_y_m,counts,window_pairs").unwrap();
            for r in recs {
                writeln!(
                    out,
                    "{},{},{},{}",
                    format_f64_exact(r.tau_s),
                    format_f64_exact(r.delta_y_m),
                    format_f64_exact(r.counts),
                    r.window_pairs
                )
                .unwrap();
            }
        }
        Records::Spectra(traces) => {
            writeln!(out, "delta_y_m,tau_s,wavelength_m,intensity").unwrap();
            for t in traces {
                for (&lam, &v) in t.wavelength_grid_m.iter().zip(&t.intensity) {
                    writeln!(
                        out,
                        "{},{},{},{}",
                        format_f64_exact(t.delta_y_m),
                        format_f64_exact(t.tau_s),
                        format_f64_exact(lam),
                        format_f64_exact(v)
                    )
                    .unwrap();
                }
            }
        }
        Records::Interferograms(samples) => {
            writeln!(out, "delta_y_m,tau_s,intensity").unwrap();
            for s in samples {
                writeln!(
                    out,
                    "{},{},{}",
                    format_f64_exact(s.delta_y_m),
                    format_f64_exact(s.tau_s),
                    format_f64_exact(s.intensity)
                )
                .unwrap();
            }
        }
    }
    fs::write(&csv_path, out).map_err(|e| io_err(&csv_path, e))?;
    Ok(())
}

fn parse_field(
    record: &csv::StringRecord,
    idx: usize,
    path: &Path,
    line: u64,
) -> Result<f64, DatasetError> {
    record
        .get(idx)
        .and_then(|s| s.parse::<f64>().ok())
        .ok_or_else(|| DatasetError::MalformedCsv {
            path: path.display().to_string(),
            line,
            message: format!("field {idx} is not a float"),
        })
}

/// Load `<base>.csv` + `<base>.json` back into a dataset.
pub fn load_dataset(base: &Path) -> Result<ScanDataset, DatasetError> {
    let json_path = base.with_extension("json");
    let csv_path = base.with_extension("csv");
    if !json_path.exists() {
        return Err(DatasetError::MissingSidecar(json_path.display().to_string()));
    }
    let sidecar_text = fs::read_to_string(&json_path).map_err(|e| io_err(&json_path, e))?;
    let sidecar: Sidecar =
        serde_json::from_str(&sidecar_text).map_err(|e| DatasetError::MalformedSidecar {
            path: json_path.display().to_string(),
            message: e.to_string(),
        })?;
    if sidecar.format_version != FORMAT_VERSION {
        return Err(DatasetError::UnsupportedVersion {
            found: sidecar.format_version,
            supported: FORMAT_VERSION.to_string(),
        });
    }

    let file = fs::File::open(&csv_path).map_err(|e| io_err(&csv_path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let mut line: u64 = 1; // header consumed
    let malformed = |line: u64, message: String| DatasetError::MalformedCsv {
        path: csv_path.display().to_string(),
        line,
        message,
    };

    let records = match sidecar.plan.mode {
        ScanMode::SpdcCoincidence => {
            let mut recs = Vec::new();
            for result in reader.records() {
                line += 1;
                let record = result.map_err(|e| malformed(line, e.to_string()))?;
                if record.len() != 4 {
                    return Err(malformed(line, format!("expected 4 fields, got {}", record.len())));
                }
                recs.push(CoincidenceRecord {
                    tau_s: parse_field(&record, 0, &csv_path, line)?,
                    delta_y_m: parse_field(&record, 1, &csv_path, line)?,
                    counts: parse_field(&record, 2, &csv_path, line)?,
                    window_pairs: record
                        .get(3)
                        .and_then(|s| s.parse::<u64>().ok())
                        .ok_or_else(|| malformed(line, "field 3 is not an integer".into()))?,
                });
            }
            Records::Coincidence(recs)
        }
        ScanMode::ThermalSpectrum => {
            let mut traces: Vec<SpectrumTrace> = Vec::new();
            for result in reader.records() {
                line += 1;
                let record = result.map_err(|e| malformed(line, e.to_string()))?;
                if record.len() != 4 {
                    return Err(malformed(line, format!("expected 4 fields, got {}", record.len())));
                }
                let dy = parse_field(&record, 0, &csv_path, line)?;
                let tau = parse_field(&record, 1, &csv_path, line)?;
                let lam = parse_field(&record, 2, &csv_path, line)?;
                let v = parse_field(&record, 3, &csv_path, line)?;
                let start_new = traces
                    .last()
                    .map_or(true, |t| t.delta_y_m != dy || t.tau_s != tau);
                if start_new {
                    traces.push(SpectrumTrace {
                        wavelength_grid_m: Vec::new(),
                        intensity: Vec::new(),
                        tau_s: tau,
                        delta_y_m: dy,
                    });
                }
                let t = traces.last_mut().unwrap();
                t.wavelength_grid_m.push(lam);
                t.intensity.push(v);
            }
            Records::Spectra(traces)
        }
        ScanMode::ThermalInterferogram => {
            let mut samples = Vec::new();
            for result in reader.records() {
                line += 1;
                let record = result.map_err(|e| malformed(line, e.to_string()))?;
                if record.len() != 3 {
                    return Err(malformed(line, format!("expected 3 fields, got {}", record.len())));
                }
                samples.push(InterferogramSample {
                    delta_y_m: parse_field(&record, 0, &csv_path, line)?,
                    tau_s: parse_field(&record, 1, &csv_path, line)?,
                    intensity: parse_field(&record, 2, &csv_path, line)?,
                });
            }
            Records::Interferograms(samples)
        }
    };

    Ok(ScanDataset {
        format_version: sidecar.format_version,
        plan: sidecar.plan,
        records,
    })
}
