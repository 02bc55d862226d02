//! Unit-suffix parsing for CLI boundaries.
//!
//! Everything internal is SI (meters, seconds). The CLI accepts human
//! scales ("4.18mm", "93fs") and converts here, once.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum UnitError {
    #[error("empty quantity")]
    Empty,
    #[error("cannot parse numeric part of {0:?}")]
    BadNumber(String),
    #[error("unknown {kind} unit suffix in {input:?}")]
    UnknownSuffix { kind: &'static str, input: String },
    #[error("non-finite quantity {0:?}")]
    NonFinite(String),
}

fn split_quantity(input: &str) -> Result<(f64, &str), UnitError> {
    let s = input.trim();
    if s.is_empty() {
        return Err(UnitError::Empty);
    }
    let split = s
        .char_indices()
        .find(|(_, c)| c.is_alphabetic() || *c == 'µ')
        .map(|(i, _)| i)
        .unwrap_or(s.len());
    let (num, suffix) = s.split_at(split);
    let value: f64 = num
        .trim()
        .parse()
        .map_err(|_| UnitError::BadNumber(input.to_string()))?;
    if !value.is_finite() {
        return Err(UnitError::NonFinite(input.to_string()));
    }
    Ok((value, suffix.trim()))
}

/// Parse a length with optional suffix (m, cm, mm, um/µm, nm, pm) into meters.
/// A bare number is taken as meters.
pub fn parse_length(input: &str) -> Result<f64, UnitError> {
    let (value, suffix) = split_quantity(input)?;
    let scale = match suffix {
        "" | "m" => 1.0,
        "cm" => 1e-2,
        "mm" => 1e-3,
        "um" | "µm" => 1e-6,
        "nm" => 1e-9,
        "pm" => 1e-12,
        _ => {
            return Err(UnitError::UnknownSuffix {
                kind: "length",
                input: input.to_string(),
            })
        }
    };
    Ok(value * scale)
}

/// Parse a time with optional suffix (s, ms, us/µs, ns, ps, fs) into seconds.
pub fn parse_time(input: &str) -> Result<f64, UnitError> {
    let (value, suffix) = split_quantity(input)?;
    let scale = match suffix {
        "" | "s" => 1.0,
        "ms" => 1e-3,
        "us" | "µs" => 1e-6,
        "ns" => 1e-9,
        "ps" => 1e-12,
        "fs" => 1e-15,
        _ => {
            return Err(UnitError::UnknownSuffix {
                kind: "time",
                input: input.to_string(),
            })
        }
    };
    Ok(value * scale)
}

/// Format a float with 17 significant digits, the shortest representation
/// guaranteed to round-trip any f64 through text.
pub fn format_f64_exact(x: f64) -> String {
    format!("{:.16e}", x)
}
