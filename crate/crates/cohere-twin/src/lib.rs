//! Digital twin of a monolithic two-crystal shearing interferometer.
//!
//! The instrument rotates one calcite crystal to set a temporal delay tau
//! and the other to set a vertical shear delta-y between two replicas of
//! the input beam. Fringe visibility as a function of the shear measures
//! the spatial coherence of the source. This crate provides:
//!
//! * forward models for an SPDC twin-photon source ([`quantum`]) and a
//!   broadband thermal source ([`thermal`]),
//! * the crystal-rotation geometry and collimation bounds ([`geometry`]),
//! * seeded synthetic scan generation with CSV/JSON persistence ([`scan`]),
//! * the analysis chain: visibility extraction, reduced-coordinate
//!   aggregation, and Levenberg-Marquardt model fits ([`analysis`]),
//! * a CLI and SVG report generator ([`cli`], [`report`]).

pub mod analysis;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod quantum;
pub mod report;
pub mod scan;
pub mod specfun;
pub mod thermal;
pub mod units;

/// Vacuum speed of light, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
