//! Crystal-rotation geometry of the monolithic interferometer.
//!
//! Rotating the first calcite by alpha adds free-space path to the
//! extraordinary ray, tau = D tan(alpha) / c. Rotating the second by
//! gamma shears the beam vertically, delta_y = D sin(gamma), with a
//! second-order horizontal shift delta_x = D (1 - cos(gamma)).

use crate::error::GeometryError;
use crate::SPEED_OF_LIGHT;
use serde::{Deserialize, Serialize};

/// Rotations beyond this are outside the small-angle regime the model
/// assumes; intra-crystal refraction would no longer be negligible.
pub const SMALL_ANGLE_LIMIT_RAD: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstrumentConfig {
    /// Calcite walk-off displacement D, meters.
    #[serde(rename = "walkoff_D_m")]
    pub walkoff_d_m: f64,
    /// Collimation lens focal length f, meters.
    pub focal_f_m: f64,
    /// Detector collection aperture diameter, meters.
    #[serde(rename = "aperture_Phi_m")]
    pub aperture_phi_m: f64,
    /// Optical distance from first crystal entrance to detector, meters.
    pub detector_distance_d_m: f64,
    /// Rotation of the delay crystal, radians.
    pub alpha_rad: f64,
    /// Rotation of the shear crystal, radians.
    pub gamma_rad: f64,
}

impl InstrumentConfig {
    pub fn validate(&self) -> Result<(), GeometryError> {
        if !(self.walkoff_d_m > 0.0) {
            return Err(GeometryError::InvalidConfig(format!(
                "walkoff_d_m must be > 0, got {}",
                self.walkoff_d_m
            )));
        }
        if !(self.focal_f_m > 0.0) {
            return Err(GeometryError::InvalidConfig(format!(
                "focal_f_m must be > 0, got {}",
                self.focal_f_m
            )));
        }
        if !(self.aperture_phi_m > 0.0) {
            return Err(GeometryError::InvalidConfig(format!(
                "aperture_phi_m must be > 0, got {}",
                self.aperture_phi_m
            )));
        }
        if !(self.detector_distance_d_m >= 0.0) {
            return Err(GeometryError::InvalidConfig(format!(
                "detector_distance_d_m must be >= 0, got {}",
                self.detector_distance_d_m
            )));
        }
        check_small_angle(self.alpha_rad)?;
        check_small_angle(self.gamma_rad)?;
        Ok(())
    }
}

fn check_small_angle(angle: f64) -> Result<(), GeometryError> {
    if !angle.is_finite() || angle.abs() >= SMALL_ANGLE_LIMIT_RAD {
        return Err(GeometryError::SmallAngleViolation {
            angle_rad: angle,
            limit: SMALL_ANGLE_LIMIT_RAD,
        });
    }
    Ok(())
}

/// Delay/shear state implied by the crystal rotations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShearState {
    /// Temporal delay tau = D tan(alpha) / c, seconds (signed).
    pub tau_s: f64,
    /// Vertical shear delta_y = D sin(gamma), meters (signed).
    pub delta_y_m: f64,
    /// Horizontal shift delta_x = D (1 - cos(gamma)), meters (>= 0).
    pub delta_x_m: f64,
}

/// Temporal delay from the delay-crystal rotation: tau = D tan(alpha) / c.
pub fn alpha_to_delay(config: &InstrumentConfig) -> Result<f64, GeometryError> {
    config.validate()?;
    Ok(config.walkoff_d_m * config.alpha_rad.tan() / SPEED_OF_LIGHT)
}

/// Shear state from the shear-crystal rotation.
pub fn gamma_to_shear(config: &InstrumentConfig) -> Result<ShearState, GeometryError> {
    config.validate()?;
    let d = config.walkoff_d_m;
    let gamma = config.gamma_rad;
    Ok(ShearState {
        tau_s: d * config.alpha_rad.tan() / SPEED_OF_LIGHT,
        delta_y_m: d * gamma.sin(),
        delta_x_m: d * (1.0 - gamma.cos()),
    })
}

/// Shear-crystal angle that realizes a requested vertical shear,
/// gamma = asin(delta_y / D). Errors if outside the small-angle regime.
pub fn shear_to_gamma(delta_y: f64, walkoff_d: f64) -> Result<f64, GeometryError> {
    let ratio = delta_y / walkoff_d;
    if !(ratio.abs() <= 1.0) {
        return Err(GeometryError::SmallAngleViolation {
            angle_rad: f64::NAN,
            limit: SMALL_ANGLE_LIMIT_RAD,
        });
    }
    let gamma = ratio.asin();
    check_small_angle(gamma)?;
    Ok(gamma)
}

/// Delay-crystal angle that realizes a requested delay,
/// alpha = atan(c tau / D).
pub fn delay_to_alpha(tau: f64, walkoff_d: f64) -> Result<f64, GeometryError> {
    let alpha = (SPEED_OF_LIGHT * tau / walkoff_d).atan();
    check_small_angle(alpha)?;
    Ok(alpha)
}

/// Spatial fringe period at the detection plane for a spherical input
/// wavefront of curvature radius R: Lambda = lambda (R + d) / delta_y.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FringePeriod {
    /// delta_y = 0: the two replicas are parallel, no spatial fringes.
    NoSpatialFringes,
    Period(f64),
}

pub fn fringe_period(
    radius_r: f64,
    delta_y: f64,
    wavelength: f64,
    distance_d: f64,
) -> FringePeriod {
    if delta_y == 0.0 {
        return FringePeriod::NoSpatialFringes;
    }
    FringePeriod::Period(wavelength * (radius_r + distance_d) / delta_y.abs())
}

/// Smallest wavefront curvature radius for which the spurious spatial
/// fringes stay wider than the collection aperture (Lambda > Phi) at the
/// largest shear used: R_min = Phi * delta_y_max / lambda - d.
/// Returns 0 when the constraint is satisfied for any curvature.
pub fn min_collimation_radius(
    delta_y_max: f64,
    aperture_phi: f64,
    wavelength: f64,
    distance_d: f64,
) -> f64 {
    let r_min = aperture_phi * delta_y_max / wavelength - distance_d;
    r_min.max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(alpha: f64, gamma: f64) -> InstrumentConfig {
        InstrumentConfig {
            walkoff_d_m: 4.18e-3,
            focal_f_m: 0.5,
            aperture_phi_m: 2e-3,
            detector_distance_d_m: 0.1,
            alpha_rad: alpha,
            gamma_rad: gamma,
        }
    }

    #[test]
    fn zero_rotation_is_identity() {
        let c = config(0.0, 0.0);
        assert_eq!(alpha_to_delay(&c).unwrap(), 0.0);
        let s = gamma_to_shear(&c).unwrap();
        assert_eq!(s.delta_y_m, 0.0);
        assert_eq!(s.delta_x_m, 0.0);
    }

    #[test]
    fn delay_matches_direct_evaluation() {
        // D = 4.18 mm, alpha = 1 mrad -> tau = D tan(alpha)/c ~ 13.94 fs
        let tau = alpha_to_delay(&config(1e-3, 0.0)).unwrap();
        let expected = 4.18e-3 * (1e-3f64).tan() / SPEED_OF_LIGHT;
        assert_eq!(tau, expected);
        assert!((tau - 13.94e-15).abs() < 0.01e-15);
    }

    #[test]
    fn delay_inverse_recovers_target_tau() {
        // 93 fs delay needs alpha ~ 6.67 mrad on the 4.18 mm walk-off.
        let alpha = delay_to_alpha(93e-15, 4.18e-3).unwrap();
        assert!((alpha - 6.67e-3).abs() < 0.01e-3);
        let tau = alpha_to_delay(&config(alpha, 0.0)).unwrap();
        assert!((tau - 93e-15).abs() < 1e-22);
    }

    #[test]
    fn shear_inverse_recovers_target_delta_y() {
        let gamma = shear_to_gamma(40e-6, 4.18e-3).unwrap();
        assert!((gamma - 9.57e-3).abs() < 0.01e-3);
        let s = gamma_to_shear(&config(0.0, gamma)).unwrap();
        assert!((s.delta_y_m - 40e-6).abs() < 1e-18);
        // horizontal shift is second order: ~0.19 um here
        assert!((s.delta_x_m - 0.191e-6).abs() < 0.001e-6);
        // leading order: delta_x ~ delta_y^2 / (2 D), slightly above it
        let leading = s.delta_y_m * s.delta_y_m / (2.0 * 4.18e-3);
        assert!(s.delta_x_m >= leading);
        assert!(s.delta_x_m <= leading * (1.0 + 1e-4));
    }

    #[test]
    fn out_of_range_angles_rejected() {
        assert!(matches!(
            alpha_to_delay(&config(0.15, 0.0)),
            Err(GeometryError::SmallAngleViolation { .. })
        ));
        assert!(matches!(
            gamma_to_shear(&config(0.0, -0.1)),
            Err(GeometryError::SmallAngleViolation { .. })
        ));
        assert!(shear_to_gamma(1e-2, 4.18e-3).is_err());
    }

    #[test]
    fn fringe_period_values() {
        // boundary case of the collimation constraint
        match fringe_period(2.757, 1e-3, 700e-9, 0.1) {
            FringePeriod::Period(p) => assert!((p - 2.0e-3).abs() < 1e-6),
            _ => panic!("expected finite period"),
        }
        match fringe_period(0.9, 0.5e-3, 700e-9, 0.1) {
            FringePeriod::Period(p) => assert!((p - 1.4e-3).abs() < 1e-9),
            _ => panic!("expected finite period"),
        }
        assert_eq!(
            fringe_period(1.0, 0.0, 700e-9, 0.1),
            FringePeriod::NoSpatialFringes
        );
    }

    #[test]
    fn fringe_period_linear_in_curvature_plus_distance() {
        let p1 = match fringe_period(1.0, 0.4e-3, 700e-9, 0.2) {
            FringePeriod::Period(p) => p,
            _ => unreachable!(),
        };
        let p2 = match fringe_period(2.0, 0.4e-3, 700e-9, 0.4) {
            FringePeriod::Period(p) => p,
            _ => unreachable!(),
        };
        assert!((p2 - 2.0 * p1).abs() < 1e-12);
    }

    #[test]
    fn collimation_bound_matches_worked_example() {
        let r = min_collimation_radius(1e-3, 2e-3, 700e-9, 0.1);
        assert!((r - 2.757).abs() < 0.01);
        let r2 = min_collimation_radius(0.5e-3, 2e-3, 700e-9, 0.1);
        assert!((r2 - 1.329).abs() < 0.01);
        // vacuously satisfied constraint
        assert_eq!(min_collimation_radius(1e-6, 1e-6, 700e-9, 0.1), 0.0);
    }

    #[test]
    fn collimation_and_fringe_period_consistent() {
        let (dy, phi, lam, d) = (1e-3, 2e-3, 700e-9, 0.1);
        let rmin = min_collimation_radius(dy, phi, lam, d);
        for eps in [1e-6, 1e-3, 1.0] {
            match fringe_period(rmin + eps, dy, lam, d) {
                FringePeriod::Period(p) => assert!(p > phi),
                _ => panic!(),
            }
        }
    }
}
