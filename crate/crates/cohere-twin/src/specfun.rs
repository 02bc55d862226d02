//! Special functions for the coherence kernels: J1 and the jinc kernel
//! 2|J1(z)/z|.
//!
//! J1 uses the ascending power series for small arguments and Miller's
//! backward recurrence with the even-order normalization sum elsewhere.
//! Both routes are validated against an exact fixed-point series oracle
//! in the test suite; the recurrence route shares no code with it.

use crate::error::ModelError;

/// First positive zero of J1 (z where the jinc kernel first vanishes).
pub const J1_FIRST_ZERO: f64 = 3.831705970207512;

/// Argument where the jinc kernel equals 1/2, used for fit initialization.
pub const JINC_HALF_POINT: f64 = 2.2150893677242326;

const SERIES_CUTOVER: f64 = 2.0;

/// J1 via the ascending series; accurate near the origin where the
/// terms do not cancel.
fn j1_series(z: f64) -> f64 {
    let half = 0.5 * z;
    let q = -half * half;
    let mut term = half;
    let mut sum = term;
    let mut k = 0.0f64;
    loop {
        k += 1.0;
        term *= q / (k * (k + 1.0));
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-30) {
            return sum;
        }
    }
}

/// J1 for x > 2 by Miller's backward recurrence
/// j_{n-1} = (2n/x) j_n - j_{n+1}, normalized with J0 + 2 sum J_{2k} = 1.
fn j1_miller(x: f64) -> f64 {
    let start = (x + 14.0 * x.cbrt() + 40.0) as usize;
    let m = start + (start & 1); // even start order
    let mut jp = 0.0f64; // j_{n+1}
    let mut jc = 1e-30f64; // j_n
    let mut j1 = 0.0;
    let mut norm = 0.0;
    let mut n = m;
    while n > 0 {
        let jm = (2.0 * n as f64 / x) * jc - jp;
        jp = jc;
        jc = jm;
        n -= 1;
        if n == 1 {
            j1 = jc;
        }
        if n % 2 == 0 && n > 0 {
            norm += 2.0 * jc;
        }
        if jc.abs() > 1e250 {
            jp /= 1e250;
            jc /= 1e250;
            j1 /= 1e250;
            norm /= 1e250;
        }
    }
    norm += jc; // j_0
    j1 / norm
}

/// Bessel function of the first kind, order one.
///
/// Absolute error <= 1e-12 over |z| <= 50 (validated against the exact
/// series oracle in twin-oracles).
pub fn bessel_j1(z: f64) -> Result<f64, ModelError> {
    if !z.is_finite() {
        return Err(ModelError::NonFinite {
            name: "z",
            value: z,
        });
    }
    Ok(j1_finite(z))
}

pub(crate) fn j1_finite(z: f64) -> f64 {
    let a = z.abs();
    let v = if a <= SERIES_CUTOVER {
        j1_series(a)
    } else {
        j1_miller(a)
    };
    if z < 0.0 {
        -v
    } else {
        v
    }
}

/// The jinc coherence kernel 2|J1(z)/z|, with the analytic limit 1 at
/// z = 0. Even, bounded by 1, and equal to 1 only at the origin.
pub fn jinc(z: f64) -> Result<f64, ModelError> {
    if !z.is_finite() {
        return Err(ModelError::NonFinite {
            name: "z",
            value: z,
        });
    }
    Ok(jinc_finite(z))
}

pub(crate) fn jinc_finite(z: f64) -> f64 {
    let a = z.abs();
    if a < 1e-3 {
        // Taylor expansion of 2 J1(z)/z, avoids 0/0 at the origin.
        let z2 = a * a;
        return 1.0 - z2 / 8.0 + z2 * z2 / 192.0 - z2 * z2 * z2 / 9216.0;
    }
    (2.0 * j1_finite(a) / a).abs()
}

/// Signed kernel 2 J1(z)/z (no absolute value); what the jinc kernel
/// looks like before the modulus, needed for its derivative.
pub(crate) fn jinc_signed(z: f64) -> f64 {
    let a = z.abs();
    if a < 1e-3 {
        let z2 = a * a;
        return 1.0 - z2 / 8.0 + z2 * z2 / 192.0 - z2 * z2 * z2 / 9216.0;
    }
    2.0 * j1_finite(a) / a
}

/// Derivative of the signed kernel: d/dz [2 J1(z)/z] = -2 J2(z)/z,
/// with J2 from the recurrence J2 = 2 J1/z - J0. Odd in z.
pub fn jinc_signed_deriv(z: f64) -> Result<f64, ModelError> {
    if !z.is_finite() {
        return Err(ModelError::NonFinite {
            name: "z",
            value: z,
        });
    }
    let a = z.abs();
    let v = if a < 1e-3 {
        let z2 = a * a;
        -a / 4.0 + a * z2 / 48.0 - a * z2 * z2 / 1536.0
    } else {
        let j1 = j1_finite(a);
        let j0 = j0_finite(a);
        let j2 = 2.0 * j1 / a - j0;
        -2.0 * j2 / a
    };
    Ok(if z < 0.0 { -v } else { v })
}

/// J0, needed only for the kernel derivative. Same two routes as J1.
pub(crate) fn j0_finite(z: f64) -> f64 {
    let a = z.abs();
    if a <= SERIES_CUTOVER {
        let q = -0.25 * a * a;
        let mut term = 1.0f64;
        let mut sum = term;
        let mut k = 0.0f64;
        loop {
            k += 1.0;
            term *= q / (k * k);
            sum += term;
            if term.abs() < 1e-18 * sum.abs().max(1e-30) {
                return sum;
            }
        }
    }
    j0_miller(a)
}

fn j0_miller(x: f64) -> f64 {
    let start = (x + 14.0 * x.cbrt() + 40.0) as usize;
    let m = start + (start & 1);
    let mut jp = 0.0f64;
    let mut jc = 1e-30f64;
    let mut norm = 0.0;
    let mut n = m;
    while n > 0 {
        let jm = (2.0 * n as f64 / x) * jc - jp;
        jp = jc;
        jc = jm;
        n -= 1;
        if n % 2 == 0 && n > 0 {
            norm += 2.0 * jc;
        }
        if jc.abs() > 1e250 {
            jp /= 1e250;
            jc /= 1e250;
            norm /= 1e250;
        }
    }
    jc / (norm + jc)
}
