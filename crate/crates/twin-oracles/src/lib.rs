//! Independent reference implementations used by the `cohere-twin` test
//! suites. Nothing in here shares code with the library under test: the
//! Bessel oracle is a fixed-point big-integer power series, and the
//! correlation oracle is adaptive quadrature of the defining integral.

use num_bigint::BigInt;
use num_traits::ToPrimitive;

/// Fraction bits of the fixed-point big-integer scratch arithmetic.
///
/// The alternating series for J1 suffers catastrophic cancellation: at
/// z = 50 the largest term is ~2^69 while the result is O(1). 256
/// fraction bits leave ~180 bits of headroom past the cancellation,
/// far more than the 1e-12 oracle tolerance requires.
const FRAC_BITS: i64 = 256;

fn fixed_from_f64(x: f64) -> BigInt {
    if x == 0.0 {
        return BigInt::from(0);
    }
    let bits = x.to_bits();
    let sign = if bits >> 63 == 1 { -1 } else { 1 };
    let exp_raw = ((bits >> 52) & 0x7ff) as i64;
    let mantissa = bits & ((1u64 << 52) - 1);
    let (m, e) = if exp_raw == 0 {
        (mantissa, -1074i64)
    } else {
        (mantissa | (1u64 << 52), exp_raw - 1075)
    };
    let mut v = BigInt::from(m) * sign;
    let shift = FRAC_BITS + e;
    if shift >= 0 {
        v <<= shift as u32;
    } else {
        v >>= (-shift) as u32;
    }
    v
}

fn fixed_to_f64(v: &BigInt) -> f64 {
    // BigInt::to_f64 rounds to nearest; the scale factor 2^-256 is exact.
    v.to_f64().unwrap() * (2f64).powi(-(FRAC_BITS as i32))
}

fn fixed_mul(a: &BigInt, b: &BigInt) -> BigInt {
    (a * b) >> (FRAC_BITS as u32)
}

/// Power-series oracle for the Bessel function J1, evaluated in exact
/// fixed-point arithmetic:
///
///   J1(z) = sum_k (-1)^k (z/2)^(2k+1) / (k! (k+1)!)
///
/// Valid wherever the series converges; intended for |z| <= 60, where the
/// 256 fraction bits absorb the cancellation with >1e-40 to spare.
pub fn bessel_j1_series(z: f64) -> f64 {
    assert!(z.is_finite() && z.abs() <= 60.0, "oracle range is |z| <= 60");
    let zf = fixed_from_f64(z);
    let z2_over_4 = fixed_mul(&zf, &zf) >> 2u32;
    // t_0 = z/2; t_{k+1} = -t_k * (z^2/4) / ((k+1)(k+2))
    let mut term = zf >> 1u32;
    let mut sum = term.clone();
    let cutoff = BigInt::from(1) << 16u32; // |term| < 2^-(FRAC-16) terminates
    for k in 0u64.. {
        term = -fixed_mul(&term, &z2_over_4) / BigInt::from((k + 1) * (k + 2));
        if term.magnitude() < cutoff.magnitude() {
            break;
        }
        sum += &term;
    }
    fixed_to_f64(&sum)
}

/// 2|J1(z)/z| with the z = 0 limit, via the series oracle.
pub fn jinc_series(z: f64) -> f64 {
    if z == 0.0 {
        return 1.0;
    }
    (2.0 * bessel_j1_series(z) / z).abs()
}

/// First positive zero of J1, to full double precision (reference value).
pub const J1_FIRST_ZERO: f64 = 3.831705970207512;

/// Adaptive Simpson quadrature with absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), fm)
    }
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (left, flm) = simpson(f, a, fa, m, fm);
        let (right, frm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, fa, m, fm, left, flm, 0.5 * tol, depth - 1)
                + recurse(f, m, fm, b, fb, right, frm, 0.5 * tol, depth - 1)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let (whole, fm) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, whole, fm, tol, 48)
}

/// Quadrature oracle for the SPDC spatial correlation: the normalized
/// pump-overlap integral
///
///   g(dy) = int A(u) A(u - dy) du / int A(u)^2 du,
///   A(u)  = exp(-(pi w u / (lambda0 f))^2)
///
/// evaluated by adaptive Simpson, independent of any closed form.
pub fn g_spatial_quadrature(delta_y: f64, pump_waist: f64, lambda0: f64, focal_f: f64) -> f64 {
    let scale = lambda0 * focal_f / (std::f64::consts::PI * pump_waist);
    let amp = |u: f64| (-(u / scale) * (u / scale)).exp();
    let half_width = 10.0 * scale;
    let lo = -half_width + delta_y.min(0.0);
    let hi = half_width + delta_y.max(0.0);
    let num = adaptive_simpson(&|u| amp(u) * amp(u - delta_y), lo, hi, 1e-15 * scale);
    let den = adaptive_simpson(&|u| amp(u) * amp(u), -half_width, half_width, 1e-15 * scale);
    num / den
}

/// Analytic magnitude of the normalized Fourier transform of a Gaussian
/// spectral density with standard deviation `sigma_nu` (Hz):
/// |FT|(tau) = exp(-2 pi^2 sigma_nu^2 tau^2).
pub fn gaussian_transform_abs(sigma_nu: f64, tau: f64) -> f64 {
    (-2.0 * std::f64::consts::PI.powi(2) * sigma_nu.powi(2) * tau.powi(2)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_small_arguments_match_hand_values() {
        // J1(1) and J1(2) from standard tables (Abramowitz & Stegun 9.4).
        assert!((bessel_j1_series(1.0) - 0.4400505857449335).abs() < 1e-15);
        assert!((bessel_j1_series(2.0) - 0.5767248077568734).abs() < 1e-15);
        assert!(bessel_j1_series(0.0) == 0.0);
    }

    #[test]
    fn series_is_odd() {
        for &z in &[0.3, 1.7, 9.4, 33.0, 50.0] {
            assert_eq!(bessel_j1_series(z), -bessel_j1_series(-z));
        }
    }

    #[test]
    fn series_vanishes_at_first_zero() {
        assert!(bessel_j1_series(J1_FIRST_ZERO).abs() < 1e-14);
    }

    #[test]
    fn simpson_integrates_gaussian() {
        let v = adaptive_simpson(&|x: f64| (-x * x).exp(), -20.0, 20.0, 1e-14);
        assert!((v - std::f64::consts::PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn overlap_oracle_is_normalized() {
        let g0 = g_spatial_quadrature(0.0, 560e-6, 810e-9, 0.5);
        assert!((g0 - 1.0).abs() < 1e-12);
    }
}
