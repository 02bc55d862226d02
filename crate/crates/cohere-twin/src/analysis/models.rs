//! The two coherence fit kernels with analytic gradients.

use super::lm::FitModel;
use crate::specfun::{jinc_signed, jinc_signed_deriv};

/// V(x) = V0 exp(-x^2 / (2 delta^2)); params = [V0, delta].
pub struct GaussianCoherenceModel;

impl FitModel for GaussianCoherenceModel {
    const N_PARAMS: usize = 2;

    fn eval(&self, x: f64, p: &[f64]) -> f64 {
        let (v0, delta) = (p[0], p[1]);
        let u = x / delta;
        v0 * (-0.5 * u * u).exp()
    }

    fn gradient(&self, x: f64, p: &[f64], out: &mut [f64]) {
        let (v0, delta) = (p[0], p[1]);
        let u = x / delta;
        let e = (-0.5 * u * u).exp();
        out[0] = e;
        out[1] = v0 * e * x * x / (delta * delta * delta);
    }

    fn param_names(&self) -> &'static [&'static str] {
        &["scale_V0", "delta_m"]
    }
}

/// V(x) = V0 |2 J1(z)/z| with z = k r x; params = [V0, r].
///
/// `scale_k` is 2 pi / (f lambda0) when x is a physical shear, or
/// 2 pi / f when x is the reduced coordinate delta_y / lambda.
pub struct CircCoherenceModel {
    pub scale_k: f64,
}

impl FitModel for CircCoherenceModel {
    const N_PARAMS: usize = 2;

    fn eval(&self, x: f64, p: &[f64]) -> f64 {
        let (v0, r) = (p[0], p[1]);
        v0 * jinc_signed(self.scale_k * r * x).abs()
    }

    fn gradient(&self, x: f64, p: &[f64], out: &mut [f64]) {
        let (v0, r) = (p[0], p[1]);
        let z = self.scale_k * r * x;
        let w = jinc_signed(z);
        out[0] = w.abs();
        // d|w|/dr = sign(w) w'(z) dz/dr; the kink at w = 0 has measure zero
        let sign = if w < 0.0 { -1.0 } else { 1.0 };
        out[1] = v0 * sign * jinc_signed_deriv(z).expect("finite z") * self.scale_k * x;
    }

    fn param_names(&self) -> &'static [&'static str] {
        &["scale_V0", "radius_r_m"]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn central_diff<M: FitModel>(m: &M, x: f64, p: &[f64], j: usize) -> f64 {
        let h = 1e-6 * p[j].abs().max(1e-3);
        let mut lo = p.to_vec();
        let mut hi = p.to_vec();
        lo[j] -= h;
        hi[j] += h;
        (m.eval(x, &hi) - m.eval(x, &lo)) / (2.0 * h)
    }

    #[test]
    fn gaussian_gradient_matches_fd() {
        let m = GaussianCoherenceModel;
        let p = [0.9, 230e-6];
        let mut g = [0.0; 2];
        for &x in &[10e-6, 150e-6, 400e-6] {
            m.gradient(x, &p, &mut g);
            for j in 0..2 {
                let fd = central_diff(&m, x, &p, j);
                let denom = fd.abs().max(g[j].abs()).max(1e-12);
                assert!((fd - g[j]).abs() / denom < 1e-6, "x={x} j={j}");
            }
        }
    }

    #[test]
    fn circ_gradient_matches_fd() {
        let m = CircCoherenceModel {
            scale_k: 2.0 * std::f64::consts::PI / (0.5 * 680e-9),
        };
        let p = [0.95, 0.5e-3];
        let mut g = [0.0; 2];
        for &x in &[20e-6, 120e-6, 300e-6, 500e-6] {
            m.gradient(x, &p, &mut g);
            for j in 0..2 {
                let fd = central_diff(&m, x, &p, j);
                let denom = fd.abs().max(g[j].abs()).max(1e-9);
                assert!((fd - g[j]).abs() / denom < 1e-5, "x={x} j={j}: {fd} vs {}", g[j]);
            }
        }
    }
}
