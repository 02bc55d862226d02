//! Small dense Levenberg-Marquardt engine for the two coherence-kernel
//! fits (two parameters each; no sparse machinery needed).

use crate::error::AnalysisError;

/// Parametric scalar model y = f(x; params) with analytic gradient.
pub trait FitModel {
    const N_PARAMS: usize;
    fn eval(&self, x: f64, params: &[f64]) -> f64;
    /// Writes df/dparam_j into `out` (length N_PARAMS).
    fn gradient(&self, x: f64, params: &[f64], out: &mut [f64]);
    fn param_names(&self) -> &'static [&'static str];
}

#[derive(Debug, Clone, Copy)]
pub struct LmOptions {
    pub initial_damping: f64,
    pub damping_factor: f64,
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        LmOptions {
            initial_damping: 1e-3,
            damping_factor: 10.0,
            max_iterations: 200,
            gradient_tolerance: 1e-10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LmOutcome {
    pub params: Vec<f64>,
    /// sigma^2-scaled parameter covariance (symmetric PSD).
    pub covariance: Vec<Vec<f64>>,
    /// sqrt of the weighted residual sum of squares at the solution.
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub gradient_norm: f64,
}

/// Solve A x = b in place for small symmetric systems (partial pivoting).
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    Some(x)
}

fn invert(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        cols.push(solve(a.to_vec(), e)?);
    }
    // transpose the solved columns into rows
    Some((0..n).map(|i| (0..n).map(|j| cols[j][i]).collect()).collect())
}

fn weighted_cost<M: FitModel>(
    model: &M,
    xs: &[f64],
    ys: &[f64],
    weights: &[f64],
    params: &[f64],
) -> f64 {
    xs.iter()
        .zip(ys)
        .zip(weights)
        .map(|((&x, &y), &w)| {
            let r = y - model.eval(x, params);
            w * r * r
        })
        .sum()
}

/// Weighted Levenberg-Marquardt. `weights` are 1/sigma_i^2 (unit weights
/// for unweighted fits). Returns the last iterate with `converged =
/// false` wrapped in an error only if the iteration cap is hit while the
/// gradient is still large; callers decide how to surface that.
pub fn levenberg_marquardt<M: FitModel>(
    model: &M,
    xs: &[f64],
    ys: &[f64],
    weights: &[f64],
    initial: &[f64],
    opts: &LmOptions,
) -> Result<LmOutcome, AnalysisError> {
    assert_eq!(xs.len(), ys.len());
    assert_eq!(xs.len(), weights.len());
    let n = xs.len();
    let p = M::N_PARAMS;
    if n < p {
        return Err(AnalysisError::DegenerateData(format!(
            "{n} points cannot constrain {p} parameters"
        )));
    }
    let mut params = initial.to_vec();
    let mut damping = opts.initial_damping;
    let mut cost = weighted_cost(model, xs, ys, weights, &params);
    let mut grad_norm = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;
    let mut grad_buf = vec![0.0; p];

    for iter in 0..opts.max_iterations {
        iterations = iter + 1;
        // assemble J^T W J and J^T W r
        let mut jtj = vec![vec![0.0; p]; p];
        let mut jtr = vec![0.0; p];
        for ((&x, &y), &w) in xs.iter().zip(ys).zip(weights) {
            model.gradient(x, &params, &mut grad_buf);
            let r = y - model.eval(x, &params);
            for i in 0..p {
                jtr[i] += w * grad_buf[i] * r;
                for j in 0..p {
                    jtj[i][j] += w * grad_buf[i] * grad_buf[j];
                }
            }
        }
        grad_norm = jtr.iter().fold(0.0f64, |m, &g| m.max(g.abs()));
        if grad_norm <= opts.gradient_tolerance {
            converged = true;
            break;
        }
        // damped normal equations; retry with larger damping on failure
        let mut stepped = false;
        for _ in 0..40 {
            let mut a = jtj.clone();
            for i in 0..p {
                a[i][i] += damping * jtj[i][i].max(1e-300);
            }
            if let Some(step) = solve(a, jtr.clone()) {
                let trial: Vec<f64> = params.iter().zip(&step).map(|(&v, &s)| v + s).collect();
                let trial_cost = weighted_cost(model, xs, ys, weights, &trial);
                if trial_cost.is_finite() && trial_cost < cost {
                    params = trial;
                    cost = trial_cost;
                    damping = (damping / opts.damping_factor).max(1e-14);
                    stepped = true;
                    break;
                }
            }
            damping *= opts.damping_factor;
            if damping > 1e14 {
                break;
            }
        }
        if !stepped {
            // damping exhausted without descent: no representable step
            // improves the cost, so this is a minimum in working precision
            converged = true;
            break;
        }
    }

    let dof = (n - p).max(1) as f64;
    let sigma2 = cost / dof;
    let mut jtj = vec![vec![0.0; p]; p];
    for (&x, &w) in xs.iter().zip(weights) {
        model.gradient(x, &params, &mut grad_buf);
        for i in 0..p {
            for j in 0..p {
                jtj[i][j] += w * grad_buf[i] * grad_buf[j];
            }
        }
    }
    let covariance = invert(&jtj)
        .map(|inv| {
            inv.iter()
                .map(|row| row.iter().map(|&v| v * sigma2).collect())
                .collect()
        })
        .unwrap_or_else(|| vec![vec![f64::NAN; p]; p]);

    Ok(LmOutcome {
        params,
        covariance,
        residual_norm: cost.sqrt(),
        iterations,
        converged,
        gradient_norm: grad_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Line;
    impl FitModel for Line {
        const N_PARAMS: usize = 2;
        fn eval(&self, x: f64, p: &[f64]) -> f64 {
            p[0] + p[1] * x
        }
        fn gradient(&self, x: f64, _p: &[f64], out: &mut [f64]) {
            out[0] = 1.0;
            out[1] = x;
        }
        fn param_names(&self) -> &'static [&'static str] {
            &["a", "b"]
        }
    }

    #[test]
    fn recovers_exact_line() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| 2.0 + 3.0 * x).collect();
        let w = vec![1.0; xs.len()];
        let out = levenberg_marquardt(&Line, &xs, &ys, &w, &[0.0, 0.0], &LmOptions::default())
            .unwrap();
        assert!(out.converged);
        assert!((out.params[0] - 2.0).abs() < 1e-9);
        assert!((out.params[1] - 3.0).abs() < 1e-9);
    }

    #[test]
    fn solver_rejects_singular() {
        let a = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        assert!(solve(a, vec![1.0, 2.0]).is_none());
    }

    #[test]
    fn too_few_points_is_degenerate() {
        let r = levenberg_marquardt(&Line, &[1.0], &[1.0], &[1.0], &[0.0, 0.0], &LmOptions::default());
        assert!(matches!(r, Err(AnalysisError::DegenerateData(_))));
    }
}
