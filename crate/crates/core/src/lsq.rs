//! Damped least squares (Levenberg-Marquardt) with a finite-difference
//! Jacobian, for small dense problems.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct LmOptions {
    pub max_iter: usize,
    /// Stop once an accepted step lowers the SSE by less than this fraction.
    pub rel_tol: f64,
    /// Central-difference step, relative to each parameter's scale.
    pub fd_step: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iter: 2000,
            rel_tol: 1e-12,
            fd_step: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LmReport {
    pub params: Vec<f64>,
    pub sse: f64,
    pub initial_sse: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Condition number of the scale-normalized `J^T J` at the solution.
    pub condition: f64,
}

fn sse(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

fn evaluate<F>(f: &F, x: &[f64]) -> Option<Vec<f64>>
where
    F: Fn(&[f64]) -> Option<Vec<f64>>,
{
    f(x).filter(|r| r.iter().all(|v| v.is_finite()))
}

fn jacobian<F>(f: &F, x: &[f64], r0: &[f64], scales: &[f64], step: f64) -> DMatrix<f64>
where
    F: Fn(&[f64]) -> Option<Vec<f64>>,
{
    let m = r0.len();
    let mut jac = DMatrix::zeros(m, x.len());
    let mut probe = x.to_vec();
    for j in 0..x.len() {
        let h = step * (x[j].abs() + scales[j]);
        probe[j] = x[j] + h;
        let up = evaluate(f, &probe);
        probe[j] = x[j] - h;
        let down = evaluate(f, &probe);
        probe[j] = x[j];
        match (up, down) {
            (Some(u), Some(d)) => {
                for i in 0..m {
                    jac[(i, j)] = (u[i] - d[i]) / (2.0 * h);
                }
            }
            (Some(u), None) => {
                for i in 0..m {
                    jac[(i, j)] = (u[i] - r0[i]) / h;
                }
            }
            (None, Some(d)) => {
                for i in 0..m {
                    jac[(i, j)] = (r0[i] - d[i]) / h;
                }
            }
            (None, None) => {}
        }
    }
    jac
}

fn scaled_condition(jtj: &DMatrix<f64>, scales: &[f64]) -> f64 {
    let n = jtj.nrows();
    let s = DMatrix::from_fn(n, n, |i, j| jtj[(i, j)] * scales[i] * scales[j]);
    let eig = s.symmetric_eigenvalues();
    let hi = eig.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let lo = eig.iter().fold(f64::INFINITY, |a, &b| a.min(b.abs()));
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Minimizes `sum r_i(x)^2` from `x0`.
///
/// `residuals` returns `None` where the model is undefined; such points are
/// never accepted. `scales` are typical parameter magnitudes, used for the
/// finite-difference steps and the reported condition number. The SSE never
/// increases relative to `x0`.
pub fn levenberg_marquardt<F>(
    residuals: F,
    x0: &[f64],
    scales: &[f64],
    opts: &LmOptions,
) -> Result<LmReport>
where
    F: Fn(&[f64]) -> Option<Vec<f64>>,
{
    if x0.len() != scales.len() || x0.is_empty() {
        return Err(Error::InvalidParameter(
            "parameter and scale vectors must match".into(),
        ));
    }
    let mut x = x0.to_vec();
    let mut r = evaluate(&residuals, &x)
        .ok_or_else(|| Error::NonFinite("model is undefined at the initial parameters".into()))?;
    let initial_sse = sse(&r);
    let mut cost = initial_sse;
    let n = x.len();
    let mut lambda = -1.0;
    let mut converged = false;
    let mut iterations = 0;
    let mut jtj = DMatrix::zeros(n, n);

    while iterations < opts.max_iter {
        iterations += 1;
        if cost == 0.0 {
            converged = true;
            break;
        }
        let jac = jacobian(&residuals, &x, &r, scales, opts.fd_step);
        jtj = jac.transpose() * &jac;
        let grad = jac.transpose() * DVector::from_column_slice(&r);
        let max_diag = (0..n).map(|i| jtj[(i, i)]).fold(0.0, f64::max);
        if max_diag == 0.0 {
            converged = true;
            break;
        }
        if lambda < 0.0 {
            lambda = 1e-3;
        }
        let floor = 1e-15 * max_diag;

        let mut accepted = false;
        while lambda < 1e16 {
            let mut a = jtj.clone();
            for i in 0..n {
                a[(i, i)] += lambda * jtj[(i, i)].max(floor);
            }
            let step = match a.clone().cholesky() {
                Some(ch) => ch.solve(&(-&grad)),
                None => match a.lu().solve(&(-&grad)) {
                    Some(s) => s,
                    None => {
                        lambda *= 4.0;
                        continue;
                    }
                },
            };
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            if let Some(rt) = evaluate(&residuals, &trial) {
                let ct = sse(&rt);
                if ct < cost {
                    let gain = cost - ct;
                    x = trial;
                    r = rt;
                    let previous = cost;
                    cost = ct;
                    lambda = (lambda / 3.0).max(1e-12);
                    accepted = true;
                    if gain <= opts.rel_tol * previous {
                        converged = true;
                    }
                    break;
                }
            }
            lambda *= 4.0;
        }
        if !accepted {
            // no descent direction left at machine precision
            converged = true;
            break;
        }
        if converged {
            break;
        }
    }

    Ok(LmReport {
        params: x,
        sse: cost,
        initial_sse,
        iterations,
        converged,
        condition: scaled_condition(&jtj, scales),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock_minimum() {
        let f = |p: &[f64]| Some(vec![10.0 * (p[1] - p[0] * p[0]), 1.0 - p[0]]);
        let rep = levenberg_marquardt(f, &[-1.2, 1.0], &[1.0, 1.0], &LmOptions::default()).unwrap();
        assert!((rep.params[0] - 1.0).abs() < 1e-6, "{:?}", rep);
        assert!((rep.params[1] - 1.0).abs() < 1e-6);
        assert!(rep.sse < 1e-12);
    }

    #[test]
    fn exponential_fit_recovers_parameters() {
        let ts: Vec<f64> = (0..30).map(|k| k as f64 * 0.1).collect();
        let data: Vec<f64> = ts.iter().map(|t| 2.5 * (-1.3 * t).exp()).collect();
        let f = |p: &[f64]| {
            Some(
                ts.iter()
                    .zip(&data)
                    .map(|(t, y)| p[0] * (-p[1] * t).exp() - y)
                    .collect(),
            )
        };
        let rep = levenberg_marquardt(f, &[1.0, 0.5], &[1.0, 1.0], &LmOptions::default()).unwrap();
        assert!((rep.params[0] - 2.5).abs() < 1e-8);
        assert!((rep.params[1] - 1.3).abs() < 1e-8);
        assert!(rep.sse <= rep.initial_sse);
    }

    #[test]
    fn undefined_start_is_an_error() {
        let f = |_: &[f64]| None;
        assert!(levenberg_marquardt(f, &[1.0], &[1.0], &LmOptions::default()).is_err());
    }

    #[test]
    fn flat_direction_shows_in_condition() {
        let f = |p: &[f64]| Some(vec![p[0] - 1.0, p[0] + 1.0]);
        let rep = levenberg_marquardt(f, &[3.0, 0.0], &[1.0, 1.0], &LmOptions::default()).unwrap();
        assert!(rep.condition.is_infinite());
        assert!(rep.params[0].abs() < 1e-9);
    }
}
