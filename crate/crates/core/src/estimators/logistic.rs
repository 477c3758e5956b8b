//! L2-penalized weighted logistic regression (no intercept).

use crate::data::{ObservationMatrix, TaskKind};
use crate::error::{invalid, Error, Result};

use super::lbfgs::{minimize_lbfgs, LbfgsOptions};
use super::linalg::{cholesky_solve, dot, max_norm, rank_one_lower, symmetrize_from_lower};
use super::{check_weights, FitConfig, FitReport};

/// Logistic function, branch-stable for large `|z|`.
#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(z))` without overflow.
#[inline]
pub fn log1p_exp(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Objective `Σ wᵢ [log(1+exp(xᵢᵀθ)) − yᵢ xᵢᵀθ] + λ‖θ‖²` and its gradient.
pub fn logistic_value_gradient(
    theta: &[f64],
    data: &ObservationMatrix,
    rows: &[usize],
    weights: &[f64],
    penalty: f64,
) -> (f64, Vec<f64>) {
    let mut value = penalty * dot(theta, theta);
    let mut grad: Vec<f64> = theta.iter().map(|t| 2.0 * penalty * t).collect();
    for (&i, &w) in rows.iter().zip(weights) {
        if w == 0.0 {
            continue;
        }
        let x = data.row(i);
        let y = data.response(i);
        let z = dot(x, theta);
        value += w * (log1p_exp(z) - y * z);
        let coef = w * (sigmoid(z) - y);
        for (g, xj) in grad.iter_mut().zip(x) {
            *g += coef * xj;
        }
    }
    (value, grad)
}

fn hessian(theta: &[f64], data: &ObservationMatrix, rows: &[usize], weights: &[f64], penalty: f64) -> Vec<f64> {
    let d = theta.len();
    let mut h = vec![0.0; d * d];
    for (&i, &w) in rows.iter().zip(weights) {
        if w == 0.0 {
            continue;
        }
        let x = data.row(i);
        let s = sigmoid(dot(x, theta));
        rank_one_lower(&mut h, x, w * s * (1.0 - s));
    }
    for j in 0..d {
        h[j * d + j] += 2.0 * penalty;
    }
    symmetrize_from_lower(&mut h, d);
    h
}

fn check_inputs(data: &ObservationMatrix, rows: &[usize], weights: &[f64], cfg: &FitConfig) -> Result<()> {
    if data.kind() != TaskKind::Classification {
        return Err(invalid("logistic regression needs a classification dataset"));
    }
    if !(cfg.penalty > 0.0) {
        return Err(invalid("logistic fits need a strictly positive penalty"));
    }
    check_weights(rows, weights, false)
}

/// Damped Newton with Armijo backtracking.
pub fn fit_weighted_logistic_newton(
    data: &ObservationMatrix,
    rows: &[usize],
    weights: &[f64],
    cfg: &FitConfig,
) -> Result<Vec<f64>> {
    newton_report(data, rows, weights, cfg).map(|r| r.theta)
}

pub fn newton_report(
    data: &ObservationMatrix,
    rows: &[usize],
    weights: &[f64],
    cfg: &FitConfig,
) -> Result<FitReport> {
    check_inputs(data, rows, weights, cfg)?;
    let d = data.d();
    let eval = |t: &[f64]| logistic_value_gradient(t, data, rows, weights, cfg.penalty);
    let mut theta = vec![0.0; d];
    let (mut value, mut grad) = eval(&theta);
    let mut objective = vec![value];
    for iter in 0..cfg.max_iterations {
        let gnorm = max_norm(&grad);
        if gnorm <= cfg.tolerance {
            return Ok(FitReport { theta, iterations: iter, grad_norm: gnorm, objective });
        }
        let mut h = hessian(&theta, data, rows, weights, cfg.penalty);
        let neg_grad: Vec<f64> = grad.iter().map(|g| -g).collect();
        let step = cholesky_solve(&mut h, &neg_grad)?;
        let slope = dot(&grad, &step);
        let slack = 1e-12 * (1.0 + value.abs());
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let cand: Vec<f64> = theta.iter().zip(&step).map(|(a, s)| a + t * s).collect();
            let (v, g) = eval(&cand);
            let armijo = v <= value + 1e-4 * t * slope;
            // below rounding resolution the value can't certify progress;
            // fall back on the gradient
            let flat = v <= value + slack && max_norm(&g) < gnorm;
            if armijo || flat {
                accepted = Some((cand, v, g));
                break;
            }
            t *= 0.5;
        }
        match accepted {
            Some((cand, v, g)) => {
                theta = cand;
                value = v;
                grad = g;
                objective.push(value);
            }
            None => {
                return Err(Error::NoConvergence { iterations: iter, grad_norm: gnorm, last: theta });
            }
        }
    }
    let gnorm = max_norm(&grad);
    if gnorm <= cfg.tolerance {
        Ok(FitReport { theta, iterations: cfg.max_iterations, grad_norm: gnorm, objective })
    } else {
        Err(Error::NoConvergence { iterations: cfg.max_iterations, grad_norm: gnorm, last: theta })
    }
}

/// Limited-memory quasi-Newton fit of the same objective.
pub fn fit_weighted_logistic_quasinewton(
    data: &ObservationMatrix,
    rows: &[usize],
    weights: &[f64],
    cfg: &FitConfig,
) -> Result<Vec<f64>> {
    quasinewton_report(data, rows, weights, cfg).map(|r| r.theta)
}

pub fn quasinewton_report(
    data: &ObservationMatrix,
    rows: &[usize],
    weights: &[f64],
    cfg: &FitConfig,
) -> Result<FitReport> {
    check_inputs(data, rows, weights, cfg)?;
    let opts = LbfgsOptions { memory: cfg.memory, tolerance: cfg.tolerance, max_iterations: cfg.max_iterations };
    minimize_lbfgs(
        |t| logistic_value_gradient(t, data, rows, weights, cfg.penalty),
        vec![0.0; data.d()],
        &opts,
    )
}
