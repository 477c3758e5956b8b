//! Limited-memory BFGS with a strong-Wolfe line search.

use std::collections::VecDeque;

use crate::error::{Error, Result};

use super::linalg::{dot, max_norm};
use super::FitReport;

#[derive(Debug, Clone, Copy)]
pub struct LbfgsOptions {
    pub memory: usize,
    /// Stop once the gradient max-norm falls to this value.
    pub tolerance: f64,
    pub max_iterations: usize,
}

const C1: f64 = 1e-4;
const C2: f64 = 0.9;
const MAX_LINE_EVALS: usize = 60;

struct Point {
    x: Vec<f64>,
    value: f64,
    grad: Vec<f64>,
}

struct LineSearch<'a, F> {
    objective: &'a mut F,
    origin: &'a Point,
    dir: &'a [f64],
    slope0: f64,
    slack: f64,
    evals: usize,
}

impl<F: FnMut(&[f64]) -> (f64, Vec<f64>)> LineSearch<'_, F> {
    fn eval(&mut self, t: f64) -> (Point, f64) {
        self.evals += 1;
        let x: Vec<f64> = self.origin.x.iter().zip(self.dir).map(|(a, p)| a + t * p).collect();
        let (value, grad) = (self.objective)(&x);
        let slope = dot(&grad, self.dir);
        (Point { x, value, grad }, slope)
    }

    fn sufficient(&self, t: f64, value: f64, slope: f64) -> bool {
        let f0 = self.origin.value;
        // Approximate-Wolfe fallback once the decrease drops below rounding.
        value <= f0 + C1 * t * self.slope0 || (value <= f0 + self.slack && slope <= (2.0 * C1 - 1.0) * self.slope0)
    }

    fn curvature(&self, slope: f64) -> bool {
        slope.abs() <= -C2 * self.slope0
    }

    fn search(&mut self, t_init: f64) -> Option<Point> {
        let mut t_prev = 0.0;
        let mut v_prev = self.origin.value;
        let mut s_prev = self.slope0;
        let mut t = t_init;
        let mut first = true;
        while self.evals < MAX_LINE_EVALS {
            let (p, slope) = self.eval(t);
            if !p.value.is_finite() {
                t = 0.5 * (t_prev + t);
                continue;
            }
            if !self.sufficient(t, p.value, slope) || (!first && p.value >= v_prev) {
                return self.zoom((t_prev, v_prev, s_prev), (t, p.value, slope));
            }
            if self.curvature(slope) {
                return Some(p);
            }
            if slope >= 0.0 {
                return self.zoom((t, p.value, slope), (t_prev, v_prev, s_prev));
            }
            t_prev = t;
            v_prev = p.value;
            s_prev = slope;
            t *= 2.0;
            first = false;
        }
        None
    }

    fn zoom(&mut self, mut lo: (f64, f64, f64), mut hi: (f64, f64, f64)) -> Option<Point> {
        let mut best: Option<Point> = None;
        while self.evals < MAX_LINE_EVALS {
            let t = interpolate(lo, hi);
            let (p, slope) = self.eval(t);
            if !self.sufficient(t, p.value, slope) || p.value >= lo.1 {
                hi = (t, p.value, slope);
            } else {
                if self.curvature(slope) {
                    return Some(p);
                }
                if slope * (hi.0 - lo.0) >= 0.0 {
                    hi = lo;
                }
                lo = (t, p.value, slope);
                best = Some(p);
            }
            if (hi.0 - lo.0).abs() <= 1e-16 * lo.0.abs().max(1.0) {
                break;
            }
        }
        // Armijo-only point is still a descent step.
        best
    }
}

/// Safeguarded cubic interpolation between two bracket ends.
fn interpolate(lo: (f64, f64, f64), hi: (f64, f64, f64)) -> f64 {
    let (a, fa, ga) = lo;
    let (b, fb, gb) = hi;
    let d1 = ga + gb - 3.0 * (fa - fb) / (a - b);
    let disc = d1 * d1 - ga * gb;
    let (left, right) = if a < b { (a, b) } else { (b, a) };
    let margin = 0.1 * (right - left);
    if disc >= 0.0 {
        let d2 = (b - a).signum() * disc.sqrt();
        let t = b - (b - a) * (gb + d2 - d1) / (gb - ga + 2.0 * d2);
        if t.is_finite() && t > left + margin && t < right - margin {
            return t;
        }
    }
    0.5 * (a + b)
}

/// Minimizes a smooth function given value-and-gradient evaluations.
/// `FitReport::iterations` counts accepted steps.
pub fn minimize_lbfgs<F>(mut objective: F, x0: Vec<f64>, opts: &LbfgsOptions) -> Result<FitReport>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let (value, grad) = objective(&x0);
    let mut cur = Point { x: x0, value, grad };
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(opts.memory);
    let mut trace = vec![cur.value];
    for iter in 0..opts.max_iterations {
        let gnorm = max_norm(&cur.grad);
        if gnorm <= opts.tolerance {
            return Ok(FitReport { theta: cur.x, iterations: iter, grad_norm: gnorm, objective: trace });
        }
        let mut dir = two_loop(&cur.grad, &history);
        let mut slope0 = dot(&dir, &cur.grad);
        if !(slope0 < 0.0) {
            history.clear();
            dir = cur.grad.iter().map(|g| -g).collect();
            slope0 = dot(&dir, &cur.grad);
        }
        let t_init = if history.is_empty() { 1.0 / dot(&dir, &dir).sqrt().max(f64::MIN_POSITIVE) } else { 1.0 };
        let slack = 1e-12 * (1.0 + cur.value.abs());
        let next = LineSearch { objective: &mut objective, origin: &cur, dir: &dir, slope0, slack, evals: 0 }
            .search(t_init);
        let next = match next {
            Some(p) => p,
            None if !history.is_empty() => {
                history.clear();
                continue;
            }
            None => return Err(Error::NoConvergence { iterations: iter, grad_norm: gnorm, last: cur.x }),
        };
        let s: Vec<f64> = next.x.iter().zip(&cur.x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = next.grad.iter().zip(&cur.grad).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-16 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() {
            if history.len() == opts.memory {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }
        cur = next;
        trace.push(cur.value);
    }
    let gnorm = max_norm(&cur.grad);
    if gnorm <= opts.tolerance {
        Ok(FitReport { theta: cur.x, iterations: opts.max_iterations, grad_norm: gnorm, objective: trace })
    } else {
        Err(Error::NoConvergence { iterations: opts.max_iterations, grad_norm: gnorm, last: cur.x })
    }
}

fn two_loop(grad: &[f64], history: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q: Vec<f64> = grad.to_vec();
    let mut alpha = vec![0.0; history.len()];
    for (k, (s, y, rho)) in history.iter().enumerate().rev() {
        alpha[k] = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= alpha[k] * yi;
        }
    }
    if let Some((s, y, _)) = history.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for (k, (s, y, rho)) in history.iter().enumerate() {
        let beta = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (alpha[k] - beta) * si;
        }
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}
