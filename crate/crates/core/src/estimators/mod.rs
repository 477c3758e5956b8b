//! Weight-aware estimators.
//!
//! Every estimator consumes a list of row indices together with nonnegative
//! weights aligned to those rows. Integer weights behave exactly like
//! physically replicating rows, which is what lets a resample of nominal size
//! `n` be processed at the cost of its distinct rows only.

mod lbfgs;
mod linalg;
mod logistic;
mod ridge;

use serde::{Deserialize, Serialize};

use crate::data::{ObservationMatrix, TimeSeries};
use crate::error::{invalid, Result};

pub use lbfgs::{minimize_lbfgs, LbfgsOptions};
pub use logistic::{
    fit_weighted_logistic_newton, fit_weighted_logistic_quasinewton, log1p_exp, logistic_value_gradient,
    newton_report, quasinewton_report, sigmoid,
};
pub use ridge::fit_weighted_ridge;

/// A point estimate θ̂.
pub type ParameterEstimate = Vec<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    /// λ in the `λ‖θ‖²` penalty.
    pub penalty: f64,
    /// Gradient max-norm at which iterative fits stop.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Number of correction pairs kept by the quasi-Newton fit.
    pub memory: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self { penalty: 1e-5, tolerance: 1e-8, max_iterations: 100, memory: 10 }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.penalty >= 0.0) || !(self.tolerance > 0.0) || self.max_iterations == 0 || self.memory == 0 {
            return Err(invalid(format!("invalid fit configuration {self:?}")));
        }
        Ok(())
    }
}

/// Outcome of an iterative fit.
#[derive(Debug, Clone)]
pub struct FitReport {
    pub theta: Vec<f64>,
    pub iterations: usize,
    pub grad_norm: f64,
    /// Objective value at the start and after every accepted step.
    pub objective: Vec<f64>,
}

pub(crate) fn check_weights(rows: &[usize], weights: &[f64], require_positive_total: bool) -> Result<()> {
    if rows.len() != weights.len() {
        return Err(invalid(format!("{} rows but {} weights", rows.len(), weights.len())));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(invalid("weights must be finite and nonnegative"));
    }
    if require_positive_total && !(weights.iter().sum::<f64>() > 0.0) {
        return Err(invalid("weights must have a positive sum"));
    }
    Ok(())
}

/// θ̂ applied to a weighted selection of rows.
pub trait Estimator<D: ?Sized>: Sync {
    fn name(&self) -> &str;

    fn estimate(&self, data: &D, rows: &[usize], weights: &[f64]) -> Result<ParameterEstimate>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Ridge(pub FitConfig);

impl Estimator<ObservationMatrix> for Ridge {
    fn name(&self) -> &str {
        "ridge"
    }

    fn estimate(&self, data: &ObservationMatrix, rows: &[usize], weights: &[f64]) -> Result<ParameterEstimate> {
        fit_weighted_ridge(data, rows, weights, &self.0)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LogisticNewton(pub FitConfig);

impl Estimator<ObservationMatrix> for LogisticNewton {
    fn name(&self) -> &str {
        "logistic-newton"
    }

    fn estimate(&self, data: &ObservationMatrix, rows: &[usize], weights: &[f64]) -> Result<ParameterEstimate> {
        fit_weighted_logistic_newton(data, rows, weights, &self.0)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LogisticQuasiNewton(pub FitConfig);

impl Estimator<ObservationMatrix> for LogisticQuasiNewton {
    fn name(&self) -> &str {
        "logistic-lbfgs"
    }

    fn estimate(&self, data: &ObservationMatrix, rows: &[usize], weights: &[f64]) -> Result<ParameterEstimate> {
        fit_weighted_logistic_quasinewton(data, rows, weights, &self.0)
    }
}

/// `Σ xₜ / √n`.
pub fn rescaled_mean(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(invalid("rescaled mean of an empty series"));
    }
    Ok(values.iter().sum::<f64>() / (values.len() as f64).sqrt())
}

/// Rescaled mean of a weighted series: `Σ wₜ xₜ / √(Σ wₜ)`, which equals
/// [`rescaled_mean`] of the series with row `t` replicated `wₜ` times.
#[derive(Debug, Clone, Copy, Default)]
pub struct RescaledMean;

impl Estimator<TimeSeries> for RescaledMean {
    fn name(&self) -> &str {
        "rescaled-mean"
    }

    fn estimate(&self, data: &TimeSeries, rows: &[usize], weights: &[f64]) -> Result<ParameterEstimate> {
        check_weights(rows, weights, true)?;
        let values = data.values();
        let (mut sum, mut total) = (0.0, 0.0);
        for (&t, &w) in rows.iter().zip(weights) {
            sum += w * values[t];
            total += w;
        }
        Ok(vec![sum / total.sqrt()])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rescaled_mean_cases() {
        assert_eq!(rescaled_mean(&[1.0; 4]).unwrap(), 2.0);
        assert_eq!(rescaled_mean(&[0.0; 7]).unwrap(), 0.0);
        assert!(rescaled_mean(&[]).is_err());
    }

    #[test]
    fn rescaled_mean_vs_kahan() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        let v: Vec<f64> = (0..10_000).map(|_| rng.random::<f64>() * 2.0 - 0.9).collect();
        let (mut sum, mut comp) = (0.0f64, 0.0f64);
        for &x in &v {
            let y = x - comp;
            let t = sum + y;
            comp = (t - sum) - y;
            sum = t;
        }
        let oracle = sum / (v.len() as f64).sqrt();
        let got = rescaled_mean(&v).unwrap();
        assert!((got - oracle).abs() <= 1e-12 * oracle.abs());
    }

    #[test]
    fn weighted_rescaled_mean_matches_replication() {
        let s = TimeSeries::new(vec![1.0, -2.0, 0.5]).unwrap();
        let w = RescaledMean.estimate(&s, &[0, 1, 2], &[2.0, 1.0, 3.0]).unwrap()[0];
        let replicated = rescaled_mean(&[1.0, 1.0, -2.0, 0.5, 0.5, 0.5]).unwrap();
        assert!((w - replicated).abs() < 1e-15);
    }

    #[test]
    fn fit_config_validation() {
        assert!(FitConfig::default().validate().is_ok());
        assert!(FitConfig { penalty: -1.0, ..FitConfig::default() }.validate().is_err());
        assert!(FitConfig { max_iterations: 0, ..FitConfig::default() }.validate().is_err());
    }
}
