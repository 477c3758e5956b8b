//! Quality-assessment procedures: the Bag of Little Bootstraps, its stationary
//! time-series variant, and the bootstrap / b-out-of-n / subsampling
//! baselines, together with the fluctuation test used for adaptive `r` and `s`.

mod baselines;
mod blb;
mod convergence;
mod stationary;

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::quality::{QualityVector, TraceRecord};

pub use baselines::{bofn_run, bootstrap_run, subsampling_run, BootstrapScheme};
pub use blb::{blb_inner, blb_run, InnerMode, InnerResult};
pub use convergence::converged;
pub use stationary::{stationary_blb_run, StationaryConfig};

/// Subset size given either directly or as an exponent `b = ⌈n^γ⌉`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SubsetSize {
    Gamma(f64),
    Explicit(usize),
}

impl SubsetSize {
    pub fn resolve(&self, n: usize) -> Result<usize> {
        let b = match *self {
            SubsetSize::Gamma(g) => {
                if !(g > 0.0 && g <= 1.0) {
                    return Err(invalid(format!("gamma must lie in (0, 1], got {g}")));
                }
                let x = (n as f64).powf(g);
                let nearest = x.round();
                // n^γ that is an integer up to rounding noise should not round up
                if (x - nearest).abs() <= 1e-9 * nearest.max(1.0) {
                    nearest as usize
                } else {
                    x.ceil() as usize
                }
            }
            SubsetSize::Explicit(b) => b,
        };
        if b == 0 || b > n {
            return Err(invalid(format!("subset size b={b} must lie in [1, n={n}]")));
        }
        Ok(b)
    }

    pub fn gamma(&self) -> Option<f64> {
        match *self {
            SubsetSize::Gamma(g) => Some(g),
            SubsetSize::Explicit(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SubsampleMode {
    #[default]
    Uniform,
    Disjoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveConfig {
    pub epsilon_r: f64,
    pub window_r: usize,
    pub epsilon_s: f64,
    pub window_s: usize,
    pub r_max: usize,
    pub s_max: usize,
}

impl Default for AdaptiveConfig {
    fn default() -> Self {
        Self { epsilon_r: 0.05, window_r: 20, epsilon_s: 0.05, window_s: 3, r_max: 500, s_max: 100 }
    }
}

impl AdaptiveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon_r > 0.0 && self.epsilon_s > 0.0) {
            return Err(invalid("adaptive epsilons must be positive"));
        }
        if self.window_r == 0 || self.window_s == 0 {
            return Err(invalid("adaptive windows must be at least 1"));
        }
        if self.r_max < self.window_r + 1 || self.s_max < self.window_s + 1 {
            return Err(invalid("adaptive caps must exceed their windows"));
        }
        Ok(())
    }
}

/// Source of the `elapsed` column in traces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Clock {
    /// Monotonic wall-clock seconds since the run started.
    #[default]
    Wall,
    /// Always zero; keeps traces byte-reproducible.
    Frozen,
}

pub(crate) struct Stopwatch {
    clock: Clock,
    start: Instant,
}

impl Stopwatch {
    pub(crate) fn start(clock: Clock) -> Self {
        Self { clock, start: Instant::now() }
    }

    pub(crate) fn elapsed(&self) -> f64 {
        self.since(Instant::now())
    }

    pub(crate) fn since(&self, at: Instant) -> f64 {
        match self.clock {
            Clock::Wall => at.saturating_duration_since(self.start).as_secs_f64(),
            Clock::Frozen => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlbConfig {
    pub size: SubsetSize,
    pub s: usize,
    pub r: usize,
    pub mode: SubsampleMode,
    pub adaptive: Option<AdaptiveConfig>,
    pub master_seed: u64,
    pub parallelism: usize,
    pub clock: Clock,
}

impl Default for BlbConfig {
    fn default() -> Self {
        Self {
            size: SubsetSize::Gamma(0.7),
            s: 10,
            r: 100,
            mode: SubsampleMode::Uniform,
            adaptive: None,
            master_seed: 0,
            parallelism: 1,
            clock: Clock::Wall,
        }
    }
}

impl BlbConfig {
    pub fn validate(&self, n: usize) -> Result<usize> {
        let b = self.size.resolve(n)?;
        if self.s == 0 || self.r == 0 || self.parallelism == 0 {
            return Err(invalid("s, r and parallelism must be at least 1"));
        }
        if let Some(a) = &self.adaptive {
            a.validate()?;
        }
        Ok(b)
    }
}

/// Final assessment plus the trajectory that produced it.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub quality: QualityVector,
    pub trace: Vec<TraceRecord>,
    /// Subsamples processed (1 for full-data baselines).
    pub subsamples: usize,
    /// Estimator fits performed on resamples.
    pub resamples: usize,
}

/// Runs `job(i)` for `i` in `range`, on `parallelism` worker threads, and
/// returns results in index order.
pub(crate) fn parallel_map<T, F>(parallelism: usize, range: std::ops::Range<usize>, job: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    if parallelism <= 1 || range.len() <= 1 {
        return range.map(job).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(parallelism).build() {
        Ok(pool) => pool.install(|| range.into_par_iter().map(&job).collect()),
        Err(_) => range.map(job).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_sizes() {
        assert_eq!(SubsetSize::Gamma(0.5).resolve(10_000).unwrap(), 100);
        assert_eq!(SubsetSize::Gamma(0.7).resolve(2_000).unwrap(), 205);
        assert_eq!(SubsetSize::Gamma(0.5).resolve(2_000).unwrap(), 45);
        assert_eq!(SubsetSize::Gamma(1.0).resolve(37).unwrap(), 37);
        assert!(SubsetSize::Gamma(0.0).resolve(10).is_err());
        assert!(SubsetSize::Explicit(11).resolve(10).is_err());
    }

    #[test]
    fn parallel_map_keeps_order() {
        let v = parallel_map(4, 0..100, |i| i * i);
        assert_eq!(v, (0..100).map(|i| i * i).collect::<Vec<_>>());
    }

    #[test]
    fn adaptive_validation() {
        assert!(AdaptiveConfig::default().validate().is_ok());
        assert!(AdaptiveConfig { r_max: 20, ..AdaptiveConfig::default() }.validate().is_err());
        assert!(AdaptiveConfig { epsilon_s: 0.0, ..AdaptiveConfig::default() }.validate().is_err());
    }
}
