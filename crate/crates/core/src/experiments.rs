//! The MA(4) time-series study: standard-deviation estimates of the rescaled
//! mean from i.i.d. and stationary resampling, repeated over independent
//! series.

use rand::RngCore;

use crate::engine::{blb_run, bootstrap_run, stationary_blb_run, BlbConfig, BootstrapScheme, Clock, StationaryConfig, SubsetSize};
use crate::error::{invalid, Result};
use crate::estimators::RescaledMean;
use crate::quality::Assessor;
use crate::resampling::{Purpose, RngStream};
use crate::simgen::gen_ma_series;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesMethod {
    Bootstrap,
    Blb,
    StationaryBootstrap,
    StationaryBlb,
}

impl SeriesMethod {
    pub const ALL: [SeriesMethod; 4] =
        [SeriesMethod::Bootstrap, SeriesMethod::Blb, SeriesMethod::StationaryBootstrap, SeriesMethod::StationaryBlb];

    pub fn label(&self) -> &'static str {
        match self {
            SeriesMethod::Bootstrap => "boot",
            SeriesMethod::Blb => "blb",
            SeriesMethod::StationaryBootstrap => "stationary-boot",
            SeriesMethod::StationaryBlb => "sblb",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesExperiment {
    pub n: usize,
    pub gamma: f64,
    pub p: f64,
    pub s: usize,
    pub r: usize,
    pub trials: usize,
    pub master_seed: u64,
    pub parallelism: usize,
}

impl Default for SeriesExperiment {
    fn default() -> Self {
        Self { n: 5000, gamma: 0.7, p: 0.1, s: 10, r: 100, trials: 10, master_seed: 0, parallelism: 1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesRow {
    pub method: SeriesMethod,
    pub estimates: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation across trials (0 for a single trial).
    pub sd: f64,
}

/// One standard-error estimate of the rescaled mean per trial and method.
/// Trial `t` uses its own series and its own resampling seed.
pub fn run_series_experiment(exp: &SeriesExperiment, methods: &[SeriesMethod]) -> Result<Vec<SeriesRow>> {
    if exp.trials == 0 {
        return Err(invalid("trials must be at least 1"));
    }
    let mut estimates = vec![Vec::with_capacity(exp.trials); methods.len()];
    for t in 0..exp.trials as u64 {
        let mut rng = RngStream::from_parts(exp.master_seed, Purpose::Dataset, t, 0);
        let series = gen_ma_series(exp.n, &mut rng)?;
        let seed = rng.next_u64();
        for (m, out) in methods.iter().zip(estimates.iter_mut()) {
            let stationary = |size: SubsetSize, s: usize| StationaryConfig {
                size,
                s,
                r: exp.r,
                p: exp.p,
                master_seed: seed,
                parallelism: exp.parallelism,
                clock: Clock::Frozen,
            };
            let run = match m {
                SeriesMethod::Bootstrap => {
                    bootstrap_run(&series, &RescaledMean, &Assessor::Stderr, exp.r, BootstrapScheme::MultinomialFull, seed, Clock::Frozen)?
                }
                SeriesMethod::Blb => {
                    let cfg = BlbConfig {
                        size: SubsetSize::Gamma(exp.gamma),
                        s: exp.s,
                        r: exp.r,
                        master_seed: seed,
                        parallelism: exp.parallelism,
                        clock: Clock::Frozen,
                        ..BlbConfig::default()
                    };
                    blb_run(&series, &RescaledMean, &Assessor::Stderr, &cfg)?
                }
                SeriesMethod::StationaryBootstrap => {
                    stationary_blb_run(&series, &Assessor::Stderr, &stationary(SubsetSize::Explicit(exp.n), 1))?
                }
                SeriesMethod::StationaryBlb => {
                    stationary_blb_run(&series, &Assessor::Stderr, &stationary(SubsetSize::Gamma(exp.gamma), exp.s))?
                }
            };
            out.push(run.quality.values[0]);
        }
    }
    Ok(methods
        .iter()
        .zip(estimates)
        .map(|(&method, estimates)| {
            let k = estimates.len() as f64;
            let mean = estimates.iter().sum::<f64>() / k;
            let sd = if estimates.len() > 1 {
                (estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt()
            } else {
                0.0
            };
            SeriesRow { method, estimates, mean, sd }
        })
        .collect())
}
