//! Stationary BLB for time series: block subsamples, stationary-bootstrap
//! resamples of nominal length `n`, rescaled-mean statistic.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, TimeSeries};
use crate::error::{invalid, Error, Result};
use crate::estimators::{Estimator, RescaledMean};
use crate::quality::{average_quality, Assessor, EstimateEnsemble, QualityVector, TraceRecord};
use crate::resampling::{draw_block_subsample, stationary_counts, Purpose, RngStream, SeedTuple};

use super::{parallel_map, Clock, RunOutput, Stopwatch, SubsetSize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationaryConfig {
    pub size: SubsetSize,
    pub s: usize,
    pub r: usize,
    /// Restart probability of the stationary bootstrap.
    pub p: f64,
    pub master_seed: u64,
    pub parallelism: usize,
    pub clock: Clock,
}

impl Default for StationaryConfig {
    fn default() -> Self {
        Self {
            size: SubsetSize::Gamma(0.7),
            s: 10,
            r: 100,
            p: 0.1,
            master_seed: 0,
            parallelism: 1,
            clock: Clock::Wall,
        }
    }
}

/// With `size = Explicit(n)` and `s = 1` this is the plain stationary
/// bootstrap of the rescaled mean.
pub fn stationary_blb_run(series: &TimeSeries, assessor: &Assessor, cfg: &StationaryConfig) -> Result<RunOutput> {
    let n = series.len();
    let b = cfg.size.resolve(n)?;
    if cfg.s == 0 || cfg.r == 0 || cfg.parallelism == 0 {
        return Err(invalid("s, r and parallelism must be at least 1"));
    }
    if !(cfg.p > 0.0 && cfg.p <= 1.0) {
        return Err(invalid(format!("restart probability p={} must lie in (0, 1]", cfg.p)));
    }
    let watch = Stopwatch::start(cfg.clock);
    let job = |j: usize| -> Result<(QualityVector, Instant)> {
        let mut rng = RngStream::from_parts(cfg.master_seed, Purpose::Subsample, j as u64, 0);
        let block = draw_block_subsample(n, b, &mut rng)?;
        let mut ensemble = EstimateEnsemble::with_capacity(1, cfg.r);
        for k in 0..cfg.r {
            let seed = SeedTuple::new(cfg.master_seed, Purpose::Resample, j as u64, k as u64);
            let counts = stationary_counts(b, n, cfg.p, &mut RngStream::new(seed))?;
            let weights: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
            let theta = RescaledMean
                .estimate(series, block.indices(), &weights)
                .map_err(|e| Error::ResampleFailed { seed, source: Box::new(e) })?;
            ensemble.push(&theta)?;
        }
        Ok((assessor.assess(&ensemble)?, Instant::now()))
    };
    let outcomes = parallel_map(cfg.parallelism, 0..cfg.s, job);
    let mut results = Vec::with_capacity(cfg.s);
    let mut trace = Vec::with_capacity(cfg.s);
    let mut latest = 0.0f64;
    for outcome in outcomes {
        let (q, finished) = outcome?;
        latest = latest.max(watch.since(finished));
        results.push(q);
        trace.push(TraceRecord {
            method: "sblb".into(),
            gamma: cfg.size.gamma(),
            iteration: results.len(),
            elapsed: latest,
            quality: average_quality(&results)?,
            relative_error: None,
        });
    }
    let quality = trace.last().map(|t| t.quality.clone()).ok_or(Error::EmptyEnsemble)?;
    Ok(RunOutput { quality, trace, subsamples: cfg.s, resamples: cfg.s * cfg.r })
}
