use std::time::Instant;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::estimators::Estimator;
use crate::quality::{average_quality, Assessor, EstimateEnsemble, QualityVector, TraceRecord};
use crate::resampling::{
    draw_subsample, multinomial_counts, IndexSubset, Partition, Purpose, RngStream, Sampling, SeedTuple,
    WeightedResample,
};

use super::convergence::stabilized;
use super::{parallel_map, BlbConfig, RunOutput, SubsampleMode, Stopwatch};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InnerMode {
    Fixed(usize),
    /// Grow `r` until the ξ series passes the fluctuation test or hits `r_max`.
    Adaptive { epsilon: f64, window: usize, r_max: usize },
}

#[derive(Debug, Clone)]
pub struct InnerResult {
    pub quality: QualityVector,
    pub resamples: usize,
    /// ξ after each resample; only filled in adaptive mode.
    pub xi_series: Vec<QualityVector>,
}

/// Bootstraps one subsample: resamples of nominal size `n` drawn as
/// multinomial counts over the subsample's `b` rows.
///
/// Streams are keyed by `(master_seed, Resample, subsample_index, k)`.
#[allow(clippy::too_many_arguments)]
pub fn blb_inner<D, E>(
    data: &D,
    subsample: &IndexSubset,
    estimator: &E,
    assessor: &Assessor,
    mode: InnerMode,
    master_seed: u64,
    subsample_index: u64,
) -> Result<InnerResult>
where
    D: Dataset + ?Sized,
    E: Estimator<D> + ?Sized,
{
    let n = data.len() as u64;
    let b = subsample.len();
    let cap = match mode {
        InnerMode::Fixed(r) => r,
        InnerMode::Adaptive { r_max, .. } => r_max,
    };
    let mut ensemble: Option<EstimateEnsemble> = None;
    let mut xi_series = Vec::new();
    for k in 0..cap {
        let seed = SeedTuple::new(master_seed, Purpose::Resample, subsample_index, k as u64);
        let counts = multinomial_counts(n, b, &mut RngStream::new(seed))?;
        let resample = WeightedResample::from_counts(subsample.indices(), &counts, n as usize);
        let theta = estimator
            .estimate(data, &resample.rows, &resample.weights())
            .map_err(|e| Error::ResampleFailed { seed, source: Box::new(e) })?;
        let ens = ensemble.get_or_insert_with(|| EstimateEnsemble::with_capacity(theta.len(), cap));
        ens.push(&theta).map_err(|e| Error::ResampleFailed { seed, source: Box::new(e) })?;
        if let InnerMode::Adaptive { epsilon, window, .. } = mode {
            if ens.r() >= assessor.min_ensemble() {
                xi_series.push(assessor.assess(ens)?);
                if xi_series.len() > window && stabilized(&xi_series, window, epsilon) {
                    break;
                }
            }
        }
    }
    let ensemble = ensemble.ok_or(Error::EmptyEnsemble)?;
    let quality = match mode {
        InnerMode::Adaptive { .. } if !xi_series.is_empty() => xi_series.last().unwrap().clone(),
        _ => assessor.assess(&ensemble)?,
    };
    Ok(InnerResult { quality, resamples: ensemble.r(), xi_series })
}

/// Averages per-subsample assessments over `s` subsamples of size `b`.
/// Subsample jobs run on `cfg.parallelism` threads; results are aggregated in
/// subsample order so the output does not depend on the thread count.
pub fn blb_run<D, E>(data: &D, estimator: &E, assessor: &Assessor, cfg: &BlbConfig) -> Result<RunOutput>
where
    D: Dataset + ?Sized,
    E: Estimator<D> + ?Sized,
{
    let n = data.len();
    let b = cfg.validate(n)?;
    let partition = match cfg.mode {
        SubsampleMode::Uniform => None,
        SubsampleMode::Disjoint => {
            if cfg.adaptive.is_none() && cfg.s * b > n {
                return Err(Error::PartitionExhausted { slot: cfg.s, b, n, needed: cfg.s * b });
            }
            Some(Partition::new(n, cfg.master_seed))
        }
    };
    let inner_mode = match &cfg.adaptive {
        Some(a) => InnerMode::Adaptive { epsilon: a.epsilon_r, window: a.window_r, r_max: a.r_max },
        None => InnerMode::Fixed(cfg.r),
    };
    let s_cap = match (&cfg.adaptive, &partition) {
        (Some(a), Some(_)) => a.s_max.min(n / b),
        (Some(a), None) => a.s_max,
        (None, _) => cfg.s,
    };

    let watch = Stopwatch::start(cfg.clock);
    let job = |j: usize| -> Result<(InnerResult, Instant)> {
        let mut rng = RngStream::from_parts(cfg.master_seed, Purpose::Subsample, j as u64, 0);
        let sampling = match &partition {
            Some(p) => Sampling::Disjoint { partition: p, slot: j + 1 },
            None => Sampling::Uniform,
        };
        let subsample = draw_subsample(n, b, sampling, &mut rng)?;
        let res = blb_inner(data, &subsample, estimator, assessor, inner_mode, cfg.master_seed, j as u64)?;
        Ok((res, Instant::now()))
    };

    let mut results: Vec<QualityVector> = Vec::new();
    let mut running: Vec<QualityVector> = Vec::new();
    let mut trace = Vec::new();
    let mut resamples = 0;
    let mut latest = 0.0f64;
    let batch = if cfg.adaptive.is_some() { cfg.parallelism } else { s_cap };
    let mut next = 0;
    'outer: while next < s_cap {
        let end = (next + batch).min(s_cap);
        let outcomes = parallel_map(cfg.parallelism, next..end, job);
        for outcome in outcomes {
            let (res, finished) = outcome?;
            latest = latest.max(watch.since(finished));
            resamples += res.resamples;
            results.push(res.quality);
            let avg = average_quality(&results)?;
            trace.push(TraceRecord {
                method: "blb".into(),
                gamma: cfg.size.gamma(),
                iteration: results.len(),
                elapsed: latest,
                quality: avg.clone(),
                relative_error: None,
            });
            running.push(avg);
            if let Some(a) = &cfg.adaptive {
                if running.len() > a.window_s && stabilized(&running, a.window_s, a.epsilon_s) {
                    break 'outer;
                }
            }
        }
        next = end;
    }
    let quality = running.last().cloned().ok_or(Error::EmptyEnsemble)?;
    Ok(RunOutput { quality, trace, subsamples: results.len(), resamples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{ObservationMatrix, TaskKind, TimeSeries};
    use crate::engine::{AdaptiveConfig, Clock, SubsetSize};
    use crate::estimators::{ParameterEstimate, RescaledMean, Ridge};

    struct Constant(f64);

    impl Estimator<TimeSeries> for Constant {
        fn name(&self) -> &str {
            "constant"
        }

        fn estimate(&self, _: &TimeSeries, _: &[usize], _: &[f64]) -> Result<ParameterEstimate> {
            Ok(vec![self.0])
        }
    }

    struct Failing;

    impl Estimator<TimeSeries> for Failing {
        fn name(&self) -> &str {
            "failing"
        }

        fn estimate(&self, _: &TimeSeries, _: &[usize], _: &[f64]) -> Result<ParameterEstimate> {
            Err(Error::RankDeficient)
        }
    }

    fn series(n: usize) -> TimeSeries {
        TimeSeries::new((0..n).map(|i| ((i * 7919) % 113) as f64 / 10.0).collect()).unwrap()
    }

    fn cfg() -> BlbConfig {
        BlbConfig { s: 4, r: 30, master_seed: 5, clock: Clock::Frozen, ..BlbConfig::default() }
    }

    #[test]
    fn constant_estimator_has_zero_width() {
        let data = series(50);
        let res = blb_inner(&data, &IndexSubset::full(50), &Constant(2.5), &Assessor::default(), InnerMode::Fixed(1), 0, 0)
            .unwrap();
        assert_eq!(res.quality.values, vec![0.0]);
        assert_eq!(res.quality.lower, Some(vec![2.5]));
    }

    #[test]
    fn failure_carries_seed() {
        let data = series(20);
        let err = blb_run(&data, &Failing, &Assessor::default(), &cfg()).unwrap_err();
        match err {
            Error::ResampleFailed { seed, .. } => {
                assert_eq!(seed.master, 5);
                assert_eq!(seed.resample, 0);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn single_subsample_equals_inner() {
        let data = series(400);
        let c = BlbConfig { s: 1, ..cfg() };
        let out = blb_run(&data, &RescaledMean, &Assessor::Stderr, &c).unwrap();
        let b = c.size.resolve(400).unwrap();
        let sub = draw_subsample(400, b, Sampling::Uniform, &mut RngStream::from_parts(5, Purpose::Subsample, 0, 0))
            .unwrap();
        let inner = blb_inner(&data, &sub, &RescaledMean, &Assessor::Stderr, InnerMode::Fixed(30), 5, 0).unwrap();
        assert_eq!(out.quality, inner.quality);
        assert_eq!(out.trace.len(), 1);
    }

    #[test]
    fn trace_is_running_average() {
        let data = series(300);
        let out = blb_run(&data, &RescaledMean, &Assessor::Stderr, &cfg()).unwrap();
        assert_eq!(out.trace.len(), 4);
        assert_eq!(out.resamples, 120);
        let firsts: Vec<QualityVector> = (0..4)
            .map(|j| {
                let b = cfg().size.resolve(300).unwrap();
                let sub = draw_subsample(
                    300,
                    b,
                    Sampling::Uniform,
                    &mut RngStream::from_parts(5, Purpose::Subsample, j, 0),
                )
                .unwrap();
                blb_inner(&data, &sub, &RescaledMean, &Assessor::Stderr, InnerMode::Fixed(30), 5, j).unwrap().quality
            })
            .collect();
        for (k, rec) in out.trace.iter().enumerate() {
            assert_eq!(rec.iteration, k + 1);
            assert_eq!(rec.quality, average_quality(&firsts[..=k]).unwrap());
        }
    }

    #[test]
    fn parallel_matches_serial() {
        let data = series(500);
        let serial = blb_run(&data, &RescaledMean, &Assessor::default(), &cfg()).unwrap();
        let par = blb_run(&data, &RescaledMean, &Assessor::default(), &BlbConfig { parallelism: 4, ..cfg() }).unwrap();
        assert_eq!(serial.quality, par.quality);
        assert_eq!(serial.trace, par.trace);
    }

    #[test]
    fn disjoint_mode_checks_capacity() {
        let data = series(100);
        let c = BlbConfig { size: SubsetSize::Explicit(30), s: 4, mode: SubsampleMode::Disjoint, ..cfg() };
        assert!(matches!(
            blb_run(&data, &RescaledMean, &Assessor::Stderr, &c),
            Err(Error::PartitionExhausted { .. })
        ));
        let c = BlbConfig { s: 3, ..c };
        assert!(blb_run(&data, &RescaledMean, &Assessor::Stderr, &c).is_ok());
    }

    #[test]
    fn adaptive_inner_stops_at_first_converged_index() {
        let rows: Vec<Vec<f64>> = (0..200).map(|i| vec![1.0, ((i * 37) % 17) as f64 / 8.0 - 1.0]).collect();
        let y = rows.iter().enumerate().map(|(i, r)| r[1] + ((i * 13) % 7) as f64 / 3.0).collect();
        let data = ObservationMatrix::from_rows(&rows, y, TaskKind::Regression).unwrap();
        let sub = IndexSubset::full(200);
        let mode = InnerMode::Adaptive { epsilon: 0.05, window: 20, r_max: 400 };
        let ridge = Ridge::default();
        let res = blb_inner(&data, &sub, &ridge, &Assessor::default(), mode, 3, 0).unwrap();
        // replay: recompute ξ after each resample of a fixed-r run
        let full = blb_inner(&data, &sub, &ridge, &Assessor::default(), InnerMode::Fixed(400), 3, 0).unwrap();
        assert!(full.xi_series.is_empty());
        let mut ens = EstimateEnsemble::new(2);
        let mut series = Vec::new();
        let mut stop = None;
        for k in 0..400u64 {
            let seed = SeedTuple::new(3, Purpose::Resample, 0, k);
            let counts = multinomial_counts(200, 200, &mut RngStream::new(seed)).unwrap();
            let w: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
            let rows: Vec<usize> = (0..200).collect();
            ens.push(&ridge.estimate(&data, &rows, &w).unwrap()).unwrap();
            series.push(Assessor::default().assess(&ens).unwrap());
            if series.len() > 20 && crate::engine::converged(&series, 20, 0.05).unwrap() {
                stop = Some(k as usize + 1);
                break;
            }
        }
        let stop = stop.expect("series converges before r_max");
        assert_eq!(res.resamples, stop);
        assert_eq!(res.xi_series.len(), stop);
        for (a, b) in res.xi_series.iter().zip(&series) {
            for (x, y) in a.values.iter().zip(&b.values) {
                assert!((x - y).abs() <= 1e-12 * y.abs());
            }
        }
    }

    #[test]
    fn adaptive_outer_stops_and_respects_cap() {
        let data = series(2000);
        let c = BlbConfig { adaptive: Some(AdaptiveConfig::default()), parallelism: 3, ..cfg() };
        let out = blb_run(&data, &RescaledMean, &Assessor::Stderr, &c).unwrap();
        assert!(out.subsamples >= 4 && out.subsamples <= 100);
        let serial = blb_run(&data, &RescaledMean, &Assessor::Stderr, &BlbConfig { parallelism: 1, ..c }).unwrap();
        assert_eq!(out.quality, serial.quality);
        assert_eq!(out.subsamples, serial.subsamples);
    }
}
