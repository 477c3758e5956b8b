//! Synthetic data generators and the Monte Carlo ground-truth oracle.

use rand::Rng;
use rand_distr::{Bernoulli, Distribution, Gamma, Normal, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, ObservationMatrix, TaskKind, TimeSeries};
use crate::engine::parallel_map;
use crate::error::{invalid, Error, Result};
use crate::estimators::{sigmoid, Estimator};
use crate::quality::{Assessor, EstimateEnsemble, QualityVector};
use crate::resampling::{Purpose, RngStream, SeedTuple};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimTask {
    Regression,
    Classification,
    TimeseriesMa,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CovariateDist {
    #[default]
    Normal,
    StudentT,
    GammaSkewed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResponseModel {
    #[default]
    Linear,
    Quadratic,
    /// `xᵀ1 / √d`.
    ScaledLinear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseDist {
    /// Normal with variance 10.
    #[default]
    NormalVar10,
    /// Gamma(1, 2) − 2.
    CenteredGamma,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub task: SimTask,
    pub covariates: CovariateDist,
    pub response: ResponseModel,
    pub n: usize,
    pub d: usize,
    pub noise: NoiseDist,
}

impl GeneratorSpec {
    pub fn regression(n: usize, d: usize) -> Self {
        Self {
            task: SimTask::Regression,
            covariates: CovariateDist::Normal,
            response: ResponseModel::Linear,
            n,
            d,
            noise: NoiseDist::NormalVar10,
        }
    }

    pub fn classification(n: usize, d: usize) -> Self {
        Self { task: SimTask::Classification, ..Self::regression(n, d) }
    }

    pub fn timeseries(n: usize) -> Self {
        Self { task: SimTask::TimeseriesMa, d: 1, ..Self::regression(n, 1) }
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.d == 0 {
            return Err(invalid(format!("generator needs n ≥ 1 and d ≥ 1 (n={}, d={})", self.n, self.d)));
        }
        Ok(())
    }

    /// Regression or classification dataset according to `task`.
    pub fn generate_table(&self, rng: &mut RngStream) -> Result<ObservationMatrix> {
        match self.task {
            SimTask::Regression => gen_regression(self, rng),
            SimTask::Classification => gen_classification(self, rng),
            SimTask::TimeseriesMa => Err(invalid("time-series spec does not produce a table")),
        }
    }

    pub fn generate_series(&self, rng: &mut RngStream) -> Result<TimeSeries> {
        match self.task {
            SimTask::TimeseriesMa => gen_ma_series(self.n, rng),
            _ => Err(invalid("tabular spec does not produce a time series")),
        }
    }
}

/// Shape of the Gamma covariate in (0-based) column `j`.
pub fn gamma_shape(j: usize, d: usize) -> f64 {
    1.0 + 5.0 * j as f64 / (d.max(2) - 1) as f64
}

/// `n×d` covariates, row-major, every coordinate mean zero.
pub fn gen_covariates(spec: &GeneratorSpec, rng: &mut RngStream) -> Result<Vec<f64>> {
    spec.validate()?;
    let (n, d) = (spec.n, spec.d);
    let mut out = Vec::with_capacity(n * d);
    match spec.covariates {
        CovariateDist::Normal => out.extend((0..n * d).map(|_| rng.sample::<f64, _>(StandardNormal))),
        CovariateDist::StudentT => {
            let t = StudentT::new(3.0).expect("valid dof");
            out.extend((0..n * d).map(|_| t.sample(rng)));
        }
        CovariateDist::GammaSkewed => {
            let cols: Vec<(Gamma<f64>, f64)> = (0..d)
                .map(|j| {
                    let shape = gamma_shape(j, d);
                    (Gamma::new(shape, 2.0).expect("valid gamma"), 2.0 * shape)
                })
                .collect();
            for _ in 0..n {
                for (g, mean) in &cols {
                    out.push(g.sample(rng) - mean);
                }
            }
        }
    }
    Ok(out)
}

/// Noise-free mean of the regression response (or the logit for
/// classification).
pub fn linear_predictor(x: &[f64], model: ResponseModel) -> f64 {
    let sum: f64 = x.iter().sum();
    match model {
        ResponseModel::Linear => sum,
        ResponseModel::Quadratic => sum + x.iter().map(|v| v * v).sum::<f64>(),
        ResponseModel::ScaledLinear => sum / (x.len() as f64).sqrt(),
    }
}

fn sample_noise(noise: NoiseDist, rng: &mut RngStream) -> f64 {
    match noise {
        NoiseDist::NormalVar10 => Normal::new(0.0, 10f64.sqrt()).expect("valid normal").sample(rng),
        NoiseDist::CenteredGamma => Gamma::new(1.0, 2.0).expect("valid gamma").sample(rng) - 2.0,
    }
}

pub fn gen_regression(spec: &GeneratorSpec, rng: &mut RngStream) -> Result<ObservationMatrix> {
    if spec.task != SimTask::Regression {
        return Err(invalid("gen_regression needs a regression spec"));
    }
    let x = gen_covariates(spec, rng)?;
    let y = x
        .chunks_exact(spec.d)
        .map(|row| linear_predictor(row, spec.response) + sample_noise(spec.noise, rng))
        .collect();
    ObservationMatrix::new(x, y, spec.d, TaskKind::Regression)
}

pub fn gen_classification(spec: &GeneratorSpec, rng: &mut RngStream) -> Result<ObservationMatrix> {
    if spec.task != SimTask::Classification {
        return Err(invalid("gen_classification needs a classification spec"));
    }
    let x = gen_covariates(spec, rng)?;
    let y = x
        .chunks_exact(spec.d)
        .map(|row| {
            let p = sigmoid(linear_predictor(row, spec.response));
            if Bernoulli::new(p).expect("probability in [0, 1]").sample(rng) {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    ObservationMatrix::new(x, y, spec.d, TaskKind::Classification)
}

/// `Xₜ = Zₜ + Zₜ₋₁ + … + Zₜ₋₄` from `n + 4` innovations (the first four are
/// burn-in).
pub fn ma_from_innovations(z: &[f64]) -> Result<TimeSeries> {
    if z.len() < 5 {
        return Err(invalid("need at least 5 innovations"));
    }
    TimeSeries::new(z.windows(5).map(|w| w.iter().sum()).collect())
}

pub fn gen_ma_series(n: usize, rng: &mut RngStream) -> Result<TimeSeries> {
    if n == 0 {
        return Err(invalid("series length must be at least 1"));
    }
    let z: Vec<f64> = (0..n + 4).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    ma_from_innovations(&z)
}

/// Stream used for realization `i` of a ground-truth computation.
pub fn realization_stream(master_seed: u64, i: usize) -> RngStream {
    RngStream::from_parts(master_seed, Purpose::Realization, i as u64, 0)
}

/// ξ(Qₙ(P)) approximated from `num_realizations` independent datasets, the
/// estimator fitted once on each.
pub fn ground_truth<D, E, G>(
    generate: G,
    estimator: &E,
    assessor: &Assessor,
    num_realizations: usize,
    master_seed: u64,
    parallelism: usize,
) -> Result<QualityVector>
where
    D: Dataset,
    E: Estimator<D> + ?Sized,
    G: Fn(&mut RngStream) -> Result<D> + Sync + Send,
{
    if num_realizations < 2 {
        return Err(invalid("ground truth needs at least 2 realizations"));
    }
    let thetas = parallel_map(parallelism.max(1), 0..num_realizations, |i| {
        let seed = SeedTuple::new(master_seed, Purpose::Realization, i as u64, 0);
        let data = generate(&mut RngStream::new(seed))?;
        let n = data.len();
        let rows: Vec<usize> = (0..n).collect();
        estimator
            .estimate(&data, &rows, &vec![1.0; n])
            .map_err(|e| Error::ResampleFailed { seed, source: Box::new(e) })
    });
    let mut ensemble: Option<EstimateEnsemble> = None;
    for theta in thetas {
        let theta = theta?;
        ensemble.get_or_insert_with(|| EstimateEnsemble::with_capacity(theta.len(), num_realizations)).push(&theta)?;
    }
    assessor.assess(&ensemble.ok_or(Error::EmptyEnsemble)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{ParameterEstimate, RescaledMean};

    fn stream(k: u64) -> RngStream {
        RngStream::from_parts(99, Purpose::Dataset, k, 0)
    }

    fn mean_var(v: &[f64]) -> (f64, f64) {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        (m, v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64)
    }

    #[test]
    fn gamma_covariate_d1_centered() {
        let spec = GeneratorSpec { covariates: CovariateDist::GammaSkewed, ..GeneratorSpec::regression(100_000, 1) };
        assert_eq!(gamma_shape(0, 1), 1.0);
        let x = gen_covariates(&spec, &mut stream(0)).unwrap();
        let (m, v) = mean_var(&x);
        assert!((v - 4.0).abs() < 0.2, "variance {v}");
        assert!(m.abs() <= 3.0 * (v / x.len() as f64).sqrt(), "mean {m}");
    }

    #[test]
    fn gamma_shapes_span_one_to_six() {
        assert_eq!(gamma_shape(0, 5), 1.0);
        assert_eq!(gamma_shape(4, 5), 6.0);
    }

    #[test]
    fn all_covariate_modes_zero_mean_and_normal_unit_variance() {
        for dist in [CovariateDist::Normal, CovariateDist::StudentT, CovariateDist::GammaSkewed] {
            let spec = GeneratorSpec { covariates: dist, ..GeneratorSpec::regression(40_000, 3) };
            let x = gen_covariates(&spec, &mut stream(1)).unwrap();
            for j in 0..3 {
                let col: Vec<f64> = x.iter().skip(j).step_by(3).copied().collect();
                let (m, v) = mean_var(&col);
                // StudentT(3) has variance 3; its sample variance is itself heavy-tailed
                let true_var = match dist {
                    CovariateDist::Normal => 1.0,
                    CovariateDist::StudentT => 3.0,
                    CovariateDist::GammaSkewed => 4.0 * gamma_shape(j, 3),
                };
                assert!(m.abs() <= 3.0 * (true_var / col.len() as f64).sqrt(), "{dist:?} col {j} mean {m}");
                if dist == CovariateDist::Normal {
                    // var of sample variance for N(0,1): 2/(n−1)
                    assert!((v - 1.0).abs() <= 3.0 * (2.0 / (col.len() - 1) as f64).sqrt(), "variance {v}");
                }
            }
        }
    }

    #[test]
    fn response_models_noise_free() {
        assert_eq!(linear_predictor(&[0.0, 1.0, 0.0], ResponseModel::Linear), 1.0);
        assert_eq!(linear_predictor(&[2.0, 0.0], ResponseModel::Quadratic), 6.0);
        assert!((linear_predictor(&[1.0; 4], ResponseModel::ScaledLinear) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn regression_noise_variance() {
        let spec = GeneratorSpec::regression(100_000, 2);
        let m = gen_regression(&spec, &mut stream(2)).unwrap();
        let resid: Vec<f64> =
            (0..m.n()).map(|i| m.response(i) - linear_predictor(m.row(i), ResponseModel::Linear)).collect();
        let (mean, var) = mean_var(&resid);
        // sd of a normal sample variance: σ²·√(2/(n−1))
        assert!((var - 10.0).abs() <= 3.0 * 10.0 * (2.0 / (resid.len() - 1) as f64).sqrt(), "var {var}");
        assert!(mean.abs() <= 3.0 * (10.0 / resid.len() as f64).sqrt());
    }

    #[test]
    fn centered_gamma_noise_zero_mean() {
        let spec = GeneratorSpec { noise: NoiseDist::CenteredGamma, ..GeneratorSpec::regression(100_000, 1) };
        let m = gen_regression(&spec, &mut stream(3)).unwrap();
        let resid: Vec<f64> = (0..m.n()).map(|i| m.response(i) - m.row(i)[0]).collect();
        let (mean, _) = mean_var(&resid);
        assert!(mean.abs() <= 3.0 * (4.0 / resid.len() as f64).sqrt());
    }

    #[test]
    fn classification_rates() {
        let n = 100_000;
        let spec = GeneratorSpec::classification(n, 2);
        let m = gen_classification(&spec, &mut stream(4)).unwrap();
        assert!(m.responses().iter().all(|&y| y == 0.0 || y == 1.0));
        // x = 0 ⇒ success probability ½, checked through the sampler directly
        let half = Bernoulli::new(sigmoid(linear_predictor(&[0.0, 0.0], ResponseModel::Linear))).unwrap();
        let mut rng = stream(5);
        let hits = (0..n).filter(|_| half.sample(&mut rng)).count() as f64 / n as f64;
        assert!((hits - 0.5).abs() <= 3.0 * (0.25 / n as f64).sqrt());
        let p = sigmoid(2.0);
        assert!((p - 0.8808).abs() < 1e-4);
        let b = Bernoulli::new(sigmoid(linear_predictor(&[1.0, 1.0], ResponseModel::Linear))).unwrap();
        let hits = (0..n).filter(|_| b.sample(&mut rng)).count() as f64 / n as f64;
        assert!((hits - p).abs() <= 3.0 * (p * (1.0 - p) / n as f64).sqrt());
    }

    #[test]
    fn ma_series_moments() {
        let n = 100_000;
        let s = gen_ma_series(n, &mut stream(6)).unwrap();
        let v = s.values();
        let (m, var) = mean_var(v);
        // long-run variance of the mean is 25/n; var of the sample variance of an
        // MA(4) is 2·Σ_h γ(h)²/n = 2·(25 + 2·(16+9+4+1))/n = 170/n
        assert!(m.abs() <= 3.0 * (25.0 / n as f64).sqrt());
        assert!((var - 5.0).abs() <= 3.0 * (170.0 / n as f64).sqrt(), "var {var}");
        let acov = |h: usize| v.iter().zip(&v[h..]).map(|(a, b)| (a - m) * (b - m)).sum::<f64>() / (n - h) as f64;
        assert!((acov(1) - 4.0).abs() < 0.15, "lag1 {}", acov(1));
        assert!(acov(5).abs() < 0.15 && acov(7).abs() < 0.15);
    }

    #[test]
    fn ma_all_ones() {
        let s = ma_from_innovations(&[1.0; 12]).unwrap();
        assert_eq!(s.values(), &[5.0; 8]);
    }

    #[test]
    fn generators_are_deterministic() {
        let spec = GeneratorSpec { covariates: CovariateDist::StudentT, ..GeneratorSpec::classification(300, 4) };
        assert_eq!(spec.generate_table(&mut stream(7)).unwrap(), spec.generate_table(&mut stream(7)).unwrap());
    }

    struct Constant;

    impl Estimator<TimeSeries> for Constant {
        fn name(&self) -> &str {
            "constant"
        }

        fn estimate(&self, _: &TimeSeries, _: &[usize], _: &[f64]) -> Result<ParameterEstimate> {
            Ok(vec![4.0])
        }
    }

    #[test]
    fn ground_truth_constant_and_parallel() {
        let spec = GeneratorSpec::timeseries(50);
        let gen = |rng: &mut RngStream| spec.generate_series(rng);
        let q = ground_truth(gen, &Constant, &Assessor::default(), 20, 1, 1).unwrap();
        assert_eq!(q.values, vec![0.0]);
        let a = ground_truth(gen, &RescaledMean, &Assessor::Stderr, 64, 1, 1).unwrap();
        let b = ground_truth(gen, &RescaledMean, &Assessor::Stderr, 64, 1, 4).unwrap();
        assert_eq!(a, b);
        assert!(ground_truth(gen, &RescaledMean, &Assessor::Stderr, 1, 1, 1).is_err());
    }
}
