use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use blb_core::engine::{
    blb_run, bofn_run, bootstrap_run, stationary_blb_run, subsampling_run, AdaptiveConfig, BlbConfig, BootstrapScheme,
    Clock, RunOutput, StationaryConfig, SubsampleMode, SubsetSize,
};
use blb_core::experiments::{run_series_experiment, SeriesExperiment, SeriesMethod};
use blb_core::io::{load_csv_dataset, load_series_csv, write_dataset_csv, write_series_csv, write_trace_file};
use blb_core::quality::annotate_relative_error;
use blb_core::resampling::{Purpose, RngStream};
use blb_core::simgen::{ground_truth, CovariateDist, GeneratorSpec, NoiseDist, ResponseModel, SimTask};
use blb_core::{
    relative_deviation, Assessor, Dataset, Estimator, FitConfig, LogisticNewton, LogisticQuasiNewton, ObservationMatrix,
    QualityVector, RescaledMean, Ridge, TaskKind, TimeSeries,
};
use serde::Serialize;

use crate::config::{
    usage, AssessorKind, Covariates, EstimatorKind, Method, Mode, Noise, Response, RunConfig, Task,
};

fn allow(cfg: &RunConfig, command: &str, allowed: &[&str]) -> anyhow::Result<()> {
    let extra: Vec<String> =
        cfg.set_keys().into_iter().filter(|k| !allowed.contains(k)).map(|k| format!("--{}", k.replace('_', "-"))).collect();
    if extra.is_empty() {
        Ok(())
    } else {
        Err(usage(format!("`{command}` does not accept {}", extra.join(", "))))
    }
}

fn at_least_one(name: &str, v: Option<usize>, default: usize) -> anyhow::Result<usize> {
    match v.unwrap_or(default) {
        0 => Err(usage(format!("--{name} must be at least 1"))),
        x => Ok(x),
    }
}

/// Value in (0, 1], or (0, 1) when `open_right`.
fn fraction(name: &str, v: Option<f64>, default: f64, open_right: bool) -> anyhow::Result<f64> {
    let x = v.unwrap_or(default);
    let ok = x > 0.0 && if open_right { x < 1.0 } else { x <= 1.0 };
    if ok {
        Ok(x)
    } else {
        Err(usage(format!("--{name} must lie in (0, 1{}, got {x}", if open_right { ")" } else { "]" })))
    }
}

fn positive(name: &str, v: Option<f64>, default: f64) -> anyhow::Result<f64> {
    match v.unwrap_or(default) {
        x if x > 0.0 && x.is_finite() => Ok(x),
        x => Err(usage(format!("--{name} must be positive, got {x}"))),
    }
}

fn required<'a, T>(name: &str, v: &'a Option<T>) -> anyhow::Result<&'a T> {
    v.as_ref().ok_or_else(|| usage(format!("--{name} is required")))
}

fn generator(cfg: &RunConfig) -> anyhow::Result<GeneratorSpec> {
    let task = match cfg.task.unwrap_or(Task::Regression) {
        Task::Regression => SimTask::Regression,
        Task::Classification => SimTask::Classification,
        Task::Timeseries => SimTask::TimeseriesMa,
    };
    if task == SimTask::TimeseriesMa && (cfg.d.is_some() || cfg.covariates.is_some() || cfg.response.is_some() || cfg.noise.is_some()) {
        return Err(usage("time-series generation takes only --n"));
    }
    Ok(GeneratorSpec {
        task,
        covariates: match cfg.covariates.unwrap_or(Covariates::Normal) {
            Covariates::Normal => CovariateDist::Normal,
            Covariates::StudentT => CovariateDist::StudentT,
            Covariates::GammaSkewed => CovariateDist::GammaSkewed,
        },
        response: match cfg.response.unwrap_or(Response::Linear) {
            Response::Linear => ResponseModel::Linear,
            Response::Quadratic => ResponseModel::Quadratic,
            Response::ScaledLinear => ResponseModel::ScaledLinear,
        },
        n: at_least_one("n", cfg.n, 2000)?,
        d: at_least_one("d", cfg.d, if task == SimTask::TimeseriesMa { 1 } else { 5 })?,
        noise: match cfg.noise.unwrap_or(Noise::NormalVar10) {
            Noise::NormalVar10 => NoiseDist::NormalVar10,
            Noise::CenteredGamma => NoiseDist::CenteredGamma,
        },
    })
}

fn fit_config(cfg: &RunConfig) -> anyhow::Result<FitConfig> {
    let d = FitConfig::default();
    let fit = FitConfig {
        penalty: cfg.penalty.unwrap_or(d.penalty),
        tolerance: positive("tolerance", cfg.tolerance, d.tolerance)?,
        max_iterations: at_least_one("max-iterations", cfg.max_iterations, d.max_iterations)?,
        ..d
    };
    fit.validate().map_err(|e| usage(e.to_string()))?;
    Ok(fit)
}

fn table_estimator(cfg: &RunConfig, kind: TaskKind) -> anyhow::Result<Box<dyn Estimator<ObservationMatrix>>> {
    let fit = fit_config(cfg)?;
    let chosen = cfg.estimator.unwrap_or(match kind {
        TaskKind::Regression => EstimatorKind::Ridge,
        TaskKind::Classification => EstimatorKind::LogisticNewton,
    });
    Ok(match (chosen, kind) {
        (EstimatorKind::Ridge, TaskKind::Regression) => Box::new(Ridge(fit)),
        (EstimatorKind::LogisticNewton, TaskKind::Classification) => Box::new(LogisticNewton(fit)),
        (EstimatorKind::LogisticLbfgs, TaskKind::Classification) => Box::new(LogisticQuasiNewton(fit)),
        (e, k) => return Err(usage(format!("estimator {e:?} does not fit {k:?} data"))),
    })
}

fn assessor(cfg: &RunConfig, series: bool) -> anyhow::Result<Assessor> {
    let kind = cfg.assessor.unwrap_or(if series { AssessorKind::Stderr } else { AssessorKind::Ci });
    match kind {
        AssessorKind::Ci => Ok(Assessor::Ci { alpha: fraction("alpha", cfg.alpha, 0.05, true)? }),
        AssessorKind::Stderr if cfg.alpha.is_some() => Err(usage("--alpha applies only to the ci assessor")),
        AssessorKind::Stderr => Ok(Assessor::Stderr),
    }
}

fn clock(cfg: &RunConfig) -> Clock {
    if cfg.no_timing {
        Clock::Frozen
    } else {
        Clock::Wall
    }
}

fn write_json(path: Option<&Path>, value: &impl Serialize) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn read_truth(path: &Path) -> anyhow::Result<QualityVector> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

const GEN_KEYS: &[&str] = &["task", "covariates", "response", "noise", "n", "d"];
const FIT_KEYS: &[&str] = &["estimator", "penalty", "tolerance", "max_iterations", "assessor", "alpha"];

pub fn gen(cfg: RunConfig) -> anyhow::Result<()> {
    allow(&cfg, "gen", &[GEN_KEYS, &["seed", "out"]].concat())?;
    let spec = generator(&cfg)?;
    let out = required("out", &cfg.out)?;
    let mut rng = RngStream::from_parts(cfg.seed.unwrap_or(0), Purpose::Dataset, 0, 0);
    if spec.task == SimTask::TimeseriesMa {
        write_series_csv(out, &spec.generate_series(&mut rng)?)?;
    } else {
        write_dataset_csv(out, &spec.generate_table(&mut rng)?)?;
    }
    Ok(())
}

pub fn truth(cfg: RunConfig) -> anyhow::Result<()> {
    allow(&cfg, "truth", &[GEN_KEYS, FIT_KEYS, &["realizations", "seed", "threads", "out"]].concat())?;
    let spec = generator(&cfg)?;
    let out = required("out", &cfg.out)?;
    let realizations = at_least_one("realizations", cfg.realizations, 2000)?;
    if realizations < 2 {
        return Err(usage("--realizations must be at least 2"));
    }
    let threads = at_least_one("threads", cfg.threads, 1)?;
    let seed = cfg.seed.unwrap_or(0);
    let q = if spec.task == SimTask::TimeseriesMa {
        if cfg.estimator.is_some() {
            return Err(usage("time-series truth always uses the rescaled mean"));
        }
        let a = assessor(&cfg, true)?;
        ground_truth(|rng: &mut RngStream| spec.generate_series(rng), &RescaledMean, &a, realizations, seed, threads)?
    } else {
        let kind = if spec.task == SimTask::Regression { TaskKind::Regression } else { TaskKind::Classification };
        let est = table_estimator(&cfg, kind)?;
        let a = assessor(&cfg, false)?;
        ground_truth(|rng: &mut RngStream| spec.generate_table(rng), est.as_ref(), &a, realizations, seed, threads)?
    };
    write_json(Some(out), &q)
}

enum Loaded {
    Table(ObservationMatrix),
    Series(TimeSeries),
}

fn load(cfg: &RunConfig) -> anyhow::Result<Loaded> {
    let path = required("data", &cfg.data)?;
    Ok(match cfg.task.unwrap_or(Task::Regression) {
        Task::Regression => Loaded::Table(load_csv_dataset(path, TaskKind::Regression)?),
        Task::Classification => Loaded::Table(load_csv_dataset(path, TaskKind::Classification)?),
        Task::Timeseries => Loaded::Series(load_series_csv(path)?),
    })
}

/// Everything a single method run needs besides the data.
struct Plan {
    method: Method,
    size: Option<SubsetSize>,
    s: usize,
    r: usize,
    mode: SubsampleMode,
    adaptive: Option<AdaptiveConfig>,
    p: f64,
    seed: u64,
    threads: usize,
    clock: Clock,
}

fn subset_size(method: Method, gamma: Option<f64>, b: Option<usize>) -> anyhow::Result<Option<SubsetSize>> {
    let size = match (gamma, b) {
        (Some(_), Some(_)) => return Err(usage("give at most one of --gamma and --b")),
        (Some(g), None) => Some(SubsetSize::Gamma(fraction("gamma", Some(g), 0.0, false)?)),
        (None, Some(0)) => return Err(usage("--b must be at least 1")),
        (None, Some(b)) => Some(SubsetSize::Explicit(b)),
        (None, None) => None,
    };
    match method {
        Method::Boot | Method::BootPoisson if size.is_some() => {
            Err(usage(format!("{} resamples the full data and takes neither --gamma nor --b", method.label())))
        }
        Method::Bofn | Method::Ss if size.is_none() => {
            Err(usage(format!("{} needs a subset size: give --gamma or --b", method.label())))
        }
        Method::Blb | Method::Sblb => Ok(Some(size.unwrap_or(SubsetSize::Gamma(0.7)))),
        _ => Ok(size),
    }
}

fn plan(cfg: &RunConfig, method: Method, size: Option<SubsetSize>) -> anyhow::Result<Plan> {
    let blb_only = [cfg.mode.is_some(), cfg.adaptive];
    if method != Method::Blb && blb_only.iter().any(|&x| x) {
        return Err(usage("--mode and --adaptive apply only to --method blb"));
    }
    let adaptive_keys = [
        cfg.epsilon_r.is_some(),
        cfg.window_r.is_some(),
        cfg.epsilon_s.is_some(),
        cfg.window_s.is_some(),
        cfg.r_max.is_some(),
        cfg.s_max.is_some(),
    ];
    if !cfg.adaptive && adaptive_keys.iter().any(|&x| x) {
        return Err(usage("convergence-test settings require --adaptive"));
    }
    if method != Method::Sblb && cfg.p.is_some() {
        return Err(usage("--p applies only to --method sblb"));
    }
    if cfg.s.is_some() && !matches!(method, Method::Blb | Method::Sblb) {
        return Err(usage(format!("{} has no subsamples; --s does not apply", method.label())));
    }
    let adaptive = if cfg.adaptive {
        if cfg.s.is_some() || cfg.r.is_some() {
            return Err(usage("--adaptive chooses s and r itself; drop --s and --r"));
        }
        let d = AdaptiveConfig::default();
        let a = AdaptiveConfig {
            epsilon_r: positive("epsilon-r", cfg.epsilon_r, d.epsilon_r)?,
            window_r: at_least_one("window-r", cfg.window_r, d.window_r)?,
            epsilon_s: positive("epsilon-s", cfg.epsilon_s, d.epsilon_s)?,
            window_s: at_least_one("window-s", cfg.window_s, d.window_s)?,
            r_max: at_least_one("r-max", cfg.r_max, d.r_max)?,
            s_max: at_least_one("s-max", cfg.s_max, d.s_max)?,
        };
        a.validate().map_err(|e| usage(e.to_string()))?;
        Some(a)
    } else {
        None
    };
    Ok(Plan {
        method,
        size,
        s: at_least_one("s", cfg.s, 10)?,
        r: at_least_one("r", cfg.r, 100)?,
        mode: match cfg.mode.unwrap_or(Mode::Uniform) {
            Mode::Uniform => SubsampleMode::Uniform,
            Mode::Disjoint => SubsampleMode::Disjoint,
        },
        adaptive,
        p: fraction("p", cfg.p, 0.1, false)?,
        seed: cfg.seed.unwrap_or(0),
        threads: at_least_one("threads", cfg.threads, 1)?,
        clock: clock(cfg),
    })
}

fn run_generic<D, E>(data: &D, est: &E, a: &Assessor, plan: &Plan) -> anyhow::Result<RunOutput>
where
    D: Dataset + ?Sized,
    E: Estimator<D> + ?Sized,
{
    let size = plan.size.unwrap_or(SubsetSize::Gamma(0.7));
    Ok(match plan.method {
        Method::Blb => {
            let cfg = BlbConfig {
                size,
                s: plan.s,
                r: plan.r,
                mode: plan.mode,
                adaptive: plan.adaptive,
                master_seed: plan.seed,
                parallelism: plan.threads,
                clock: plan.clock,
            };
            blb_run(data, est, a, &cfg)?
        }
        Method::Boot => bootstrap_run(data, est, a, plan.r, BootstrapScheme::MultinomialFull, plan.seed, plan.clock)?,
        Method::BootPoisson => bootstrap_run(data, est, a, plan.r, BootstrapScheme::Poisson, plan.seed, plan.clock)?,
        Method::Bofn => bofn_run(data, est, a, size, plan.r, plan.seed, plan.clock)?,
        Method::Ss => subsampling_run(data, est, a, size, plan.r, plan.seed, plan.clock)?,
        Method::Sblb => unreachable!("stationary runs are dispatched separately"),
    })
}

fn run_plan(data: &Loaded, cfg: &RunConfig, plan: &Plan) -> anyhow::Result<RunOutput> {
    match data {
        Loaded::Table(m) => {
            if plan.method == Method::Sblb {
                return Err(usage("sblb needs --task timeseries"));
            }
            let est = table_estimator(cfg, m.kind())?;
            run_generic(m, est.as_ref(), &assessor(cfg, false)?, plan)
        }
        Loaded::Series(s) => {
            if cfg.estimator.is_some() {
                return Err(usage("time-series runs always use the rescaled mean"));
            }
            let a = assessor(cfg, true)?;
            if plan.method == Method::Sblb {
                let scfg = StationaryConfig {
                    size: plan.size.unwrap_or(SubsetSize::Gamma(0.7)),
                    s: plan.s,
                    r: plan.r,
                    p: plan.p,
                    master_seed: plan.seed,
                    parallelism: plan.threads,
                    clock: plan.clock,
                };
                Ok(stationary_blb_run(s, &a, &scfg)?)
            } else {
                run_generic(s, &RescaledMean, &a, plan)
            }
        }
    }
}

#[derive(Serialize)]
struct AssessOutput {
    method: &'static str,
    gamma: Option<f64>,
    b: Option<usize>,
    subsamples: usize,
    resamples: usize,
    quality: QualityVector,
    relative_error: Option<f64>,
}

const RUN_KEYS: &[&str] = &["data", "task", "seed", "threads", "truth", "out", "no_timing"];

pub fn assess(cfg: RunConfig) -> anyhow::Result<()> {
    let method_keys = [
        "method", "gamma", "b", "s", "r", "mode", "adaptive", "epsilon_r", "window_r", "epsilon_s", "window_s", "r_max",
        "s_max", "p", "trace",
    ];
    allow(&cfg, "assess", &[RUN_KEYS, FIT_KEYS, &method_keys].concat())?;
    let method = *required("method", &cfg.method)?;
    let size = subset_size(method, cfg.gamma, cfg.b)?;
    let plan = plan(&cfg, method, size)?;
    let truth = cfg.truth.as_deref().map(read_truth).transpose()?;
    let data = load(&cfg)?;
    let mut run = run_plan(&data, &cfg, &plan)?;
    let n = match &data {
        Loaded::Table(m) => m.n(),
        Loaded::Series(s) => s.len(),
    };
    let relative_error = match &truth {
        Some(t) => {
            annotate_relative_error(&mut run.trace, t)?;
            Some(relative_deviation(&run.quality, t)?)
        }
        None => None,
    };
    if let Some(path) = &cfg.trace {
        write_trace_file(path, &run.trace)?;
    }
    let out = AssessOutput {
        method: method.label(),
        gamma: size.and_then(|s| s.gamma()),
        b: size.map(|s| s.resolve(n)).transpose()?,
        subsamples: run.subsamples,
        resamples: run.resamples,
        quality: run.quality,
        relative_error,
    };
    write_json(cfg.out.as_deref(), &out)
}

pub fn bench(cfg: RunConfig) -> anyhow::Result<()> {
    allow(&cfg, "bench", &[RUN_KEYS, FIT_KEYS, &["methods", "gammas", "s", "r", "p"]].concat())?;
    let dir: &PathBuf = required("out", &cfg.out)?;
    let methods = cfg.methods.clone().unwrap_or_else(|| vec![Method::Blb, Method::Bofn, Method::Ss, Method::Boot]);
    let gammas = cfg.gammas.clone().unwrap_or_else(|| vec![0.5, 0.6, 0.7, 0.8, 0.9]);
    if methods.is_empty() || gammas.is_empty() {
        return Err(usage("--methods and --gammas must be nonempty"));
    }
    for &g in &gammas {
        fraction("gammas", Some(g), 0.0, false)?;
    }
    let truth = cfg.truth.as_deref().map(read_truth).transpose()?;
    let data = load(&cfg)?;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for &method in &methods {
        let runs: Vec<(Option<f64>, String)> = if method.sized() {
            gammas.iter().map(|&g| (Some(g), format!("{}-gamma{g}.csv", method.label()))).collect()
        } else {
            vec![(None, format!("{}.csv", method.label()))]
        };
        let method_cfg = RunConfig {
            p: cfg.p.filter(|_| method == Method::Sblb),
            s: cfg.s.filter(|_| matches!(method, Method::Blb | Method::Sblb)),
            ..cfg.clone()
        };
        for (gamma, file) in runs {
            let plan = plan(&method_cfg, method, gamma.map(SubsetSize::Gamma))?;
            let mut run = run_plan(&data, &cfg, &plan)?;
            if let Some(t) = &truth {
                annotate_relative_error(&mut run.trace, t)?;
            }
            let path = dir.join(file);
            write_trace_file(&path, &run.trace)?;
            println!("{}", path.display());
        }
    }
    Ok(())
}

pub fn timeseries(cfg: RunConfig) -> anyhow::Result<()> {
    allow(&cfg, "timeseries", &["n", "gamma", "p", "s", "r", "trials", "seed", "threads"])?;
    let d = SeriesExperiment::default();
    let exp = SeriesExperiment {
        n: at_least_one("n", cfg.n, d.n)?,
        gamma: fraction("gamma", cfg.gamma, d.gamma, false)?,
        p: fraction("p", cfg.p, d.p, false)?,
        s: at_least_one("s", cfg.s, d.s)?,
        r: at_least_one("r", cfg.r, d.r)?,
        trials: at_least_one("trials", cfg.trials, d.trials)?,
        master_seed: cfg.seed.unwrap_or(d.master_seed),
        parallelism: at_least_one("threads", cfg.threads, d.parallelism)?,
    };
    let rows = run_series_experiment(&exp, &SeriesMethod::ALL)?;
    println!("{:<16} {:>8} {:>8}", "method", "mean", "sd");
    for row in rows {
        println!("{:<16} {:>8.3} {:>8.3}", row.method.label(), row.mean, row.sd);
    }
    Ok(())
}
