//! Run configuration shared by every subcommand: one flat set of keys, read
//! from flags and optionally from a JSON file (flags win).

use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, ValueEnum};
use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Blb,
    Boot,
    BootPoisson,
    Bofn,
    Ss,
    Sblb,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Blb => "blb",
            Method::Boot => "boot",
            Method::BootPoisson => "boot-poisson",
            Method::Bofn => "bofn",
            Method::Ss => "ss",
            Method::Sblb => "sblb",
        }
    }

    /// Whether the method is parameterized by a subset size.
    pub fn sized(self) -> bool {
        !matches!(self, Method::Boot | Method::BootPoisson)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Regression,
    Classification,
    Timeseries,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorKind {
    Ridge,
    LogisticNewton,
    LogisticLbfgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AssessorKind {
    Ci,
    Stderr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Uniform,
    Disjoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Covariates {
    Normal,
    StudentT,
    GammaSkewed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Response {
    Linear,
    Quadratic,
    ScaledLinear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Noise {
    NormalVar10,
    CenteredGamma,
}

macro_rules! run_config {
    (
        options { $($(#[$om:meta])* $opt:ident : $oty:ty,)* }
        switches { $($(#[$sm:meta])* $sw:ident,)* }
    ) => {
        #[derive(Debug, Clone, Default, Args, Deserialize)]
        #[serde(deny_unknown_fields, rename_all = "kebab-case")]
        pub struct RunConfig {
            $($(#[$om])* #[arg(long)] pub $opt: Option<$oty>,)*
            $($(#[$sm])* #[arg(long)] #[serde(default)] pub $sw: bool,)*
        }

        impl RunConfig {
            /// Fills every key unset here from `fallback`.
            pub fn or(self, fallback: RunConfig) -> RunConfig {
                RunConfig {
                    $($opt: self.$opt.or(fallback.$opt),)*
                    $($sw: self.$sw || fallback.$sw,)*
                }
            }

            /// Field names (snake case) of the keys that carry a value.
            pub fn set_keys(&self) -> Vec<&'static str> {
                let mut keys = Vec::new();
                $(if self.$opt.is_some() { keys.push(stringify!($opt)); })*
                $(if self.$sw { keys.push(stringify!($sw)); })*
                keys
            }
        }
    };
}

run_config! {
    options {
        /// Input dataset CSV (response in the last column).
        data: PathBuf,
        task: Task,
        covariates: Covariates,
        response: Response,
        noise: Noise,
        /// Number of observations to generate.
        n: usize,
        /// Number of covariates to generate.
        d: usize,
        estimator: EstimatorKind,
        /// Ridge / logistic penalty λ.
        penalty: f64,
        /// Gradient tolerance of the iterative fits.
        tolerance: f64,
        max_iterations: usize,
        assessor: AssessorKind,
        /// Interval level is 1 − alpha.
        alpha: f64,
        method: Method,
        /// Methods swept by `bench`, comma separated.
        #[arg(value_delimiter = ',')]
        methods: Vec<Method>,
        /// Subset size exponent, b = ⌈n^gamma⌉.
        gamma: f64,
        /// Exponents swept by `bench`, comma separated.
        #[arg(value_delimiter = ',')]
        gammas: Vec<f64>,
        /// Explicit subset size (overrides gamma).
        b: usize,
        /// Number of subsamples.
        s: usize,
        /// Number of resamples per subsample.
        r: usize,
        mode: Mode,
        epsilon_r: f64,
        window_r: usize,
        epsilon_s: f64,
        window_s: usize,
        r_max: usize,
        s_max: usize,
        /// Stationary bootstrap restart probability.
        p: f64,
        seed: u64,
        threads: usize,
        /// Dataset realizations used by `truth`.
        realizations: usize,
        /// Independent series used by `timeseries`.
        trials: usize,
        /// Ground-truth quality JSON written by `truth`.
        truth: PathBuf,
        out: PathBuf,
        /// Trace CSV output.
        trace: PathBuf,
    }
    switches {
        /// Choose r and s by the convergence test.
        adaptive,
        /// Write zero elapsed times so traces are byte-reproducible.
        no_timing,
    }
}

impl RunConfig {
    pub fn from_json_file(path: &Path) -> anyhow::Result<RunConfig> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| anyhow::Error::new(Usage(format!("{}: {e}", path.display()))))
    }
}

/// An invalid combination of keys or an out-of-range value; reported with
/// usage and exit status 2.
#[derive(Debug)]
pub struct Usage(pub String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(Usage(msg.into()))
}
