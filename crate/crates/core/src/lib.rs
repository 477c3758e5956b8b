//! Estimator quality assessment by resampling.
//!
//! The central procedure is the Bag of Little Bootstraps ([`engine::blb_run`]):
//! draw `s` subsamples of size `b ≪ n`, bootstrap each one with resamples of
//! nominal size `n` represented as multinomial counts over the subsample's
//! rows, and average the per-subsample assessments. Baselines (bootstrap,
//! b-out-of-n bootstrap, subsampling) and a stationary time-series variant
//! share the same estimator and assessor interfaces.

// Negated comparisons are used on purpose so that NaN falls through to the error path.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod engine;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod io;
pub mod quality;
pub mod resampling;
pub mod simgen;

pub use data::{Dataset, ObservationMatrix, TaskKind, TimeSeries};
pub use engine::{
    blb_run, bofn_run, bootstrap_run, converged, stationary_blb_run, subsampling_run, AdaptiveConfig, BlbConfig,
    BootstrapScheme, Clock, RunOutput, StationaryConfig, SubsampleMode, SubsetSize,
};
pub use error::{Error, Result};
pub use estimators::{Estimator, FitConfig, LogisticNewton, LogisticQuasiNewton, RescaledMean, Ridge};
pub use quality::{
    average_quality, ci_assess, empirical_percentile, relative_deviation, stderr_assess, Assessor,
    EstimateEnsemble, QualityKind, QualityVector, TraceRecord,
};
