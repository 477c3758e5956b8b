//! Estimate ensembles, quality assessors and the relative-deviation metric.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// `r` estimates of a `d`-dimensional parameter, one row per estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateEnsemble {
    values: Vec<f64>,
    d: usize,
}

impl EstimateEnsemble {
    pub fn new(d: usize) -> Self {
        Self { values: Vec::new(), d }
    }

    pub fn with_capacity(d: usize, r: usize) -> Self {
        Self { values: Vec::with_capacity(d * r), d }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map(Vec::len).ok_or(Error::EmptyEnsemble)?;
        let mut e = Self::with_capacity(d, rows.len());
        for row in rows {
            e.push(row)?;
        }
        Ok(e)
    }

    pub fn push(&mut self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.d {
            return Err(invalid(format!("estimate has dimension {}, ensemble has {}", theta.len(), self.d)));
        }
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(invalid("non-finite estimate"));
        }
        self.values.extend_from_slice(theta);
        Ok(())
    }

    pub fn r(&self) -> usize {
        self.values.len().checked_div(self.d).unwrap_or(0)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.values[k * self.d..(k + 1) * self.d]
    }

    pub fn column(&self, i: usize) -> Vec<f64> {
        self.values.iter().skip(i).step_by(self.d).copied().collect()
    }

    /// Leading `k` estimates as a new ensemble.
    pub fn prefix(&self, k: usize) -> Self {
        Self { values: self.values[..k * self.d].to_vec(), d: self.d }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QualityKind {
    CiBounds,
    CiWidths,
    Stderr,
}

impl QualityKind {
    fn is_ci(self) -> bool {
        matches!(self, QualityKind::CiBounds | QualityKind::CiWidths)
    }
}

/// One element of the quality space: per-dimension interval bounds and widths,
/// or per-dimension standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityVector {
    pub kind: QualityKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<Vec<f64>>,
    /// Widths for the interval kinds, standard errors for `Stderr`.
    pub values: Vec<f64>,
}

impl QualityVector {
    pub fn ci_bounds(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::QualityMismatch("lower/upper length differ".into()));
        }
        if let Some(i) = lower.iter().zip(&upper).position(|(l, u)| l > u) {
            return Err(invalid(format!("lower bound exceeds upper bound in dimension {i}")));
        }
        let values = lower.iter().zip(&upper).map(|(l, u)| u - l).collect();
        Ok(Self { kind: QualityKind::CiBounds, lower: Some(lower), upper: Some(upper), values })
    }

    pub fn ci_widths(widths: Vec<f64>) -> Self {
        Self { kind: QualityKind::CiWidths, lower: None, upper: None, values: widths }
    }

    pub fn stderr(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !(*v >= 0.0)) {
            return Err(invalid("standard errors must be nonnegative"));
        }
        Ok(Self { kind: QualityKind::Stderr, lower: None, upper: None, values })
    }

    pub fn d(&self) -> usize {
        self.values.len()
    }

    pub fn mean_value(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Multiplies widths or standard errors by `factor`; interval bounds are
    /// rescaled about `center`.
    pub fn rescale(&self, factor: f64, center: &[f64]) -> Result<Self> {
        match self.kind {
            QualityKind::CiBounds => {
                let (lo, hi) = (self.lower.as_ref().unwrap(), self.upper.as_ref().unwrap());
                if center.len() != lo.len() {
                    return Err(Error::QualityMismatch("center dimension".into()));
                }
                let lower = lo.iter().zip(center).map(|(l, c)| c + (l - c) * factor).collect();
                let upper = hi.iter().zip(center).map(|(u, c)| c + (u - c) * factor).collect();
                Self::ci_bounds(lower, upper)
            }
            QualityKind::CiWidths => Ok(Self::ci_widths(self.values.iter().map(|v| v * factor).collect())),
            QualityKind::Stderr => Self::stderr(self.values.iter().map(|v| v * factor).collect()),
        }
    }
}

/// Order-statistic percentile with linear interpolation at zero-based rank
/// `q·(r−1)`.
pub fn empirical_percentile(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(invalid(format!("percentile level {q} outside [0, 1]")));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(invalid("non-finite value in percentile input"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    Ok(percentile_of_sorted(&sorted, q))
}

fn percentile_of_sorted(sorted: &[f64], q: f64) -> f64 {
    let rank = q * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let frac = rank - lo as f64;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    }
}

/// Marginal `1 − alpha` percentile intervals, one per dimension.
pub fn ci_assess(ensemble: &EstimateEnsemble, alpha: f64) -> Result<QualityVector> {
    if ensemble.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let d = ensemble.d();
    let mut lower = Vec::with_capacity(d);
    let mut upper = Vec::with_capacity(d);
    for i in 0..d {
        let mut col = ensemble.column(i);
        col.sort_unstable_by(f64::total_cmp);
        lower.push(percentile_of_sorted(&col, alpha / 2.0));
        upper.push(percentile_of_sorted(&col, 1.0 - alpha / 2.0));
    }
    QualityVector::ci_bounds(lower, upper)
}

/// Per-dimension sample standard deviation (divisor `r − 1`).
pub fn stderr_assess(ensemble: &EstimateEnsemble) -> Result<QualityVector> {
    let r = ensemble.r();
    if r < 2 {
        return Err(Error::DegenerateEnsemble(r));
    }
    let d = ensemble.d();
    let mut mean = vec![0.0; d];
    let mut m2 = vec![0.0; d];
    // Welford
    for k in 0..r {
        let row = ensemble.row(k);
        let count = (k + 1) as f64;
        for i in 0..d {
            let delta = row[i] - mean[i];
            mean[i] += delta / count;
            m2[i] += delta * (row[i] - mean[i]);
        }
    }
    QualityVector::stderr(m2.into_iter().map(|s| (s.max(0.0) / (r - 1) as f64).sqrt()).collect())
}

/// Element-wise mean of a list of quality vectors of identical kind and
/// dimension. Interval bounds are averaged separately and widths recomputed.
pub fn average_quality(list: &[QualityVector]) -> Result<QualityVector> {
    let first = list.first().ok_or_else(|| Error::QualityMismatch("empty list".into()))?;
    let d = first.d();
    for q in list {
        if q.kind != first.kind || q.d() != d {
            return Err(Error::QualityMismatch(format!(
                "cannot average {:?}/{} with {:?}/{}",
                first.kind,
                d,
                q.kind,
                q.d()
            )));
        }
    }
    let count = list.len() as f64;
    let mean_of = |get: &dyn Fn(&QualityVector) -> &[f64]| -> Vec<f64> {
        let mut acc = vec![0.0; d];
        for q in list {
            for (a, v) in acc.iter_mut().zip(get(q)) {
                *a += v;
            }
        }
        acc.into_iter().map(|a| a / count).collect()
    };
    match first.kind {
        QualityKind::CiBounds => {
            let lower = mean_of(&|q| q.lower.as_deref().unwrap());
            let upper = mean_of(&|q| q.upper.as_deref().unwrap());
            QualityVector::ci_bounds(lower, upper)
        }
        QualityKind::CiWidths => Ok(QualityVector::ci_widths(mean_of(&|q| &q.values))),
        QualityKind::Stderr => QualityVector::stderr(mean_of(&|q| &q.values)),
    }
}

/// Mean over dimensions of `|c − c₀| / c₀`, applied to widths (interval kinds)
/// or standard errors. Bounds and widths kinds compare with each other.
pub fn relative_deviation(estimated: &QualityVector, truth: &QualityVector) -> Result<f64> {
    let compatible = estimated.kind == truth.kind || (estimated.kind.is_ci() && truth.kind.is_ci());
    if !compatible || estimated.d() != truth.d() {
        return Err(Error::QualityMismatch(format!(
            "estimate {:?}/{} vs truth {:?}/{}",
            estimated.kind,
            estimated.d(),
            truth.kind,
            truth.d()
        )));
    }
    if let Some(i) = truth.values.iter().position(|&t| t == 0.0) {
        return Err(Error::ZeroWidthTruth(i));
    }
    let total: f64 = estimated
        .values
        .iter()
        .zip(&truth.values)
        .map(|(c, c0)| (c - c0).abs() / c0.abs())
        .sum();
    Ok(total / truth.d() as f64)
}

/// The quality functional applied to an ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Assessor {
    Ci { alpha: f64 },
    Stderr,
}

impl Default for Assessor {
    fn default() -> Self {
        Assessor::Ci { alpha: 0.05 }
    }
}

impl Assessor {
    pub fn assess(&self, ensemble: &EstimateEnsemble) -> Result<QualityVector> {
        match *self {
            Assessor::Ci { alpha } => ci_assess(ensemble, alpha),
            Assessor::Stderr => stderr_assess(ensemble),
        }
    }

    /// Smallest ensemble size the assessor accepts.
    pub fn min_ensemble(&self) -> usize {
        match self {
            Assessor::Ci { .. } => 1,
            Assessor::Stderr => 2,
        }
    }
}

/// One row of a benchmark trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub method: String,
    pub gamma: Option<f64>,
    /// Subsamples or resamples processed so far.
    pub iteration: usize,
    pub elapsed: f64,
    pub quality: QualityVector,
    pub relative_error: Option<f64>,
}

/// Fills `relative_error` on every record from the supplied truth.
pub fn annotate_relative_error(trace: &mut [TraceRecord], truth: &QualityVector) -> Result<()> {
    for rec in trace {
        rec.relative_error = Some(relative_deviation(&rec.quality, truth)?);
    }
    Ok(())
}
