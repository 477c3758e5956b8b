//! Datasets consumed by the estimators: tabular observations with a response
//! column, and univariate stationary time series.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Anything the resampling engine can draw row indices from.
pub trait Dataset: Sync {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskKind {
    Regression,
    Classification,
}

/// `n` observations of `d` covariates plus a response, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationMatrix {
    covariates: Vec<f64>,
    response: Vec<f64>,
    d: usize,
    kind: TaskKind,
}

impl ObservationMatrix {
    pub fn new(covariates: Vec<f64>, response: Vec<f64>, d: usize, kind: TaskKind) -> Result<Self> {
        let n = response.len();
        if n == 0 || d == 0 {
            return Err(invalid(format!("observation matrix needs n ≥ 1 and d ≥ 1 (n={n}, d={d})")));
        }
        if covariates.len() != n * d {
            return Err(invalid(format!(
                "covariate buffer has {} entries, expected n·d = {}",
                covariates.len(),
                n * d
            )));
        }
        if let Some(pos) = covariates.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!("non-finite covariate at row {}", pos / d)));
        }
        if let Some(i) = response.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!("non-finite response at row {i}")));
        }
        if kind == TaskKind::Classification {
            if let Some(i) = response.iter().position(|&y| y != 0.0 && y != 1.0) {
                return Err(invalid(format!(
                    "classification response at row {i} is {}, expected 0 or 1",
                    response[i]
                )));
            }
        }
        Ok(Self { covariates, response, d, kind })
    }

    /// Builds from a list of rows, convenient in tests.
    pub fn from_rows(rows: &[Vec<f64>], response: Vec<f64>, kind: TaskKind) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(invalid("ragged covariate rows"));
        }
        Self::new(rows.concat(), response, d, kind)
    }

    pub fn n(&self) -> usize {
        self.response.len()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn kind(&self) -> TaskKind {
        self.kind
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.covariates[i * self.d..(i + 1) * self.d]
    }

    #[inline]
    pub fn response(&self, i: usize) -> f64 {
        self.response[i]
    }

    pub fn responses(&self) -> &[f64] {
        &self.response
    }

    pub fn covariates(&self) -> &[f64] {
        &self.covariates
    }

    /// New matrix holding the given rows, in order, with repetitions allowed.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let mut cov = Vec::with_capacity(rows.len() * self.d);
        let mut resp = Vec::with_capacity(rows.len());
        for &i in rows {
            cov.extend_from_slice(self.row(i));
            resp.push(self.response[i]);
        }
        Self { covariates: cov, response: resp, d: self.d, kind: self.kind }
    }
}

impl Dataset for ObservationMatrix {
    fn len(&self) -> usize {
        self.n()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(invalid("time series must have at least one point"));
        }
        if let Some(t) = values.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!("non-finite value at t={t}")));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

impl Dataset for TimeSeries {
    fn len(&self) -> usize {
        self.values.len()
    }
}
