//! Core data model: ordered time-series and fold partitions.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors from series and fold-plan construction.
#[derive(Debug, Error, PartialEq)]
pub enum SeriesError {
    #[error("times and values have different lengths ({times} vs {values})")]
    LengthMismatch { times: usize, values: usize },
    #[error("times are not strictly increasing at index {index}")]
    NonMonotonicTimes { index: usize },
    #[error("series must contain at least one point")]
    EmptySeries,
    #[error("grid spacing must be positive, got {dt}")]
    InvalidSpacing { dt: f64 },
    #[error("fold count k={k} out of range for n={n} (need 2 <= k <= n)")]
    InvalidFoldCount { k: usize, n: usize },
    #[error("invalid fold partition: {reason}")]
    InvalidPartition { reason: String },
    #[error("subset indices must be strictly increasing and in range (n={n})")]
    InvalidSubset { n: usize },
}

/// An ordered series of `(time, value)` pairs with strictly increasing times.
///
/// Both the training series and the out-of-sample continuation are carried
/// by this type, as are the per-fold reconstructions (which live on the full
/// training grid). Instances are immutable after construction and safe to
/// share across concurrent fold evaluations.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl TimeSeries {
    /// Validate and build a series.
    ///
    /// Errors with [`SeriesError::LengthMismatch`] when the vectors differ in
    /// length, [`SeriesError::EmptySeries`] on zero-length input, and
    /// [`SeriesError::NonMonotonicTimes`] when the times are not strictly
    /// increasing (a `NaN` time also fails the ordering check).
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self, SeriesError> {
        if times.len() != values.len() {
            return Err(SeriesError::LengthMismatch {
                times: times.len(),
                values: values.len(),
            });
        }
        if times.is_empty() {
            return Err(SeriesError::EmptySeries);
        }
        for i in 1..times.len() {
            // negated form so a NaN time fails the ordering check
            #[allow(clippy::neg_cmp_op_on_partial_ord)]
            if !(times[i] > times[i - 1]) {
                return Err(SeriesError::NonMonotonicTimes { index: i });
            }
        }
        Ok(Self { times, values })
    }

    /// A zero-length placeholder, used only for the degenerate "no
    /// out-of-sample data" case. [`TimeSeries::new`] rejects empty input;
    /// every other series in the pipeline is nonempty.
    pub fn empty() -> Self {
        Self {
            times: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn first_time(&self) -> Option<f64> {
        self.times.first().copied()
    }

    pub fn last_time(&self) -> Option<f64> {
        self.times.last().copied()
    }

    /// Restrict the series to the given strictly increasing 0-based indices.
    pub fn subset(&self, indices: &[usize]) -> Result<TimeSeries, SeriesError> {
        let n = self.len();
        let in_order = indices.windows(2).all(|w| w[0] < w[1]);
        if indices.is_empty() || !in_order || indices.iter().any(|&i| i >= n) {
            return Err(SeriesError::InvalidSubset { n });
        }
        Ok(TimeSeries {
            times: indices.iter().map(|&i| self.times[i]).collect(),
            values: indices.iter().map(|&i| self.values[i]).collect(),
        })
    }
}

/// Build a regular grid `[t0, t0 + dt, ..., t0 + (n-1) dt]`.
pub fn split_regular_grid(n: usize, dt: f64, t0: f64) -> Result<Vec<f64>, SeriesError> {
    if dt <= 0.0 || !dt.is_finite() {
        return Err(SeriesError::InvalidSpacing { dt });
    }
    if n == 0 {
        return Err(SeriesError::EmptySeries);
    }
    Ok((0..n).map(|i| t0 + (i as f64) * dt).collect())
}

/// A partition of the training indices `{0..n-1}` into `k` disjoint random
/// subsets whose sizes differ by at most one.
///
/// Fold indices are 0-based here; reports and emitted files translate to the
/// 1-based convention.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    n: usize,
    k: usize,
    folds: Vec<Vec<usize>>,
}

impl FoldPlan {
    /// Validate a partition: `2 <= k <= n`, folds pairwise disjoint, union
    /// covering `{0..n-1}`, sizes within one of each other, each fold sorted
    /// ascending.
    pub fn new(n: usize, k: usize, folds: Vec<Vec<usize>>) -> Result<Self, SeriesError> {
        if k < 2 || k > n {
            return Err(SeriesError::InvalidFoldCount { k, n });
        }
        if folds.len() != k {
            return Err(SeriesError::InvalidPartition {
                reason: format!("expected {} folds, got {}", k, folds.len()),
            });
        }
        let mut seen = vec![false; n];
        let mut covered = 0usize;
        for fold in &folds {
            if !fold.windows(2).all(|w| w[0] < w[1]) {
                return Err(SeriesError::InvalidPartition {
                    reason: "fold indices must be sorted strictly ascending".into(),
                });
            }
            for &idx in fold {
                if idx >= n || seen[idx] {
                    return Err(SeriesError::InvalidPartition {
                        reason: format!("index {idx} out of range or duplicated"),
                    });
                }
                seen[idx] = true;
                covered += 1;
            }
        }
        if covered != n {
            return Err(SeriesError::InvalidPartition {
                reason: format!("folds cover {covered} of {n} indices"),
            });
        }
        let min = folds.iter().map(Vec::len).min().unwrap_or(0);
        let max = folds.iter().map(Vec::len).max().unwrap_or(0);
        if max - min > 1 {
            return Err(SeriesError::InvalidPartition {
                reason: format!("fold sizes spread from {min} to {max}"),
            });
        }
        Ok(Self { n, k, folds })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// The removed indices of one fold, sorted ascending.
    pub fn fold(&self, fold_index: usize) -> &[usize] {
        &self.folds[fold_index]
    }

    /// The retained indices (union of all other folds), sorted ascending.
    pub fn retained(&self, fold_index: usize) -> Vec<usize> {
        let removed = &self.folds[fold_index];
        let mut is_removed = vec![false; self.n];
        for &idx in removed {
            is_removed[idx] = true;
        }
        (0..self.n).filter(|&i| !is_removed[i]).collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        self.folds.iter().map(Vec::len).collect()
    }
}
