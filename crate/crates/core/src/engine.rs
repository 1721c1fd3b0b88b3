//! The rCV meta-algorithm: random fold assignment, per-fold reconstruction
//! via kernel regression, per-fold out-of-sample prediction, and the three
//! error aggregates `g_r`, `g_p`, `g_rcv = g_r * g_p`.
//!
//! The procedure never predicts past data from future data: reconstruction
//! of a removed fold uses only the retained points of the same series, and
//! out-of-sample queries are rejected unless they lie strictly after the
//! last training time.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;
use thiserror::Error;

use crate::io::fmt_f64;
use crate::linalg::{self, GpSolver, KernelConfig, LinalgError};
use crate::rng::{rng_from_seed, shuffle};
use crate::series::{FoldPlan, SeriesError, TimeSeries};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("fold count k={k} out of range for n={n} (need 2 <= k <= n)")]
    InvalidFoldCount { k: usize, n: usize },
    #[error("out-of-sample time {query_time} is not after the last training time {last_train_time}")]
    TimeOrderViolation {
        query_time: f64,
        last_train_time: f64,
    },
    #[error("invalid rCV config: {reason}")]
    InvalidConfig { reason: String },
    #[error("expected {expected} reconstructions/predictions, got {got}")]
    FoldCountMismatch { expected: usize, got: usize },
    #[error("fold {fold_id}: series length {got} does not match expected {expected}")]
    LengthMismatch {
        fold_id: usize,
        expected: usize,
        got: usize,
    },
    #[error("fold {fold_id} failed: {source}")]
    FoldFailed {
        fold_id: usize,
        #[source]
        source: Box<EngineError>,
    },
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

impl EngineError {
    fn in_fold(self, fold_id: usize) -> EngineError {
        EngineError::FoldFailed {
            fold_id,
            source: Box::new(self),
        }
    }
}

/// How the prediction error `g_p` scalarizes per-fold deviations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum GpForm {
    /// Mean absolute percent error, symmetric to the reconstruction error.
    #[default]
    Mape,
    /// Literal signed mean difference `(1/p) sum (w_j - w_hat_j)`; signs can
    /// cancel, which is why it is not the default.
    Signed,
}

impl std::fmt::Display for GpForm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GpForm::Mape => write!(f, "mape"),
            GpForm::Signed => write!(f, "signed"),
        }
    }
}

impl std::str::FromStr for GpForm {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mape" => Ok(GpForm::Mape),
            "signed" => Ok(GpForm::Signed),
            other => Err(format!("unknown gp-form '{other}' (expected mape|signed)")),
        }
    }
}

/// Configuration of one rCV run.
///
/// `replicates` is validated here but consumed by sweep orchestration:
/// [`run_rcv`] always performs exactly one fold-plan draw, because the
/// report's exact product identity would not survive replicate averaging.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RcvConfig {
    pub k: usize,
    pub kernel: KernelConfig,
    /// Denominator guard for percent errors: `|y| < mape_epsilon` is
    /// replaced by `mape_epsilon` and counted as an underflow warning.
    pub mape_epsilon: f64,
    /// Seed for the fold shuffle.
    pub seed: u64,
    pub replicates: usize,
    pub gp_form: GpForm,
}

impl Default for RcvConfig {
    fn default() -> Self {
        Self {
            k: 10,
            kernel: KernelConfig::default(),
            mape_epsilon: 1e-8,
            seed: 0,
            replicates: 1,
            gp_form: GpForm::Mape,
        }
    }
}

impl RcvConfig {
    pub fn validate(&self, n_train: usize) -> Result<(), EngineError> {
        if self.k < 2 || self.k > n_train {
            return Err(EngineError::InvalidFoldCount {
                k: self.k,
                n: n_train,
            });
        }
        if self.mape_epsilon < 0.0 || !self.mape_epsilon.is_finite() {
            return Err(EngineError::InvalidConfig {
                reason: format!("mape_epsilon must be >= 0, got {}", self.mape_epsilon),
            });
        }
        if self.replicates == 0 {
            return Err(EngineError::InvalidConfig {
                reason: "replicates must be >= 1".into(),
            });
        }
        self.kernel.validate()?;
        Ok(())
    }
}

/// Detail for one fold. Indices here follow the external 1-based convention.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldRecord {
    /// 1-based fold identifier.
    pub fold_id: usize,
    /// 1-based indices of the removed points, ascending.
    pub removed_indices: Vec<usize>,
    /// Imputed values at the removed indices (same order).
    pub reconstructed_values: Vec<f64>,
    /// MAPE over the removed points of this fold.
    pub reconstruction_mape: f64,
    /// Mean absolute difference between the original and the reconstruction
    /// over the full training grid (retained points contribute exact zeros).
    pub reconstruction_mean_abs_diff: f64,
    /// Same difference averaged over the removed points only.
    pub reconstruction_mean_abs_diff_removed: f64,
    /// Out-of-sample predictions of the model built on this reconstruction.
    pub oos_predictions: Vec<f64>,
    /// Prediction error of this fold (form per config).
    pub prediction_error: f64,
}

/// The three aggregate errors of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub g_r: f64,
    pub g_p: f64,
    pub g_rcv: f64,
}

/// Full result of one rCV run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RcvReport {
    pub per_fold: Vec<FoldRecord>,
    pub aggregate: Aggregate,
    /// The exact configuration that produced this report.
    pub provenance: RcvConfig,
    /// Count of percent-error denominators that hit the epsilon guard.
    pub denominator_underflows: usize,
}

/// Partition `{1..n}` into `k` near-equal random folds.
///
/// A seeded uniform shuffle is dealt round-robin, which forces the size
/// balance deterministically: every fold gets `n / k` indices and the first
/// `n mod k` folds one extra.
pub fn assign_folds(n: usize, k: usize, seed: u64) -> Result<FoldPlan, EngineError> {
    if k < 2 || k > n {
        return Err(EngineError::InvalidFoldCount { k, n });
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = rng_from_seed(seed);
    shuffle(&mut rng, &mut order);
    let mut folds: Vec<Vec<usize>> = vec![Vec::with_capacity(n / k + 1); k];
    for (pos, idx) in order.into_iter().enumerate() {
        folds[pos % k].push(idx);
    }
    for fold in &mut folds {
        fold.sort_unstable();
    }
    Ok(FoldPlan::new(n, k, folds)?)
}

/// Mean of `|actual - predicted| / max(|actual|, eps)` plus the number of
/// guarded denominators. An empty pair of slices yields `(0.0, 0)`.
fn guarded_mape(actual: &[f64], predicted: &[f64], eps: f64) -> (f64, usize) {
    debug_assert_eq!(actual.len(), predicted.len());
    if actual.is_empty() {
        return (0.0, 0);
    }
    let mut sum = 0.0;
    let mut underflows = 0;
    for (&a, &p) in actual.iter().zip(predicted) {
        let denom = if a.abs() < eps {
            underflows += 1;
            eps
        } else {
            a.abs()
        };
        sum += (a - p).abs() / denom;
    }
    (sum / actual.len() as f64, underflows)
}

fn signed_mean_diff(actual: &[f64], predicted: &[f64]) -> f64 {
    debug_assert_eq!(actual.len(), predicted.len());
    if actual.is_empty() {
        return 0.0;
    }
    actual
        .iter()
        .zip(predicted)
        .map(|(a, p)| a - p)
        .sum::<f64>()
        / actual.len() as f64
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// Reconstruct the full training series with one fold removed.
///
/// Retained indices carry the original values copied verbatim; removed
/// indices carry kernel-regression predictions trained on the retained
/// points only. The result always has exactly `n` points.
pub fn reconstruct_fold(
    train: &TimeSeries,
    plan: &FoldPlan,
    fold_index: usize,
    cfg: &KernelConfig,
) -> Result<TimeSeries, EngineError> {
    let removed = plan.fold(fold_index);
    let retained = plan.retained(fold_index);
    let removed_times: Vec<f64> = removed.iter().map(|&i| train.times()[i]).collect();

    let basis = train.subset(&retained)?;
    let imputed = linalg::gp_regress(&basis, &removed_times, cfg)?;

    let mut values = train.values().to_vec();
    for (&slot, &value) in removed.iter().zip(&imputed) {
        values[slot] = value;
    }
    Ok(TimeSeries::new(train.times().to_vec(), values)?)
}

/// Aggregate reconstruction error over `k` reconstructions (the outer `1/k`
/// average of per-fold MAPEs over removed points).
pub fn reconstruction_error(
    original: &TimeSeries,
    reconstructions: &[TimeSeries],
    plan: &FoldPlan,
    cfg: &RcvConfig,
) -> Result<f64, EngineError> {
    if reconstructions.len() != plan.k() {
        return Err(EngineError::FoldCountMismatch {
            expected: plan.k(),
            got: reconstructions.len(),
        });
    }
    let mut per_fold = Vec::with_capacity(plan.k());
    for (fold_index, recon) in reconstructions.iter().enumerate() {
        if recon.len() != original.len() {
            return Err(EngineError::LengthMismatch {
                fold_id: fold_index + 1,
                expected: original.len(),
                got: recon.len(),
            });
        }
        let removed = plan.fold(fold_index);
        let actual: Vec<f64> = removed.iter().map(|&i| original.values()[i]).collect();
        let predicted: Vec<f64> = removed.iter().map(|&i| recon.values()[i]).collect();
        let (mape, _) = guarded_mape(&actual, &predicted, cfg.mape_epsilon);
        per_fold.push(mape);
    }
    Ok(mean(&per_fold))
}

/// Forecast the out-of-sample grid from a full-length reconstruction.
///
/// Every query time must lie strictly after the last training time; a query
/// at or before it is a [`EngineError::TimeOrderViolation`]. An empty query
/// yields an empty prediction vector.
pub fn predict_oos(
    reconstruction: &TimeSeries,
    oos_times: &[f64],
    cfg: &KernelConfig,
) -> Result<Vec<f64>, EngineError> {
    if oos_times.is_empty() {
        return Ok(Vec::new());
    }
    let last = reconstruction
        .last_time()
        .ok_or(LinalgError::EmptyInput)?;
    for &t in oos_times {
        // negated form so a NaN query counts as a violation
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(t > last) {
            return Err(EngineError::TimeOrderViolation {
                query_time: t,
                last_train_time: last,
            });
        }
    }
    Ok(linalg::gp_regress(reconstruction, oos_times, cfg)?)
}

/// Aggregate prediction error over `k` per-fold prediction vectors.
///
/// Per fold the deviation from the out-of-sample series is scalarized
/// according to `cfg.gp_form`, then the `k` values are averaged. An empty
/// out-of-sample series yields 0.0 (vacuous mean).
pub fn prediction_error(
    oos: &TimeSeries,
    predictions: &[Vec<f64>],
    cfg: &RcvConfig,
) -> Result<f64, EngineError> {
    if predictions.len() != cfg.k {
        return Err(EngineError::FoldCountMismatch {
            expected: cfg.k,
            got: predictions.len(),
        });
    }
    let mut per_fold = Vec::with_capacity(predictions.len());
    for (fold_index, pred) in predictions.iter().enumerate() {
        if pred.len() != oos.len() {
            return Err(EngineError::LengthMismatch {
                fold_id: fold_index + 1,
                expected: oos.len(),
                got: pred.len(),
            });
        }
        per_fold.push(match cfg.gp_form {
            GpForm::Mape => guarded_mape(oos.values(), pred, cfg.mape_epsilon).0,
            GpForm::Signed => signed_mean_diff(oos.values(), pred),
        });
    }
    Ok(mean(&per_fold))
}

/// The rCV error: exact product of reconstruction and prediction errors.
pub fn rcv_error(g_r: f64, g_p: f64) -> f64 {
    g_r * g_p
}

struct FoldOutcome {
    record: FoldRecord,
    underflows: usize,
}

fn evaluate_fold(
    train: &TimeSeries,
    oos: &TimeSeries,
    plan: &FoldPlan,
    fold_index: usize,
    cfg: &RcvConfig,
    oos_solver: Option<&(GpSolver, nalgebra::DMatrix<f64>)>,
) -> Result<FoldOutcome, EngineError> {
    let fold_id = fold_index + 1;
    let removed = plan.fold(fold_index);

    let recon =
        reconstruct_fold(train, plan, fold_index, &cfg.kernel).map_err(|e| e.in_fold(fold_id))?;

    let actual: Vec<f64> = removed.iter().map(|&i| train.values()[i]).collect();
    let imputed: Vec<f64> = removed.iter().map(|&i| recon.values()[i]).collect();
    let (recon_mape, mut underflows) = guarded_mape(&actual, &imputed, cfg.mape_epsilon);
    let abs_err_sum: f64 = actual
        .iter()
        .zip(&imputed)
        .map(|(a, p)| (a - p).abs())
        .sum();
    let mad_removed = abs_err_sum / removed.len() as f64;
    let mad_all = abs_err_sum / train.len() as f64;

    let (oos_predictions, prediction_err) = match oos_solver {
        Some((solver, cross)) => {
            let preds = solver.predict_with_cross(recon.values(), cross);
            let err = match cfg.gp_form {
                GpForm::Mape => {
                    let (v, u) = guarded_mape(oos.values(), &preds, cfg.mape_epsilon);
                    underflows += u;
                    v
                }
                GpForm::Signed => signed_mean_diff(oos.values(), &preds),
            };
            (preds, err)
        }
        None => (Vec::new(), 0.0),
    };

    Ok(FoldOutcome {
        record: FoldRecord {
            fold_id,
            removed_indices: removed.iter().map(|&i| i + 1).collect(),
            reconstructed_values: imputed,
            reconstruction_mape: recon_mape,
            reconstruction_mean_abs_diff: mad_all,
            reconstruction_mean_abs_diff_removed: mad_removed,
            oos_predictions,
            prediction_error: prediction_err,
        },
        underflows,
    })
}

/// Run the full meta-algorithm: assign folds, reconstruct each, forecast the
/// out-of-sample horizon from every reconstruction, aggregate the errors.
///
/// Fold evaluations run in parallel; the report is identical to sequential
/// execution because aggregation order is fixed by fold id and every fold
/// computation is a pure function. The out-of-sample kernel system is
/// factorized once and shared read-only across folds (all reconstructions
/// live on the same time grid), which is bit-identical to the per-fold
/// [`predict_oos`] path.
pub fn run_rcv(
    train: &TimeSeries,
    oos: &TimeSeries,
    cfg: &RcvConfig,
) -> Result<RcvReport, EngineError> {
    if train.is_empty() {
        return Err(EngineError::Series(SeriesError::EmptySeries));
    }
    cfg.validate(train.len())?;
    let last_train = train.last_time().expect("nonempty train");
    for &t in oos.times() {
        if !(t > last_train) {
            return Err(EngineError::TimeOrderViolation {
                query_time: t,
                last_train_time: last_train,
            });
        }
    }

    let plan = assign_folds(train.len(), cfg.k, cfg.seed)?;

    let oos_solver = if oos.is_empty() {
        None
    } else {
        let solver = GpSolver::fit(train.times(), &cfg.kernel)?;
        let cross = solver.cross_kernel(oos.times())?;
        Some((solver, cross))
    };

    let outcomes: Vec<FoldOutcome> = (0..cfg.k)
        .into_par_iter()
        .map(|fold_index| evaluate_fold(train, oos, &plan, fold_index, cfg, oos_solver.as_ref()))
        .collect::<Result<_, _>>()?;

    let recon_mapes: Vec<f64> = outcomes
        .iter()
        .map(|o| o.record.reconstruction_mape)
        .collect();
    let pred_errs: Vec<f64> = outcomes
        .iter()
        .map(|o| o.record.prediction_error)
        .collect();
    let g_r = mean(&recon_mapes);
    let g_p = mean(&pred_errs);
    let g_rcv = rcv_error(g_r, g_p);
    let denominator_underflows = outcomes.iter().map(|o| o.underflows).sum();

    Ok(RcvReport {
        per_fold: outcomes.into_iter().map(|o| o.record).collect(),
        aggregate: Aggregate { g_r, g_p, g_rcv },
        provenance: *cfg,
        denominator_underflows,
    })
}

/// Write per-point reconstruction residuals as CSV
/// (`fold_id,index,t,y,y_hat,abs_err`, indices 1-based, floats at 17
/// significant digits).
pub fn write_residuals_csv<W: Write>(
    w: &mut W,
    report: &RcvReport,
    train: &TimeSeries,
) -> std::io::Result<()> {
    writeln!(w, "fold_id,index,t,y,y_hat,abs_err")?;
    for fold in &report.per_fold {
        for (&index_1b, &y_hat) in fold.removed_indices.iter().zip(&fold.reconstructed_values) {
            let i = index_1b - 1;
            let t = train.times()[i];
            let y = train.values()[i];
            writeln!(
                w,
                "{},{},{},{},{},{}",
                fold.fold_id,
                index_1b,
                fmt_f64(t),
                fmt_f64(y),
                fmt_f64(y_hat),
                fmt_f64((y - y_hat).abs())
            )?;
        }
    }
    Ok(())
}
