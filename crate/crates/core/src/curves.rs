//! Learning curves over the fold count: repeated rCV runs for a range of
//! `k` values with replicate averaging.
//!
//! The sample size of the underlying series never changes across the curve;
//! what varies with `k` is how many points go missing per fold, which is the
//! experience axis of these curves.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};
use std::path::Path;
use thiserror::Error;

use crate::engine::{run_rcv, EngineError, RcvConfig};
use crate::io::fmt_f64;
use crate::rng::derive_seed;
use crate::series::TimeSeries;

#[derive(Debug, Error)]
pub enum CurveError {
    #[error("invalid sweep config: {reason}")]
    InvalidConfig { reason: String },
    #[error("rCV run failed at k={k}, replicate {replicate}: {source}")]
    Run {
        k: usize,
        replicate: usize,
        #[source]
        source: EngineError,
    },
    #[error("curve is empty")]
    EmptyCurve,
    #[error("curve csv parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Which metrics a consumer cares about. The curve itself always carries all
/// three (they are free byproducts of each run); selection only gates what
/// front-ends echo.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricSelection {
    pub g_r: bool,
    pub g_p: bool,
    pub g_rcv: bool,
}

impl Default for MetricSelection {
    fn default() -> Self {
        Self {
            g_r: true,
            g_p: true,
            g_rcv: true,
        }
    }
}

/// Sweep parameters: fold counts, replicates per fold count, and the rCV
/// template the cells are derived from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub k_values: Vec<usize>,
    pub replicates: usize,
    pub base: RcvConfig,
    pub metrics: MetricSelection,
}

impl SweepConfig {
    /// Default sweep for a template config: `k = 2..=20`, 5 replicates.
    pub fn new(base: RcvConfig) -> Self {
        Self {
            k_values: (2..=20).collect(),
            replicates: 5,
            base,
            metrics: MetricSelection::default(),
        }
    }

    fn validate(&self, n_train: usize) -> Result<(), CurveError> {
        if self.k_values.is_empty() {
            return Err(CurveError::InvalidConfig {
                reason: "k_values must be nonempty".into(),
            });
        }
        let mut sorted = self.k_values.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.k_values.len() {
            return Err(CurveError::InvalidConfig {
                reason: "k_values must be distinct".into(),
            });
        }
        for &k in &self.k_values {
            if k < 2 || k > n_train {
                return Err(CurveError::InvalidConfig {
                    reason: format!("k={k} out of range for n={n_train}"),
                });
            }
        }
        if self.replicates == 0 {
            return Err(CurveError::InvalidConfig {
                reason: "replicates must be >= 1".into(),
            });
        }
        Ok(())
    }
}

/// Errors of one complete rCV run (one replicate).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplicateMetrics {
    pub g_r: f64,
    pub g_p: f64,
    pub g_rcv: f64,
}

/// One curve point: replicate mean and standard deviation per metric.
///
/// The means are means of per-replicate products, not products of means:
/// `g_rcv_mean` averages the exact per-run `g_r * g_p` values, so the
/// product identity holds per replicate (see `samples`) but not for the
/// aggregated columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearningCurvePoint {
    pub k: usize,
    pub replicates: usize,
    pub g_r_mean: f64,
    pub g_r_sd: f64,
    pub g_p_mean: f64,
    pub g_p_sd: f64,
    pub g_rcv_mean: f64,
    pub g_rcv_sd: f64,
    /// Raw per-replicate triples, in replicate order. Not part of the CSV
    /// schema.
    #[serde(default)]
    pub samples: Vec<ReplicateMetrics>,
}

/// A learning curve: one point per fold count, ordered by `k`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LearningCurve {
    pub points: Vec<LearningCurvePoint>,
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// Run the sweep: for every `k` in ascending order, `replicates` independent
/// rCV runs with seeds `derive_seed(base.seed, k, replicate)`.
///
/// Cells execute in parallel; aggregation order is fixed by
/// `(k, replicate)`, so the curve is identical to sequential execution and
/// reproducible from the base seed alone.
pub fn sweep(
    train: &TimeSeries,
    oos: &TimeSeries,
    cfg: &SweepConfig,
) -> Result<LearningCurve, CurveError> {
    cfg.validate(train.len())?;
    let mut k_values = cfg.k_values.clone();
    k_values.sort_unstable();

    let cells: Vec<(usize, usize)> = k_values
        .iter()
        .flat_map(|&k| (0..cfg.replicates).map(move |r| (k, r)))
        .collect();

    let runs: Vec<ReplicateMetrics> = cells
        .par_iter()
        .map(|&(k, replicate)| {
            let run_cfg = RcvConfig {
                k,
                seed: derive_seed(cfg.base.seed, k as u64, replicate as u64),
                ..cfg.base
            };
            run_rcv(train, oos, &run_cfg)
                .map(|report| ReplicateMetrics {
                    g_r: report.aggregate.g_r,
                    g_p: report.aggregate.g_p,
                    g_rcv: report.aggregate.g_rcv,
                })
                .map_err(|source| CurveError::Run {
                    k,
                    replicate,
                    source,
                })
        })
        .collect::<Result<_, _>>()?;

    let points = k_values
        .iter()
        .enumerate()
        .map(|(ki, &k)| {
            let samples = runs[ki * cfg.replicates..(ki + 1) * cfg.replicates].to_vec();
            let g_r: Vec<f64> = samples.iter().map(|s| s.g_r).collect();
            let g_p: Vec<f64> = samples.iter().map(|s| s.g_p).collect();
            let g_rcv: Vec<f64> = samples.iter().map(|s| s.g_rcv).collect();
            let (g_r_mean, g_r_sd) = mean_sd(&g_r);
            let (g_p_mean, g_p_sd) = mean_sd(&g_p);
            let (g_rcv_mean, g_rcv_sd) = mean_sd(&g_rcv);
            LearningCurvePoint {
                k,
                replicates: cfg.replicates,
                g_r_mean,
                g_r_sd,
                g_p_mean,
                g_p_sd,
                g_rcv_mean,
                g_rcv_sd,
                samples,
            }
        })
        .collect();

    Ok(LearningCurve { points })
}

const CURVE_HEADER: &str = "k,replicates,g_r_mean,g_r_sd,g_p_mean,g_p_sd,g_rcv_mean,g_rcv_sd";

/// Write the curve as CSV (header plus one row per point, floats at 17
/// significant digits). `g_rcv_mean` is a mean of per-replicate products;
/// see [`LearningCurvePoint`].
pub fn write_curve<W: Write>(w: &mut W, curve: &LearningCurve) -> Result<(), CurveError> {
    if curve.points.is_empty() {
        return Err(CurveError::EmptyCurve);
    }
    writeln!(w, "{CURVE_HEADER}")?;
    for p in &curve.points {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            p.k,
            p.replicates,
            fmt_f64(p.g_r_mean),
            fmt_f64(p.g_r_sd),
            fmt_f64(p.g_p_mean),
            fmt_f64(p.g_p_sd),
            fmt_f64(p.g_rcv_mean),
            fmt_f64(p.g_rcv_sd)
        )?;
    }
    Ok(())
}

/// Write the curve CSV to a file path.
pub fn emit_curve(curve: &LearningCurve, path: &Path) -> Result<(), CurveError> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_curve(&mut file, curve)
}

/// Parse a curve CSV produced by [`emit_curve`]. Per-replicate samples are
/// not part of the file format, so the parsed points carry empty `samples`.
pub fn read_curve(path: &Path) -> Result<LearningCurve, CurveError> {
    let file = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut lines = file.lines().enumerate();
    match lines.next() {
        Some((_, Ok(header))) if header.trim_end() == CURVE_HEADER => {}
        Some((_, Ok(other))) => {
            return Err(CurveError::Parse {
                line: 1,
                message: format!("unexpected header '{other}'"),
            })
        }
        Some((_, Err(e))) => return Err(e.into()),
        None => {
            return Err(CurveError::Parse {
                line: 1,
                message: "missing header".into(),
            })
        }
    }
    let mut points = Vec::new();
    for (idx, line) in lines {
        let line = line?;
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            return Err(CurveError::Parse {
                line: line_no,
                message: format!("expected 8 fields, got {}", fields.len()),
            });
        }
        let parse_usize = |s: &str| {
            s.parse::<usize>().map_err(|e| CurveError::Parse {
                line: line_no,
                message: format!("'{s}': {e}"),
            })
        };
        let parse_f64 = |s: &str| {
            s.parse::<f64>().map_err(|e| CurveError::Parse {
                line: line_no,
                message: format!("'{s}': {e}"),
            })
        };
        points.push(LearningCurvePoint {
            k: parse_usize(fields[0])?,
            replicates: parse_usize(fields[1])?,
            g_r_mean: parse_f64(fields[2])?,
            g_r_sd: parse_f64(fields[3])?,
            g_p_mean: parse_f64(fields[4])?,
            g_p_sd: parse_f64(fields[5])?,
            g_rcv_mean: parse_f64(fields[6])?,
            g_rcv_sd: parse_f64(fields[7])?,
            samples: Vec::new(),
        });
    }
    if points.is_empty() {
        return Err(CurveError::EmptyCurve);
    }
    Ok(LearningCurve { points })
}
