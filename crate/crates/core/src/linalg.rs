//! Dense kernel linear algebra: distance matrices, exponential kernels,
//! Cholesky factorization and the Gaussian-process regression solve.
//!
//! The regression used everywhere in the pipeline is
//!
//! ```text
//! prediction = K_qt  *  (K_tt + ridge I + jitter I)^-1  *  y
//! ```
//!
//! with kernel entries `exp(-|t_a - t_b| / length_scale)`. The inverse is
//! never formed; every solve goes through a Cholesky factorization, which a
//! caller can compute once per time grid and reuse across value vectors (the
//! out-of-sample predictions of all folds share one factorization this way).

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::series::TimeSeries;

/// Diagonal stabilizer used for the single retry after a failed
/// factorization.
const ESCALATED_JITTER: f64 = 1e-8;

#[derive(Debug, Error, PartialEq)]
pub enum LinalgError {
    #[error("input vector must be nonempty")]
    EmptyInput,
    #[error("matrix of size {size} is not positive definite (jitter up to {max_jitter:e} tried)")]
    NotPositiveDefinite { size: usize, max_jitter: f64 },
    #[error("kernel config field {field} has invalid value {value}")]
    InvalidConfig { field: &'static str, value: f64 },
}

/// Length-scale and regularisation parameters of the exponential kernel and
/// the GP solve.
///
/// Defaults reproduce the reference experiment: kernel `exp(-D / 2.0)`, unit
/// ridge regularisation, a tiny diagonal jitter for factorization, and no
/// mean centering.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KernelConfig {
    /// Denominator of the kernel exponent: `exp(-d / length_scale)`.
    pub length_scale: f64,
    /// Ridge term added to the training kernel diagonal before solving.
    pub ridge: f64,
    /// Numerical stabilizer added to the diagonal of every factorized matrix.
    pub jitter: f64,
    /// Extension (off by default): subtract the training mean before the
    /// solve and add it back to predictions. The verbatim solve uses raw
    /// values, which makes long-horizon forecasts decay toward zero.
    pub center_mean: bool,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self {
            length_scale: 2.0,
            ridge: 1.0,
            jitter: 1e-10,
            center_mean: false,
        }
    }
}

impl KernelConfig {
    pub fn validate(&self) -> Result<(), LinalgError> {
        if self.length_scale <= 0.0 || !self.length_scale.is_finite() {
            return Err(LinalgError::InvalidConfig {
                field: "length_scale",
                value: self.length_scale,
            });
        }
        if self.ridge < 0.0 || !self.ridge.is_finite() {
            return Err(LinalgError::InvalidConfig {
                field: "ridge",
                value: self.ridge,
            });
        }
        if self.jitter < 0.0 || !self.jitter.is_finite() {
            return Err(LinalgError::InvalidConfig {
                field: "jitter",
                value: self.jitter,
            });
        }
        Ok(())
    }
}

/// Matrix of absolute time differences `|t_a[i] - t_b[j]|`.
///
/// Square instances over a single grid are symmetric with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix(DMatrix<f64>);

impl DistanceMatrix {
    pub fn entries(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn nrows(&self) -> usize {
        self.0.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.0.ncols()
    }
}

/// Pairwise absolute time differences, rows indexed by `times_a`.
pub fn distance_matrix(times_a: &[f64], times_b: &[f64]) -> Result<DistanceMatrix, LinalgError> {
    if times_a.is_empty() || times_b.is_empty() {
        return Err(LinalgError::EmptyInput);
    }
    let m = DMatrix::from_fn(times_a.len(), times_b.len(), |i, j| {
        (times_a[i] - times_b[j]).abs()
    });
    Ok(DistanceMatrix(m))
}

/// Entry-wise `exp(-d / length_scale)`.
pub fn kernel_matrix(d: &DistanceMatrix, cfg: &KernelConfig) -> DMatrix<f64> {
    d.entries().map(|x| (-x / cfg.length_scale).exp())
}

/// A successful Cholesky factorization of `a + jitter I`.
pub struct CholeskyFactor {
    chol: Cholesky<f64, Dyn>,
    size: usize,
    jitter_used: f64,
}

impl CholeskyFactor {
    /// Jitter actually applied (may be the escalated value).
    pub fn jitter_used(&self) -> f64 {
        self.jitter_used
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Solve `(a + jitter I) x = b`.
    pub fn solve_vec(&self, b: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(b)
    }

    /// The lower-triangular factor `L` with `L L^T = a + jitter I`.
    pub fn lower(&self) -> DMatrix<f64> {
        self.chol.l()
    }
}

/// Factorize a symmetric positive-definite matrix, stabilized by `jitter` on
/// the diagonal.
///
/// Only the lower triangle of `a` is read. If factorization fails at the
/// requested jitter, one retry at `1e-8` is made before giving up; kernels
/// that are positive definite in exact arithmetic can be numerically
/// semi-definite on large dense grids.
pub fn factorize_spd(a: &DMatrix<f64>, jitter: f64) -> Result<CholeskyFactor, LinalgError> {
    debug_assert_eq!(a.nrows(), a.ncols());
    let size = a.nrows();
    let attempt = |j: f64| {
        let mut m = a.clone();
        for i in 0..size {
            m[(i, i)] += j;
        }
        Cholesky::new(m)
    };
    if let Some(chol) = attempt(jitter) {
        return Ok(CholeskyFactor {
            chol,
            size,
            jitter_used: jitter,
        });
    }
    if jitter < ESCALATED_JITTER {
        if let Some(chol) = attempt(ESCALATED_JITTER) {
            return Ok(CholeskyFactor {
                chol,
                size,
                jitter_used: ESCALATED_JITTER,
            });
        }
    }
    Err(LinalgError::NotPositiveDefinite {
        size,
        max_jitter: jitter.max(ESCALATED_JITTER),
    })
}

/// Solve `a x = b` for symmetric positive-definite `a` without forming an
/// inverse.
pub fn cholesky_solve(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    jitter: f64,
) -> Result<DVector<f64>, LinalgError> {
    Ok(factorize_spd(a, jitter)?.solve_vec(b))
}

/// Kernel regression solver fitted to a fixed time grid.
///
/// `fit` performs the `O(n^3)` factorization of
/// `K_tt + ridge I + jitter I`; predictions for different value vectors on
/// the same grid reuse it. All methods are pure and the solver is safe to
/// share read-only across threads.
pub struct GpSolver {
    times: Vec<f64>,
    cfg: KernelConfig,
    factor: CholeskyFactor,
}

impl GpSolver {
    pub fn fit(times: &[f64], cfg: &KernelConfig) -> Result<Self, LinalgError> {
        cfg.validate()?;
        if times.is_empty() {
            return Err(LinalgError::EmptyInput);
        }
        let mut k_tt = kernel_matrix(&distance_matrix(times, times)?, cfg);
        for i in 0..times.len() {
            k_tt[(i, i)] += cfg.ridge;
        }
        let factor = factorize_spd(&k_tt, cfg.jitter)?;
        Ok(Self {
            times: times.to_vec(),
            cfg: *cfg,
            factor,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn config(&self) -> &KernelConfig {
        &self.cfg
    }

    /// Cross kernel `K_qt` between query times (rows) and the training grid.
    pub fn cross_kernel(&self, query_times: &[f64]) -> Result<DMatrix<f64>, LinalgError> {
        Ok(kernel_matrix(
            &distance_matrix(query_times, &self.times)?,
            &self.cfg,
        ))
    }

    /// Predict at query times for one value vector on the fitted grid.
    pub fn predict(&self, values: &[f64], query_times: &[f64]) -> Result<Vec<f64>, LinalgError> {
        let cross = self.cross_kernel(query_times)?;
        Ok(self.predict_with_cross(values, &cross))
    }

    /// Predict with a precomputed cross kernel (rows = queries, columns =
    /// fitted grid). Bit-identical to [`GpSolver::predict`] for the same
    /// query times.
    pub fn predict_with_cross(&self, values: &[f64], cross: &DMatrix<f64>) -> Vec<f64> {
        assert_eq!(values.len(), self.times.len(), "value/grid length mismatch");
        let offset = if self.cfg.center_mean {
            values.iter().sum::<f64>() / values.len() as f64
        } else {
            0.0
        };
        let centered = DVector::from_iterator(values.len(), values.iter().map(|v| v - offset));
        let alpha = self.factor.solve_vec(&centered);
        let raw = cross * alpha;
        raw.iter().map(|p| p + offset).collect()
    }
}

/// One-shot kernel regression: fit on `train`, predict at `query_times`.
///
/// Realizes `K_qt (K_tt + ridge I + jitter I)^-1 y` with raw training values
/// (no mean subtraction) unless `cfg.center_mean` is set.
pub fn gp_regress(
    train: &TimeSeries,
    query_times: &[f64],
    cfg: &KernelConfig,
) -> Result<Vec<f64>, LinalgError> {
    if query_times.is_empty() {
        return Err(LinalgError::EmptyInput);
    }
    GpSolver::fit(train.times(), cfg)?.predict(train.values(), query_times)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use crate::rng::{rng_from_seed, standard_normals, uniform_below};

    /// Brute-force oracle: explicit inverse via Gauss-Jordan elimination
    /// with partial pivoting. Only for small test instances; deliberately a
    /// different algorithm from the Cholesky path it checks.
    fn invert_dense(a: &DMatrix<f64>) -> DMatrix<f64> {
        let n = a.nrows();
        let mut m = a.clone();
        let mut inv = DMatrix::<f64>::identity(n, n);
        for col in 0..n {
            let pivot_row = (col..n)
                .max_by(|&i, &j| m[(i, col)].abs().total_cmp(&m[(j, col)].abs()))
                .unwrap();
            if pivot_row != col {
                m.swap_rows(pivot_row, col);
                inv.swap_rows(pivot_row, col);
            }
            let pivot = m[(col, col)];
            assert!(pivot.abs() > 0.0, "singular test matrix");
            for j in 0..n {
                m[(col, j)] /= pivot;
                inv[(col, j)] /= pivot;
            }
            for row in 0..n {
                if row != col {
                    let factor = m[(row, col)];
                    for j in 0..n {
                        m[(row, j)] -= factor * m[(col, j)];
                        inv[(row, j)] -= factor * inv[(col, j)];
                    }
                }
            }
        }
        inv
    }

    fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn distance_matrix_examples() {
        let d = distance_matrix(&[0.0, 1.0, 3.0], &[0.0, 1.0, 3.0]).unwrap();
        let expect = DMatrix::from_row_slice(
            3,
            3,
            &[0.0, 1.0, 3.0, 1.0, 0.0, 2.0, 3.0, 2.0, 0.0],
        );
        assert_eq!(d.entries(), &expect);

        let single = distance_matrix(&[5.0], &[5.0]).unwrap();
        assert_eq!(single.entries()[(0, 0)], 0.0);

        let rect = distance_matrix(&[0.0, 1.0], &[2.0]).unwrap();
        assert_eq!(rect.nrows(), 2);
        assert_eq!(rect.ncols(), 1);
        assert_eq!(rect.entries()[(0, 0)], 2.0);
        assert_eq!(rect.entries()[(1, 0)], 1.0);

        assert_eq!(
            distance_matrix(&[], &[1.0]).unwrap_err(),
            LinalgError::EmptyInput
        );
    }

    #[test]
    fn kernel_matrix_analytic_values() {
        let cfg = KernelConfig::default();
        let zero = distance_matrix(&[1.0], &[1.0]).unwrap();
        assert_eq!(kernel_matrix(&zero, &cfg)[(0, 0)], 1.0);

        let two = distance_matrix(&[0.0], &[2.0]).unwrap();
        assert_relative_eq!(
            kernel_matrix(&two, &cfg)[(0, 0)],
            0.367_879_441_171_442_33,
            epsilon = 1e-12
        );

        let one = distance_matrix(&[0.0], &[1.0]).unwrap();
        assert_relative_eq!(
            kernel_matrix(&one, &cfg)[(0, 0)],
            0.606_530_659_712_633_4,
            epsilon = 1e-12
        );
    }

    #[test]
    fn square_kernel_symmetric_unit_diagonal() {
        let cfg = KernelConfig::default();
        let times: Vec<f64> = (0..20).map(|i| i as f64 * 0.37).collect();
        let k = kernel_matrix(&distance_matrix(&times, &times).unwrap(), &cfg);
        for i in 0..20 {
            assert_eq!(k[(i, i)], 1.0);
            for j in 0..20 {
                assert_eq!(k[(i, j)], k[(j, i)]);
                assert!(k[(i, j)] > 0.0 && k[(i, j)] <= 1.0);
            }
        }
    }

    #[test]
    fn cholesky_solve_identity_and_diagonal() {
        let eye = DMatrix::<f64>::identity(3, 3);
        let b = DVector::from_row_slice(&[1.0, 2.0, 3.0]);
        let x = cholesky_solve(&eye, &b, 0.0).unwrap();
        assert_relative_eq!(x[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(x[1], 2.0, epsilon = 1e-14);
        assert_relative_eq!(x[2], 3.0, epsilon = 1e-14);

        let diag = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 4.0]);
        let b = DVector::from_row_slice(&[2.0, 8.0]);
        let x = cholesky_solve(&diag, &b, 0.0).unwrap();
        assert_relative_eq!(x[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(x[1], 2.0, epsilon = 1e-14);
    }

    #[test]
    fn cholesky_solve_matches_inverse_oracle() {
        // Random SPD 20x20: A = B B^T + n I
        let mut rng = rng_from_seed(20_20);
        let n = 20;
        let raw = standard_normals(&mut rng, n * n);
        let b_mat = DMatrix::from_row_slice(n, n, &raw);
        let a = &b_mat * b_mat.transpose() + DMatrix::<f64>::identity(n, n) * n as f64;
        let rhs_raw = standard_normals(&mut rng, n);
        let rhs = DVector::from_row_slice(&rhs_raw);

        let x = cholesky_solve(&a, &rhs, 0.0).unwrap();
        let oracle = invert_dense(&a) * &rhs;
        assert!(max_abs_diff(x.as_slice(), oracle.as_slice()) < 1e-9);
    }

    #[test]
    fn not_positive_definite_reported() {
        // -I stays indefinite after both jitter attempts
        let neg = DMatrix::<f64>::identity(4, 4) * -1.0;
        let b = DVector::from_element(4, 1.0);
        let err = cholesky_solve(&neg, &b, 1e-10).unwrap_err();
        assert!(matches!(err, LinalgError::NotPositiveDefinite { size: 4, .. }));
    }

    #[test]
    fn jitter_escalation_rescues_semidefinite() {
        // Rank-one PSD matrix: fails at jitter 0 is not guaranteed, but at
        // exactly singular it needs the diagonal bump.
        let v = DVector::from_row_slice(&[1.0, 1.0, 1.0]);
        let a = &v * v.transpose();
        let factor = factorize_spd(&a, 1e-10);
        // Either the tiny jitter or the escalated one must succeed.
        let factor = factor.expect("escalation should rescue PSD matrix");
        assert!(factor.jitter_used() >= 1e-10);
    }

    #[test]
    fn gp_single_point_hand_value() {
        // K_tt = 1, L = 2, K_qt = 1 -> prediction y/2 = 1.0
        let train = TimeSeries::new(vec![0.0], vec![2.0]).unwrap();
        let cfg = KernelConfig {
            jitter: 0.0,
            ..KernelConfig::default()
        };
        let pred = gp_regress(&train, &[0.0], &cfg).unwrap();
        assert_relative_eq!(pred[0], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn gp_three_point_matches_inverse_oracle() {
        let cfg = KernelConfig::default();
        let train =
            TimeSeries::new(vec![0.0, 0.1, 0.2], vec![4.9, 5.2, 5.05]).unwrap();
        let query = [0.05, 0.15, 1.0];
        let pred = gp_regress(&train, &query, &cfg).unwrap();

        let mut k_tt = kernel_matrix(
            &distance_matrix(train.times(), train.times()).unwrap(),
            &cfg,
        );
        for i in 0..3 {
            k_tt[(i, i)] += cfg.ridge + cfg.jitter;
        }
        let k_qt = kernel_matrix(&distance_matrix(&query, train.times()).unwrap(), &cfg);
        let oracle = &k_qt * (invert_dense(&k_tt) * DVector::from_row_slice(train.values()));
        assert!(max_abs_diff(&pred, oracle.as_slice()) < 1e-10);
    }

    #[test]
    fn gp_interpolates_at_zero_ridge() {
        let cfg = KernelConfig {
            ridge: 0.0,
            jitter: 1e-10,
            ..KernelConfig::default()
        };
        let times: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let mut rng = rng_from_seed(99);
        let values: Vec<f64> = standard_normals(&mut rng, 50)
            .iter()
            .map(|z| 5.0 + z)
            .collect();
        let train = TimeSeries::new(times.clone(), values.clone()).unwrap();
        let pred = gp_regress(&train, &times, &cfg).unwrap();
        assert!(max_abs_diff(&pred, &values) < 1e-6);
    }

    #[test]
    fn gp_is_linear_in_values() {
        let cfg = KernelConfig::default();
        let times: Vec<f64> = (0..12).map(|i| i as f64 * 0.3).collect();
        let mut rng = rng_from_seed(5);
        let values = standard_normals(&mut rng, 12);
        let scaled: Vec<f64> = values.iter().map(|v| 3.5 * v).collect();
        let query = [0.05, 1.7, 4.0];

        let base = gp_regress(&TimeSeries::new(times.clone(), values).unwrap(), &query, &cfg)
            .unwrap();
        let big = gp_regress(&TimeSeries::new(times, scaled).unwrap(), &query, &cfg).unwrap();
        for (b, s) in base.iter().zip(&big) {
            assert_relative_eq!(3.5 * b, *s, epsilon = 1e-12, max_relative = 1e-12);
        }
    }

    #[test]
    fn center_mean_restores_level_far_out() {
        let cfg = KernelConfig {
            center_mean: true,
            ..KernelConfig::default()
        };
        let times: Vec<f64> = (0..30).map(|i| i as f64 * 0.1).collect();
        let values = vec![5.0; 30];
        let train = TimeSeries::new(times, values).unwrap();
        // Far from the data the centered prediction returns the mean level,
        // the raw one decays toward zero.
        let far = [100.0];
        let centered = gp_regress(&train, &far, &cfg).unwrap();
        assert_relative_eq!(centered[0], 5.0, epsilon = 1e-9);
        let raw = gp_regress(&train, &far, &KernelConfig::default()).unwrap();
        assert!(raw[0].abs() < 1e-6);
    }

    #[test]
    fn solver_reuse_matches_one_shot() {
        let cfg = KernelConfig::default();
        let times: Vec<f64> = (0..40).map(|i| i as f64 * 0.25).collect();
        let mut rng = rng_from_seed(123);
        let solver = GpSolver::fit(&times, &cfg).unwrap();
        let query = [1.05, 3.33, 9.99, 10.5];
        let cross = solver.cross_kernel(&query).unwrap();
        for _ in 0..3 {
            let values = standard_normals(&mut rng, 40);
            let train = TimeSeries::new(times.clone(), values.clone()).unwrap();
            let one_shot = gp_regress(&train, &query, &cfg).unwrap();
            let reused = solver.predict_with_cross(&values, &cross);
            assert_eq!(one_shot, reused);
        }
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut cfg = KernelConfig::default();
        cfg.length_scale = 0.0;
        assert!(cfg.validate().is_err());
        cfg = KernelConfig {
            ridge: -1.0,
            ..KernelConfig::default()
        };
        assert!(cfg.validate().is_err());
        cfg = KernelConfig {
            jitter: f64::NAN,
            ..KernelConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    proptest::proptest! {
        // Kernel entries stay in (0, 1] and square kernels symmetric for
        // arbitrary grids and length scales.
        #[test]
        fn kernel_entries_bounded(
            seed in 0u64..512,
            n in 1usize..12,
            length_scale in 0.05f64..50.0,
        ) {
            let mut rng = rng_from_seed(seed);
            let mut times: Vec<f64> = (0..n)
                .map(|_| uniform_below(&mut rng, 10_000) as f64 * 0.01)
                .collect();
            times.sort_by(f64::total_cmp);
            times.dedup();
            let cfg = KernelConfig { length_scale, ..KernelConfig::default() };
            let d = distance_matrix(&times, &times).unwrap();
            let k = kernel_matrix(&d, &cfg);
            for i in 0..times.len() {
                proptest::prop_assert_eq!(k[(i, i)], 1.0);
                for j in 0..times.len() {
                    proptest::prop_assert!(k[(i, j)] >= 0.0 && k[(i, j)] <= 1.0);
                    // entries stay strictly positive until the exponent
                    // underflows f64 (exp(-745) is the smallest subnormal)
                    if d.entries()[(i, j)] / length_scale < 700.0 {
                        proptest::prop_assert!(k[(i, j)] > 0.0);
                    }
                    proptest::prop_assert_eq!(k[(i, j)], k[(j, i)]);
                }
            }
        }
    }
}
