//! Ornstein-Uhlenbeck sample paths drawn as a single multivariate Gaussian
//! with exponential-kernel covariance.
//!
//! The training series and its out-of-sample continuation come from one
//! joint draw over the concatenated `(n_train + n_oos)`-point grid, so
//! predicting the continuation from the past is a well-posed task: the
//! covariance between the last training point and the first out-of-sample
//! point is `exp(-dt / length_scale)`, not zero.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, KernelConfig, LinalgError};
use crate::rng::{rng_from_seed, standard_normals};
use crate::series::{split_regular_grid, SeriesError, TimeSeries};

#[derive(Debug, Error)]
pub enum OuError {
    #[error("invalid OU config: {reason}")]
    InvalidConfig { reason: String },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

/// Generation parameters. Defaults match the reference experiment: 1000
/// training points plus a 250-point continuation on a `dt = 0.1` grid,
/// mean level 5.0, kernel `exp(-D / 2.0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OuConfig {
    pub n_train: usize,
    pub n_oos: usize,
    pub dt: f64,
    pub t0: f64,
    pub mu: f64,
    pub kernel: KernelConfig,
    pub seed: u64,
}

impl Default for OuConfig {
    fn default() -> Self {
        Self {
            n_train: 1000,
            n_oos: 250,
            dt: 0.1,
            t0: 0.0,
            mu: 5.0,
            kernel: KernelConfig::default(),
            seed: 0,
        }
    }
}

impl OuConfig {
    pub fn validate(&self) -> Result<(), OuError> {
        if self.n_train < 2 {
            return Err(OuError::InvalidConfig {
                reason: format!("n_train must be >= 2, got {}", self.n_train),
            });
        }
        if self.dt <= 0.0 || !self.dt.is_finite() {
            return Err(OuError::InvalidConfig {
                reason: format!("dt must be positive, got {}", self.dt),
            });
        }
        if !self.t0.is_finite() || !self.mu.is_finite() {
            return Err(OuError::InvalidConfig {
                reason: "t0 and mu must be finite".into(),
            });
        }
        self.kernel.validate()?;
        Ok(())
    }
}

/// Draw one OU path and split it into `(train, oos)`.
///
/// The covariance is the exponential kernel over the joint regular grid; the
/// draw is `mu + L z` with `L` the Cholesky factor of the (jitter-stabilized)
/// covariance and `z` standard normals from the frozen seeded generator, so
/// identical configs produce bit-identical series. The ridge parameter plays
/// no role in generation.
///
/// With `n_oos = 0` the returned out-of-sample series is empty.
pub fn sample_ou(cfg: &OuConfig) -> Result<(TimeSeries, TimeSeries), OuError> {
    cfg.validate()?;
    let total = cfg.n_train + cfg.n_oos;
    let grid = split_regular_grid(total, cfg.dt, cfg.t0)?;

    let sigma = linalg::kernel_matrix(&linalg::distance_matrix(&grid, &grid)?, &cfg.kernel);
    let lower = linalg::factorize_spd(&sigma, cfg.kernel.jitter)?.lower();

    let mut rng = rng_from_seed(cfg.seed);
    let z = nalgebra::DVector::from_vec(standard_normals(&mut rng, total));
    let draw = lower * z;
    let values: Vec<f64> = draw.iter().map(|x| cfg.mu + x).collect();

    let train = TimeSeries::new(
        grid[..cfg.n_train].to_vec(),
        values[..cfg.n_train].to_vec(),
    )?;
    let oos = if cfg.n_oos == 0 {
        TimeSeries::empty()
    } else {
        TimeSeries::new(grid[cfg.n_train..].to_vec(), values[cfg.n_train..].to_vec())?
    };
    Ok((train, oos))
}

/// Marginal variance of the process at any single time point.
///
/// The kernel diagonal is `exp(0) = 1` regardless of length scale, so the
/// stationary marginal variance is always 1; exposed as a diagnostic.
pub fn stationary_marginal_variance(cfg: &OuConfig) -> f64 {
    (-0.0 / cfg.kernel.length_scale).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg(seed: u64) -> OuConfig {
        OuConfig {
            n_train: 8,
            n_oos: 4,
            seed,
            ..OuConfig::default()
        }
    }

    #[test]
    fn deterministic_for_equal_seeds() {
        let (a_train, a_oos) = sample_ou(&small_cfg(42)).unwrap();
        let (b_train, b_oos) = sample_ou(&small_cfg(42)).unwrap();
        assert_eq!(a_train, b_train);
        assert_eq!(a_oos, b_oos);

        let (c_train, _) = sample_ou(&small_cfg(43)).unwrap();
        assert_ne!(a_train, c_train);
    }

    #[test]
    fn split_shapes_and_grid_continuity() {
        let (train, oos) = sample_ou(&small_cfg(1)).unwrap();
        assert_eq!(train.len(), 8);
        assert_eq!(oos.len(), 4);
        assert!(train.last_time().unwrap() < oos.first_time().unwrap());
        // concatenated times form one strictly increasing regular grid
        let mut all = train.times().to_vec();
        all.extend_from_slice(oos.times());
        for (i, w) in all.windows(2).enumerate() {
            assert!((w[1] - w[0] - 0.1).abs() < 1e-12, "gap at {i}");
        }
    }

    #[test]
    fn empty_oos_when_requested() {
        let cfg = OuConfig {
            n_oos: 0,
            n_train: 5,
            seed: 9,
            ..OuConfig::default()
        };
        let (train, oos) = sample_ou(&cfg).unwrap();
        assert_eq!(train.len(), 5);
        assert!(oos.is_empty());
    }

    #[test]
    fn marginal_variance_is_unity() {
        assert_eq!(stationary_marginal_variance(&OuConfig::default()), 1.0);
        let wide = OuConfig {
            kernel: KernelConfig {
                length_scale: 17.0,
                ..KernelConfig::default()
            },
            ..OuConfig::default()
        };
        assert_eq!(stationary_marginal_variance(&wide), 1.0);
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut cfg = OuConfig::default();
        cfg.n_train = 1;
        assert!(sample_ou(&cfg).is_err());
        cfg = OuConfig {
            dt: 0.0,
            ..OuConfig::default()
        };
        assert!(sample_ou(&cfg).is_err());
        cfg = OuConfig {
            mu: f64::INFINITY,
            ..OuConfig::default()
        };
        assert!(sample_ou(&cfg).is_err());
    }

    // Monte-Carlo oracles for mean and variance live in the acceptance
    // suite (they share draws with the covariance check); here a cheap
    // smoke check that the level is near mu.
    #[test]
    fn level_near_mu() {
        let mut acc = 0.0;
        let runs = 200;
        for seed in 0..runs {
            let (train, _) = sample_ou(&OuConfig {
                n_train: 2,
                n_oos: 0,
                seed,
                ..OuConfig::default()
            })
            .unwrap();
            acc += train.values()[0];
        }
        let mean = acc / runs as f64;
        assert!((mean - 5.0).abs() < 0.3, "mean {mean}");
    }
}
