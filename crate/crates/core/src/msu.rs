// SPDX-License-Identifier: MIT OR Apache-2.0

//! Model Sensitivity to Uncertainty.
//!
//! For one layer, MSU is the mean over pairs of the Euclidean distance
//! between the certain-arm and uncertain-arm activation vectors:
//!
//! ```text
//! MSU(l) = 1/N * sum_i || h_i(l, certain) - h_i(l, uncertain) ||_2
//! ```
//!
//! Distances are raw (unnormalized). Raw values scale with activation
//! magnitude and `d_model`, so averages from different models are not
//! directly comparable; [`LayerMsu::msu_normalized`] divides by the mean
//! activation norm of the layer as a diagnostic.
//!
//! All sums run in `f64` in row order, whatever the storage precision.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::{Element, Matrix};
use crate::rng::ProbeRng;
use crate::tensorio::ActivationRun;

pub const DEFAULT_RESAMPLES: usize = 1000;

#[derive(Debug, Error, PartialEq)]
pub enum MsuError {
    #[error("arm shapes differ: certain is {certain:?}, uncertain is {uncertain:?}")]
    ShapeMismatch {
        certain: (usize, usize),
        uncertain: (usize, usize),
    },
    #[error("no pairs")]
    NoPairs,
    #[error("non-finite activation in {arm} arm at row {row}, column {col}")]
    NonFinite { arm: &'static str, row: usize, col: usize },
    #[error("bootstrap needs at least 2 pairs, got {0}")]
    InsufficientData(usize),
    #[error("bootstrap needs at least one resample")]
    NoResamples,
    #[error("trend needs at least 2 layers, got {0}")]
    TooFewLayers(usize),
    #[error("empty profile")]
    EmptyProfile,
}

/// Euclidean distance between matching rows, one value per pair.
pub fn pair_distances<T: Element>(
    certain: &Matrix<T>,
    uncertain: &Matrix<T>,
) -> Result<Vec<f64>, MsuError> {
    if certain.shape() != uncertain.shape() {
        return Err(MsuError::ShapeMismatch {
            certain: certain.shape(),
            uncertain: uncertain.shape(),
        });
    }
    if certain.rows() == 0 {
        return Err(MsuError::NoPairs);
    }
    for (arm, m) in [("certain", certain), ("uncertain", uncertain)] {
        if let Some((row, col)) = m.first_non_finite() {
            return Err(MsuError::NonFinite { arm, row, col });
        }
    }
    Ok(certain
        .iter_rows()
        .zip(uncertain.iter_rows())
        .map(|(a, b)| {
            a.iter()
                .zip(b)
                .map(|(&x, &y)| {
                    let diff = x.to_f64() - y.to_f64();
                    diff * diff
                })
                .sum::<f64>()
                .sqrt()
        })
        .collect())
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// MSU for one layer.
pub fn msu_layer<T: Element>(certain: &Matrix<T>, uncertain: &Matrix<T>) -> Result<f64, MsuError> {
    Ok(mean(&pair_distances(certain, uncertain)?))
}

/// Percentile bootstrap (2.5 %, 97.5 %) of the mean per-pair distance.
pub fn bootstrap_ci<T: Element>(
    certain: &Matrix<T>,
    uncertain: &Matrix<T>,
    n_resamples: usize,
    seed: u64,
) -> Result<(f64, f64), MsuError> {
    let distances = pair_distances(certain, uncertain)?;
    bootstrap_mean_ci(&distances, n_resamples, seed)
}

/// Percentile bootstrap of the mean of `values`, resampling with
/// replacement. Quantiles interpolate linearly between order statistics.
pub fn bootstrap_mean_ci(values: &[f64], n_resamples: usize, seed: u64) -> Result<(f64, f64), MsuError> {
    let n = values.len();
    if n < 2 {
        return Err(MsuError::InsufficientData(n));
    }
    if n_resamples == 0 {
        return Err(MsuError::NoResamples);
    }
    let mut rng = ProbeRng::new(seed);
    let mut means: Vec<f64> = (0..n_resamples)
        .map(|_| {
            let mut sum = 0.0;
            for _ in 0..n {
                sum += values[rng.index(n)];
            }
            sum / n as f64
        })
        .collect();
    means.sort_by(f64::total_cmp);
    Ok((quantile_sorted(&means, 0.025), quantile_sorted(&means, 0.975)))
}

fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendStats {
    pub spearman_rho: f64,
    pub is_monotone_nondecreasing: bool,
    /// Rank correlation undefined because every value is equal; `spearman_rho`
    /// is then reported as 0.
    pub degenerate: bool,
}

/// Average ranks (1-based), ties sharing the mean of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &k in &order[start..end] {
            ranks[k] = rank;
        }
        start = end;
    }
    ranks
}

/// Spearman correlation between layer index and value, plus a monotonicity
/// flag.
pub fn trend_stats(per_layer: &[f64]) -> Result<TrendStats, MsuError> {
    if per_layer.len() < 2 {
        return Err(MsuError::TooFewLayers(per_layer.len()));
    }
    let is_monotone_nondecreasing = per_layer.windows(2).all(|w| w[1] >= w[0]);
    let ry = average_ranks(per_layer);
    let n = ry.len() as f64;
    let center = (n + 1.0) / 2.0;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (i, &r) in ry.iter().enumerate() {
        let dx = (i + 1) as f64 - center;
        let dy = r - center;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if syy == 0.0 {
        return Ok(TrendStats {
            spearman_rho: 0.0,
            is_monotone_nondecreasing,
            degenerate: true,
        });
    }
    let rho = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    Ok(TrendStats {
        spearman_rho: rho,
        is_monotone_nondecreasing,
        degenerate: false,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerMsu {
    pub layer: usize,
    pub msu: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// `msu` divided by the mean L2 norm of all activation rows of the layer.
    pub msu_normalized: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BootstrapSettings {
    #[serde(default = "default_resamples")]
    pub n_resamples: usize,
    pub seed: u64,
}

fn default_resamples() -> usize {
    DEFAULT_RESAMPLES
}

impl BootstrapSettings {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            n_resamples: DEFAULT_RESAMPLES,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MsuProfile {
    pub model_id: String,
    pub n_pairs: usize,
    pub d_model: usize,
    pub per_layer: Vec<LayerMsu>,
    pub average_msu: f64,
    pub trend: TrendStats,
    pub bootstrap: BootstrapSettings,
}

impl MsuProfile {
    pub fn values(&self) -> Vec<f64> {
        self.per_layer.iter().map(|l| l.msu).collect()
    }
}

fn mean_row_norm<T: Element>(m: &Matrix<T>) -> f64 {
    let total: f64 = m
        .iter_rows()
        .map(|r| r.iter().map(|&v| v.to_f64().powi(2)).sum::<f64>().sqrt())
        .sum();
    total / m.rows() as f64
}

fn layer_record(
    layer: usize,
    certain: &Matrix<f32>,
    uncertain: &Matrix<f32>,
    settings: &BootstrapSettings,
) -> Result<LayerMsu, MsuError> {
    let distances = pair_distances(certain, uncertain)?;
    let msu = mean(&distances);
    let (lo, hi) = if distances.len() >= 2 {
        bootstrap_mean_ci(
            &distances,
            settings.n_resamples,
            ProbeRng::derived(settings.seed, layer as u64).next_u64(),
        )?
    } else {
        (msu, msu)
    };
    let norm = 0.5 * (mean_row_norm(certain) + mean_row_norm(uncertain));
    Ok(LayerMsu {
        layer,
        msu,
        // a percentile interval need not contain the point estimate
        ci_low: lo.min(msu),
        ci_high: hi.max(msu),
        msu_normalized: if norm > 0.0 { msu / norm } else { 0.0 },
    })
}

/// Per-layer MSU with bootstrap intervals, the layer average and trend.
///
/// Layers are processed in parallel and gathered in layer order; every
/// layer draws from its own seeded stream, so results do not depend on
/// scheduling.
pub fn msu_profile(run: &ActivationRun, settings: &BootstrapSettings) -> Result<MsuProfile, MsuError> {
    if run.n_layers() == 0 {
        return Err(MsuError::EmptyProfile);
    }
    let per_layer = (0..run.n_layers())
        .into_par_iter()
        .map(|l| {
            let (c, u) = run.layer(l);
            layer_record(l, c, u, settings)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let values: Vec<f64> = per_layer.iter().map(|l| l.msu).collect();
    let trend = if values.len() >= 2 {
        trend_stats(&values)?
    } else {
        TrendStats {
            spearman_rho: 0.0,
            is_monotone_nondecreasing: true,
            degenerate: true,
        }
    };
    Ok(MsuProfile {
        model_id: run.manifest.model_id.clone(),
        n_pairs: run.n_pairs(),
        d_model: run.d_model(),
        average_msu: mean(&values),
        per_layer,
        trend,
        bootstrap: *settings,
    })
}

/// Unweighted mean of the per-layer values.
pub fn average_msu(profile: &MsuProfile) -> Result<f64, MsuError> {
    if profile.per_layer.is_empty() {
        return Err(MsuError::EmptyProfile);
    }
    Ok(mean(&profile.values()))
}
