// SPDX-License-Identifier: MIT OR Apache-2.0

//! Two-component PCA per layer, class separability in the projected plane,
//! and the cross-layer inversion detector.
//!
//! PCA is fitted on both arms stacked together (2N rows), centered but not
//! scaled, so both classes share one projection. Component rows are
//! sign-canonicalized: the entry of largest magnitude is positive.
//!
//! # Inversion
//!
//! An "inversion" is operationalized as follows. Walking layers in order,
//! each layer's components are aligned to the previous layer's (a row is
//! negated when its dot product with the previous row is negative; the first
//! layer is left in canonical orientation). The separation sign of a layer
//! is the sign of `PC1(centroid_uncertain) - PC1(centroid_certain)` after
//! alignment, and a layer is flagged when its nonzero sign differs from the
//! most recent nonzero sign before it.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::{Element, Matrix};
use crate::tensorio::ActivationRun;

/// Relative eigenvalue gap under which PC1 and PC2 are reported as tied.
pub const TIE_TOLERANCE: f64 = 1e-9;
/// Separation below this fraction of the PC1 standard deviation counts as 0.
pub const ZERO_SEPARATION: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum PcaError {
    #[error("PCA needs at least 3 rows, got {0}")]
    TooFewRows(usize),
    #[error("PCA needs at least 2 columns, got {0}")]
    TooFewColumns(usize),
    #[error("all rows are identical; no direction of variance")]
    Degenerate,
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("layer {layer} out of range for a {n_layers}-layer run")]
    LayerOutOfRange { layer: usize, n_layers: usize },
    #[error("inversion detection needs at least 2 layers, got {0}")]
    TooFewLayers(usize),
}

/// Result of [`fit_pca2`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pca2 {
    pub mean: Vec<f64>,
    /// Rows PC1 and PC2, unit norm and mutually orthogonal.
    pub components: [Vec<f64>; 2],
    /// Eigenvalues of the sample covariance (divisor M-1), nonincreasing.
    pub explained_variance: [f64; 2],
    /// Trace of the sample covariance.
    pub total_variance: f64,
    /// PC1 and PC2 variances coincide, so any rotation of the pair is an
    /// equally valid basis.
    pub tie: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = dot(v, v).sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}

/// Negates `row` when its largest-magnitude entry (first one on ties) is
/// negative. Returns whether it was negated.
pub fn canonicalize_sign(row: &mut [f64]) -> bool {
    let mut best = 0;
    for (i, v) in row.iter().enumerate() {
        if v.abs() > row[best].abs() {
            best = i;
        }
    }
    if row.get(best).is_some_and(|&v| v < 0.0) {
        row.iter_mut().for_each(|x| *x = -*x);
        true
    } else {
        false
    }
}

/// Top two eigenpairs of a symmetric matrix, largest first.
fn top2_eigen(sym: DMatrix<f64>) -> [(f64, Vec<f64>); 2] {
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let pick = |k: usize| {
        let idx = order[k];
        (eig.eigenvalues[idx], eig.eigenvectors.column(idx).iter().copied().collect())
    };
    [pick(0), pick(1)]
}

/// Unit vector orthogonal to unit `v`, built from the coordinate axis least
/// aligned with it.
fn orthogonal_complement(v: &[f64]) -> Vec<f64> {
    let axis = (0..v.len())
        .min_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs()))
        .unwrap_or(0);
    let mut w: Vec<f64> = v.iter().map(|&x| -v[axis] * x).collect();
    w[axis] += 1.0;
    normalize(&mut w);
    w
}

/// Fits the two leading principal components of `data` (rows are samples).
///
/// Uses the `d × d` covariance when `d ≤ M` and the `M × M` Gram matrix of
/// the centered rows otherwise; both give the same eigenpairs.
pub fn fit_pca2<T: Element>(data: &Matrix<T>) -> Result<Pca2, PcaError> {
    let (m, d) = data.shape();
    if m < 3 {
        return Err(PcaError::TooFewRows(m));
    }
    if d < 2 {
        return Err(PcaError::TooFewColumns(d));
    }
    if let Some((row, col)) = data.first_non_finite() {
        return Err(PcaError::NonFinite { row, col });
    }
    let first = data.row(0);
    if data.iter_rows().all(|r| r == first) {
        return Err(PcaError::Degenerate);
    }

    let mut mean = vec![0.0; d];
    for r in data.iter_rows() {
        for (acc, &v) in mean.iter_mut().zip(r) {
            *acc += v.to_f64();
        }
    }
    mean.iter_mut().for_each(|v| *v /= m as f64);
    let denom = (m - 1) as f64;

    // centered data, row-major (M × d) and column-major (d × M)
    let centered = Matrix::from_fn(m, d, |i, j| data.get(i, j).to_f64() - mean[j]);
    let columns = Matrix::from_fn(d, m, |j, i| centered.get(i, j));
    let total_variance = centered.as_slice().iter().map(|v| v * v).sum::<f64>() / denom;

    let [(l1, mut v1), (l2, mut v2)] = if d <= m {
        top2_eigen(gram(&columns, denom))
    } else {
        let [(g1, u1), (g2, u2)] = top2_eigen(gram(&centered, denom));
        let lift = |u: &[f64]| -> Vec<f64> { (0..d).map(|j| dot(columns.row(j), u)).collect() };
        [(g1, lift(&u1)), (g2, lift(&u2))]
    };

    // re-orthonormalize; the Gram route only fixes directions up to scale and
    // returns a zero vector for a null eigenvalue
    normalize(&mut v1);
    let overlap = dot(&v1, &v2);
    v2.iter_mut().zip(&v1).for_each(|(b, a)| *b -= overlap * a);
    if normalize(&mut v2) <= 1e-12 * l1.abs().sqrt().max(1.0) {
        v2 = orthogonal_complement(&v1);
    }
    canonicalize_sign(&mut v1);
    canonicalize_sign(&mut v2);

    let l1 = l1.max(0.0);
    let l2 = l2.clamp(0.0, l1);
    Ok(Pca2 {
        mean,
        components: [v1, v2],
        explained_variance: [l1, l2],
        total_variance,
        tie: l1 - l2 <= TIE_TOLERANCE * l1,
    })
}

/// `rows · rowsᵀ / denom`, symmetric, filled in parallel by row.
fn gram(rows: &Matrix<f64>, denom: f64) -> DMatrix<f64> {
    let n = rows.rows();
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| (i..n).map(|j| dot(rows.row(i), rows.row(j)) / denom).collect())
        .collect();
    DMatrix::from_fn(n, n, |i, j| {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        upper[a][b - a]
    })
}

/// `(data − mean) · componentsᵀ`, one `(pc1, pc2)` row per input row.
pub fn project<T: Element>(
    data: &Matrix<T>,
    mean: &[f64],
    components: &[Vec<f64>; 2],
) -> Result<Matrix<f64>, PcaError> {
    let d = data.cols();
    if mean.len() != d || components.iter().any(|c| c.len() != d) {
        return Err(PcaError::ShapeMismatch(format!(
            "data has {d} columns, mean {} and components {}/{}",
            mean.len(),
            components[0].len(),
            components[1].len()
        )));
    }
    let mut out = Matrix::zeros(data.rows(), 2);
    for (i, row) in data.iter_rows().enumerate() {
        for (k, comp) in components.iter().enumerate() {
            let mut acc = 0.0;
            for j in 0..d {
                acc += (row[j].to_f64() - mean[j]) * comp[j];
            }
            out.set(i, k, acc);
        }
    }
    Ok(out)
}

fn centroid(proj: &Matrix<f64>) -> [f64; 2] {
    let n = proj.rows() as f64;
    let mut c = [0.0; 2];
    for r in proj.iter_rows() {
        c[0] += r[0];
        c[1] += r[1];
    }
    [c[0] / n, c[1] / n]
}

fn dist2(p: &[f64], c: &[f64; 2]) -> f64 {
    (p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)
}

/// Nearest-centroid accuracy over both arms (centroids include the point
/// being classified; equidistant points score one half), mapped from
/// `[0.5, 1]` onto `[0, 1]` and floored at 0.
pub fn separability(proj_certain: &Matrix<f64>, proj_uncertain: &Matrix<f64>) -> f64 {
    let cc = centroid(proj_certain);
    let cu = centroid(proj_uncertain);
    let score = |p: &[f64], own: &[f64; 2], other: &[f64; 2]| {
        let (a, b) = (dist2(p, own), dist2(p, other));
        if a < b {
            1.0
        } else if a == b {
            0.5
        } else {
            0.0
        }
    };
    let correct: f64 = proj_certain.iter_rows().map(|p| score(p, &cc, &cu)).sum::<f64>()
        + proj_uncertain.iter_rows().map(|p| score(p, &cu, &cc)).sum::<f64>();
    let accuracy = correct / (proj_certain.rows() + proj_uncertain.rows()) as f64;
    (2.0 * accuracy - 1.0).max(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaLayerResult {
    pub layer: usize,
    pub mean: Vec<f64>,
    pub components: [Vec<f64>; 2],
    pub explained_variance: [f64; 2],
    pub total_variance: f64,
    pub tie: bool,
    pub proj_certain: Matrix<f64>,
    pub proj_uncertain: Matrix<f64>,
    pub centroid_certain: [f64; 2],
    pub centroid_uncertain: [f64; 2],
    pub separability: f64,
    /// Set by [`detect_inversion`] when a component was negated to line up
    /// with the previous layer.
    pub flipped_vs_previous: [bool; 2],
}

impl PcaLayerResult {
    /// Negates component `k` together with everything expressed in it.
    pub fn negate_component(&mut self, k: usize) {
        self.components[k].iter_mut().for_each(|x| *x = -*x);
        for proj in [&mut self.proj_certain, &mut self.proj_uncertain] {
            for i in 0..proj.rows() {
                let v = proj.get(i, k);
                proj.set(i, k, -v);
            }
        }
        self.centroid_certain[k] = -self.centroid_certain[k];
        self.centroid_uncertain[k] = -self.centroid_uncertain[k];
    }
}

/// PCA of one layer's arms, fitted jointly.
pub fn analyze_arms<T: Element>(
    layer: usize,
    certain: &Matrix<T>,
    uncertain: &Matrix<T>,
) -> Result<PcaLayerResult, PcaError> {
    if certain.shape() != uncertain.shape() {
        return Err(PcaError::ShapeMismatch(format!(
            "certain {:?} vs uncertain {:?}",
            certain.shape(),
            uncertain.shape()
        )));
    }
    let stacked = certain
        .vstack(uncertain)
        .map_err(|e| PcaError::ShapeMismatch(e.to_string()))?;
    let fit = fit_pca2(&stacked)?;
    let proj_certain = project(certain, &fit.mean, &fit.components)?;
    let proj_uncertain = project(uncertain, &fit.mean, &fit.components)?;
    Ok(PcaLayerResult {
        layer,
        centroid_certain: centroid(&proj_certain),
        centroid_uncertain: centroid(&proj_uncertain),
        separability: separability(&proj_certain, &proj_uncertain),
        mean: fit.mean,
        components: fit.components,
        explained_variance: fit.explained_variance,
        total_variance: fit.total_variance,
        tie: fit.tie,
        proj_certain,
        proj_uncertain,
        flipped_vs_previous: [false, false],
    })
}

pub fn analyze_layer(run: &ActivationRun, layer: usize) -> Result<PcaLayerResult, PcaError> {
    if layer >= run.n_layers() {
        return Err(PcaError::LayerOutOfRange {
            layer,
            n_layers: run.n_layers(),
        });
    }
    let (c, u) = run.layer(layer);
    analyze_arms(layer, c, u)
}

/// Runs [`analyze_layer`] on each listed layer in parallel, in list order.
pub fn analyze_layers(run: &ActivationRun, layers: &[usize]) -> Result<Vec<PcaLayerResult>, PcaError> {
    layers
        .par_iter()
        .map(|&l| analyze_layer(run, l))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InversionReport {
    /// Layer ordinals whose separation sign reverses the previous nonzero sign.
    pub layers_with_flip: Vec<usize>,
    /// Per analyzed layer: +1, -1 or 0.
    pub separation_sign_series: Vec<i8>,
}

/// Indices whose nonzero sign differs from the most recent nonzero sign.
pub fn flag_sign_changes(signs: &[i8]) -> Vec<usize> {
    let mut last = 0i8;
    let mut flagged = Vec::new();
    for (i, &s) in signs.iter().enumerate() {
        if s == 0 {
            continue;
        }
        if last != 0 && s != last {
            flagged.push(i);
        }
        last = s;
    }
    flagged
}

/// Aligns `results` (ordered by layer) in place and reports sign reversals
/// of the uncertain-minus-certain centroid offset along PC1.
pub fn detect_inversion(results: &mut [PcaLayerResult]) -> Result<InversionReport, PcaError> {
    if results.len() < 2 {
        return Err(PcaError::TooFewLayers(results.len()));
    }
    let mut signs = Vec::with_capacity(results.len());
    for k in 0..results.len() {
        let (done, rest) = results.split_at_mut(k);
        let current = &mut rest[0];
        for r in 0..2 {
            let flip = match done.last() {
                None => {
                    let mut probe = current.components[r].clone();
                    canonicalize_sign(&mut probe)
                }
                Some(prev) => dot(&current.components[r], &prev.components[r]) < 0.0,
            };
            if flip {
                current.negate_component(r);
            }
            current.flipped_vs_previous[r] = flip && k > 0;
        }
        let offset = current.centroid_uncertain[0] - current.centroid_certain[0];
        let scale = current.explained_variance[0].sqrt().max(f64::MIN_POSITIVE);
        signs.push(if offset.abs() <= ZERO_SEPARATION * scale {
            0
        } else if offset > 0.0 {
            1
        } else {
            -1
        });
    }
    let layers_with_flip = flag_sign_changes(&signs)
        .into_iter()
        .map(|i| results[i].layer)
        .collect();
    Ok(InversionReport {
        layers_with_flip,
        separation_sign_series: signs,
    })
}

/// Per-layer entry of `pca.json`; projections live in the per-layer CSVs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaLayerSummary {
    pub layer: usize,
    pub components: [Vec<f64>; 2],
    pub explained_variance: [f64; 2],
    pub total_variance: f64,
    pub tie: bool,
    pub centroid_certain: [f64; 2],
    pub centroid_uncertain: [f64; 2],
    pub separability: f64,
    pub flipped_vs_previous: [bool; 2],
}

impl From<&PcaLayerResult> for PcaLayerSummary {
    fn from(r: &PcaLayerResult) -> Self {
        Self {
            layer: r.layer,
            components: r.components.clone(),
            explained_variance: r.explained_variance,
            total_variance: r.total_variance,
            tie: r.tie,
            centroid_certain: r.centroid_certain,
            centroid_uncertain: r.centroid_uncertain,
            separability: r.separability,
            flipped_vs_previous: r.flipped_vs_previous,
        }
    }
}

pub const INVERSION_RULE: &str = "components aligned layer to layer by sign of the dot product \
with the previous layer; separation sign = sign(PC1 of uncertain centroid - PC1 of certain \
centroid); a layer is flagged when its nonzero sign differs from the last nonzero sign";

/// Contents of `pca.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaSummary {
    pub model_id: String,
    pub n_pairs: usize,
    pub d_model: usize,
    pub layers: Vec<PcaLayerSummary>,
    /// Absent when fewer than two layers were analyzed.
    pub inversion: Option<InversionReport>,
    pub inversion_rule: String,
}

impl PcaSummary {
    pub fn new(run: &ActivationRun, results: &[PcaLayerResult], inversion: Option<InversionReport>) -> Self {
        Self {
            model_id: run.manifest.model_id.clone(),
            n_pairs: run.n_pairs(),
            d_model: run.d_model(),
            layers: results.iter().map(PcaLayerSummary::from).collect(),
            inversion,
            inversion_rule: INVERSION_RULE.to_string(),
        }
    }
}
