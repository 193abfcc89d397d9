//! Disentanglement and manipulation metrics: attribute and boundary
//! correlation, re-scoring matrices, layer-wise re-scoring and identity drift.
//!
//! Aggregations run over codes in index order so floating-point sums are
//! reproducible regardless of how the per-code work is scheduled.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry;
use crate::io::ScoreTable;
use crate::linalg;
use crate::oracle::{IdentityExtractor, LayerGroupMap, Scorer};
use crate::types::{Boundary, LatentCode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub attributes: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl CorrelationMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i][j]
    }
}

/// Pearson correlation between every pair of score columns.
pub fn attribute_correlation(table: &ScoreTable) -> Result<CorrelationMatrix> {
    let n = table.len();
    if n < 2 {
        return Err(Error::Data(format!("correlation needs at least 2 rows, got {n}")));
    }
    let m = table.attributes.len();
    let centered: Vec<Vec<f64>> = (0..m)
        .map(|j| {
            let col = table.column(j);
            let mean = col.iter().sum::<f64>() / n as f64;
            col.into_iter().map(|v| v - mean).collect()
        })
        .collect();
    let norms: Vec<f64> = centered.iter().map(|c| linalg::norm(c)).collect();
    for (j, &s) in norms.iter().enumerate() {
        if s == 0.0 {
            return Err(Error::ZeroVariance(table.attributes[j].clone()));
        }
    }
    let mut values = vec![vec![0.0; m]; m];
    for i in 0..m {
        values[i][i] = 1.0;
        for j in i + 1..m {
            let r = (linalg::dot(&centered[i], &centered[j]) / (norms[i] * norms[j])).clamp(-1.0, 1.0);
            values[i][j] = r;
            values[j][i] = r;
        }
    }
    Ok(CorrelationMatrix { attributes: table.attributes.clone(), values })
}

/// Cosine similarity between every pair of boundary normals.
pub fn boundary_correlation(boundaries: &[Boundary]) -> Result<CorrelationMatrix> {
    let first = boundaries
        .first()
        .ok_or_else(|| Error::Data("no boundaries given".into()))?;
    for b in boundaries {
        if b.space() != first.space() {
            return Err(Error::SpaceMismatch {
                expected: first.space().to_string(),
                actual: b.space().to_string(),
            });
        }
    }
    let values = boundaries
        .iter()
        .map(|a| boundaries.iter().map(|b| geometry::boundary_cosine(a, b)).collect())
        .collect::<Result<Vec<Vec<f64>>>>()?;
    Ok(CorrelationMatrix {
        attributes: boundaries.iter().map(|b| b.attribute().to_string()).collect(),
        values,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RescoringOptions {
    /// Pass raw scores through a logistic sigmoid first (for imported logits).
    pub sigmoid: bool,
}

/// Mean score change of every measured attribute (columns) after editing
/// along every boundary (rows).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RescoringMatrix {
    pub manipulated: Vec<String>,
    pub measured: Vec<String>,
    pub values: Vec<Vec<f64>>,
    pub alpha: f64,
    pub n_codes: usize,
    pub aggregation: String,
    pub sigmoid: bool,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn transformed(scorer: &dyn Scorer, z: &LatentCode, opts: RescoringOptions) -> Result<Vec<f64>> {
    let mut s = scorer.score(z)?;
    if opts.sigmoid {
        s.iter_mut().for_each(|v| *v = sigmoid(*v));
    }
    Ok(s)
}

/// Averages per-code rows in index order.
fn mean_rows(rows: Vec<Vec<f64>>) -> Vec<f64> {
    let n = rows.len() as f64;
    let mut acc = vec![0.0; rows.first().map_or(0, Vec::len)];
    for r in rows {
        linalg::axpy(1.0, &r, &mut acc);
    }
    acc.iter_mut().for_each(|v| *v /= n);
    acc
}

/// Entry `(i, j)` is the mean over codes of `score_j(z + α n_i) − score_j(z)`.
/// Under the noise-free linear model this equals `α λ_j n_jᵀn_i`.
pub fn rescoring_matrix(
    scorer: &dyn Scorer,
    boundaries: &[Boundary],
    codes: &[LatentCode],
    alpha: f64,
    opts: RescoringOptions,
) -> Result<RescoringMatrix> {
    if codes.is_empty() {
        return Err(Error::Data("re-scoring needs at least one code".into()));
    }
    if alpha == 0.0 || !alpha.is_finite() {
        return Err(Error::validation(format!("alpha must be finite and non-zero, got {alpha}")));
    }
    let values = boundaries
        .iter()
        .map(|b| {
            let deltas = codes
                .par_iter()
                .map(|z| {
                    let before = transformed(scorer, z, opts)?;
                    let after = transformed(scorer, &geometry::edit(z, b, alpha)?, opts)?;
                    Ok(after.iter().zip(&before).map(|(a, b)| a - b).collect())
                })
                .collect::<Result<Vec<Vec<f64>>>>()?;
            Ok(mean_rows(deltas))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RescoringMatrix {
        manipulated: boundaries.iter().map(|b| b.attribute().to_string()).collect(),
        measured: scorer.attributes().to_vec(),
        values,
        alpha,
        n_codes: codes.len(),
        aggregation: "mean".into(),
        sigmoid: opts.sigmoid,
    })
}

/// Self-score change per boundary (rows) when editing one layer group at a
/// time (columns), followed by an `All` column editing every layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerwiseTable {
    pub attributes: Vec<String>,
    pub columns: Vec<String>,
    pub values: Vec<Vec<f64>>,
    pub alpha: f64,
    pub n_codes: usize,
}

pub fn layerwise_rescoring(
    scorer: &dyn Scorer,
    boundaries: &[Boundary],
    codes: &[LatentCode],
    alpha: f64,
    map: &LayerGroupMap,
) -> Result<LayerwiseTable> {
    if codes.is_empty() {
        return Err(Error::Data("layer-wise analysis needs at least one code".into()));
    }
    if let Some(bad) = codes.iter().position(|z| z.layers() != map.layers()) {
        return Err(Error::validation(format!(
            "code {bad} has {} layers, group map expects {}",
            codes[bad].layers(),
            map.layers()
        )));
    }
    let mut layer_sets: Vec<Vec<usize>> = (0..map.groups().len()).map(|g| map.group_layers(g)).collect();
    layer_sets.push((0..map.layers()).collect());
    let mut columns: Vec<String> = (0..map.groups().len()).map(|g| map.label(g)).collect();
    columns.push("All".into());

    let values = boundaries
        .iter()
        .map(|b| {
            let k = scorer
                .attributes()
                .iter()
                .position(|a| a == b.attribute())
                .ok_or_else(|| Error::UnknownAttribute(b.attribute().to_string()))?;
            layer_sets
                .iter()
                .map(|layers| {
                    let deltas = codes
                        .par_iter()
                        .map(|z| {
                            let before = scorer.score(z)?[k];
                            let after = scorer.score(&geometry::edit_layered(z, b, alpha, layers)?)?[k];
                            Ok(vec![after - before])
                        })
                        .collect::<Result<Vec<_>>>()?;
                    Ok(mean_rows(deltas)[0])
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LayerwiseTable {
        attributes: boundaries.iter().map(|b| b.attribute().to_string()).collect(),
        columns,
        values,
        alpha,
        n_codes: codes.len(),
    })
}

/// `1 − cos(u, v)` clamped to `[0, 1]`; opposite features count as fully dissimilar.
pub fn cosine_distance(u: &[f64], v: &[f64]) -> Result<f64> {
    let (uu, vv) = (linalg::dot(u, u), linalg::dot(v, v));
    if uu == 0.0 || vv == 0.0 {
        return Err(Error::validation("zero-norm feature vector"));
    }
    // sqrt(uu·uu) == uu exactly, so identical inputs give exactly 0.
    Ok((1.0 - linalg::dot(u, v) / (uu * vv).sqrt()).clamp(0.0, 1.0))
}

/// Mean cosine distance between identity features before and after editing.
pub fn identity_discrepancy(
    extractor: &IdentityExtractor,
    before: &[LatentCode],
    after: &[LatentCode],
) -> Result<f64> {
    if before.len() != after.len() {
        return Err(Error::validation(format!(
            "{} codes before editing but {} after",
            before.len(),
            after.len()
        )));
    }
    if before.is_empty() {
        return Err(Error::Data("no code pairs given".into()));
    }
    let distances = before
        .par_iter()
        .zip(after)
        .map(|(a, b)| cosine_distance(&extractor.features(a)?, &extractor.features(b)?))
        .collect::<Result<Vec<f64>>>()?;
    Ok(distances.iter().sum::<f64>() / distances.len() as f64)
}

/// Mean cosine distance over pre-computed feature pairs.
pub fn feature_discrepancy(before: &[Vec<f64>], after: &[Vec<f64>]) -> Result<f64> {
    if before.len() != after.len() || before.is_empty() {
        return Err(Error::validation("feature lists must be non-empty and equally long"));
    }
    let total = before
        .iter()
        .zip(after)
        .map(|(a, b)| cosine_distance(a, b))
        .sum::<Result<f64>>()?;
    Ok(total / before.len() as f64)
}
