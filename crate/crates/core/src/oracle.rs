//! Synthetic ground truth realizing the linear semantic model `s = ΛNᵀz (+ ε)`.
//!
//! The oracle stands in for a generator plus attribute classifier: every
//! quantity a real pipeline can only estimate (normals, slopes, score
//! covariance) is known exactly here, so recovery and editing can be checked
//! against it.

use std::collections::BTreeMap;
use std::ops::Range;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::rng::seeded_rng;
use crate::types::{Boundary, LatentCode, Space, UNIT_NORM_TOL};

/// Optional monotone squashing applied to each score.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Nonlinearity {
    #[default]
    None,
    Tanh,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemanticModel {
    dim: usize,
    attributes: Vec<String>,
    lambdas: Vec<f64>,
    normals: Vec<Vec<f64>>,
    noise_sigma: f64,
    nonlinearity: Nonlinearity,
}

impl SemanticModel {
    pub fn new(
        attributes: Vec<String>,
        lambdas: Vec<f64>,
        normals: Vec<Vec<f64>>,
        noise_sigma: f64,
    ) -> Result<Self> {
        let m = attributes.len();
        if m == 0 {
            return Err(Error::Model("a model needs at least one attribute".into()));
        }
        if lambdas.len() != m || normals.len() != m {
            return Err(Error::Model(format!(
                "{m} attributes, {} lambdas, {} normals",
                lambdas.len(),
                normals.len()
            )));
        }
        let dim = normals[0].len();
        if dim == 0 {
            return Err(Error::Model("model dimension must be >= 1".into()));
        }
        for (k, (name, n)) in attributes.iter().zip(&normals).enumerate() {
            if n.len() != dim {
                return Err(Error::DimMismatch { expected: dim, actual: n.len() });
            }
            let norm = linalg::norm(n);
            if (norm - 1.0).abs() > UNIT_NORM_TOL {
                return Err(Error::Model(format!("normal of '{name}' has norm {norm}")));
            }
            if !(lambdas[k] > 0.0 && lambdas[k].is_finite()) {
                return Err(Error::Model(format!("lambda of '{name}' must be positive")));
            }
        }
        if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
            return Err(Error::Model(format!("noise_sigma must be >= 0, got {noise_sigma}")));
        }
        if dim < m {
            log::warn!("model has {m} attributes in only {dim} dimensions");
        }
        Ok(Self { dim, attributes, lambdas, normals, noise_sigma, nonlinearity: Nonlinearity::None })
    }

    /// Two attributes in `R^4`: `λ = (1, 2)`, `n₁ = e₁`, `n₂ = (e₁ + e₂)/√2`.
    pub fn reference_m2() -> Self {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        Self::new(
            vec!["attr1".into(), "attr2".into()],
            vec![1.0, 2.0],
            vec![vec![1.0, 0.0, 0.0, 0.0], vec![r, r, 0.0, 0.0]],
            0.0,
        )
        .expect("reference model is valid")
    }

    pub fn with_nonlinearity(mut self, nonlinearity: Nonlinearity) -> Self {
        self.nonlinearity = nonlinearity;
        self
    }

    pub fn with_noise(mut self, noise_sigma: f64) -> Result<Self> {
        if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
            return Err(Error::Model(format!("noise_sigma must be >= 0, got {noise_sigma}")));
        }
        self.noise_sigma = noise_sigma;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn attributes(&self) -> &[String] {
        &self.attributes
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn normals(&self) -> &[Vec<f64>] {
        &self.normals
    }

    pub fn noise_sigma(&self) -> f64 {
        self.noise_sigma
    }

    pub fn nonlinearity(&self) -> Nonlinearity {
        self.nonlinearity
    }

    pub fn attribute_index(&self, name: &str) -> Result<usize> {
        self.attributes
            .iter()
            .position(|a| a == name)
            .ok_or_else(|| Error::UnknownAttribute(name.to_string()))
    }

    /// Ground-truth boundary of attribute `k` (unbiased, with its true λ).
    pub fn boundary(&self, k: usize, space: Space) -> Boundary {
        Boundary::from_unit(self.attributes[k].clone(), space, self.normals[k].clone())
            .and_then(|b| b.with_lambda(Some(self.lambdas[k])))
            .expect("model normals are unit and lambdas positive")
    }

    pub fn boundaries(&self, space: Space) -> Vec<Boundary> {
        (0..self.attributes.len()).map(|k| self.boundary(k, space)).collect()
    }

    /// `ΛNᵀv` followed by the nonlinearity, without noise.
    fn project(&self, v: &[f64]) -> Vec<f64> {
        self.normals
            .iter()
            .zip(&self.lambdas)
            .map(|(n, l)| self.squash(l * linalg::dot(n, v)))
            .collect()
    }

    fn squash(&self, s: f64) -> f64 {
        match self.nonlinearity {
            Nonlinearity::None => s,
            Nonlinearity::Tanh => s.tanh(),
        }
    }

    fn check_flat(&self, z: &LatentCode) -> Result<()> {
        if z.space() != Space::Z || z.layers() != 1 {
            return Err(Error::SpaceMismatch {
                expected: Space::Z.to_string(),
                actual: z.space().to_string(),
            });
        }
        if z.dim() != self.dim {
            return Err(Error::DimMismatch { expected: self.dim, actual: z.dim() });
        }
        Ok(())
    }

    /// Noise-free scores `ΛNᵀz`.
    pub fn mean_score(&self, z: &LatentCode) -> Result<Vec<f64>> {
        self.check_flat(z)?;
        Ok(self.project(z.values()))
    }
}

/// Scores `z` as `ΛNᵀz + ε`, `ε ~ N(0, σ²I)`. With `σ = 0` no randomness is consumed.
pub fn score<R: Rng + ?Sized>(model: &SemanticModel, z: &LatentCode, rng: &mut R) -> Result<Vec<f64>> {
    model.check_flat(z)?;
    Ok(model
        .normals
        .iter()
        .zip(&model.lambdas)
        .map(|(n, l)| {
            let mut s = l * linalg::dot(n, z.values());
            if model.noise_sigma > 0.0 {
                s += model.noise_sigma * rng.sample::<f64, _>(StandardNormal);
            }
            model.squash(s)
        })
        .collect())
}

/// Score covariance `ΛNᵀNΛ` under `z ~ N(0, I)` (row-major `m × m`).
pub fn semantic_covariance(model: &SemanticModel) -> Vec<Vec<f64>> {
    let m = model.attributes.len();
    (0..m)
        .map(|i| {
            (0..m)
                .map(|j| {
                    model.lambdas[i]
                        * model.lambdas[j]
                        * linalg::dot(&model.normals[i], &model.normals[j])
                })
                .collect()
        })
        .collect()
}

/// Attribute request for [`ModelSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeSpec {
    pub name: String,
    pub lambda: f64,
}

/// JSON model description: `{dim, attributes:[{name, lambda}], correlations, noise_sigma, seed}`.
///
/// `correlations` is the requested `m × m` matrix of normal cosines
/// (`null` means mutually orthogonal normals).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub dim: usize,
    pub attributes: Vec<AttributeSpec>,
    #[serde(default)]
    pub correlations: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub nonlinearity: Nonlinearity,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layer_groups: Option<LayerGroupSpec>,
}

impl ModelSpec {
    pub fn build(&self) -> Result<BuiltModel> {
        let built = make_semantic_model(
            self.dim,
            &self.attributes,
            self.correlations.as_deref(),
            self.noise_sigma,
            self.seed,
        )?;
        Ok(BuiltModel {
            model: built.model.with_nonlinearity(self.nonlinearity),
            warnings: built.warnings,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelWarning {
    /// The requested Gram matrix is rank deficient, so some semantics share a subspace.
    SharedSubspace { rank: usize, pairs: Vec<(String, String)> },
    /// Fewer latent dimensions than attributes.
    FewDimensions { dim: usize, attributes: usize },
}

#[derive(Debug, Clone)]
pub struct BuiltModel {
    pub model: SemanticModel,
    pub warnings: Vec<ModelWarning>,
}

const GRAM_TOL: f64 = 1e-9;

/// Builds a model whose normals have the requested pairwise cosines.
///
/// The target Gram matrix `G` is factored as `G = CCᵀ` through its
/// eigen-decomposition (only strictly positive eigenvalues are kept) and the
/// rows of `C` are expressed in a random orthonormal frame of `R^d` drawn from
/// `seed`. Rank deficiency is allowed and reported as a shared-subspace warning.
pub fn make_semantic_model(
    d: usize,
    specs: &[AttributeSpec],
    correlations: Option<&[Vec<f64>]>,
    noise_sigma: f64,
    seed: u64,
) -> Result<BuiltModel> {
    let m = specs.len();
    if m == 0 {
        return Err(Error::Model("no attributes requested".into()));
    }
    if d == 0 {
        return Err(Error::Model("dim must be >= 1".into()));
    }
    let gram = match correlations {
        Some(rows) => gram_matrix(rows, m)?,
        None => DMatrix::identity(m, m),
    };
    let eig = SymmetricEigen::new(gram.clone());
    let min_eig = eig.eigenvalues.min();
    if min_eig < -GRAM_TOL {
        return Err(Error::Model(format!(
            "correlation matrix is not positive semi-definite (smallest eigenvalue {min_eig:e})"
        )));
    }
    let kept: Vec<usize> = (0..m).filter(|&i| eig.eigenvalues[i] > GRAM_TOL).collect();
    let rank = kept.len();
    if rank > d {
        return Err(Error::Model(format!(
            "correlations need {rank} independent directions but dim is {d}"
        )));
    }

    let mut warnings = Vec::new();
    if d < m {
        warnings.push(ModelWarning::FewDimensions { dim: d, attributes: m });
    }
    if rank < m {
        let mut pairs = Vec::new();
        for i in 0..m {
            for j in i + 1..m {
                if gram[(i, j)].abs() >= 1.0 - GRAM_TOL {
                    pairs.push((specs[i].name.clone(), specs[j].name.clone()));
                }
            }
        }
        log::warn!("requested semantics span only {rank} of {m} dimensions");
        warnings.push(ModelWarning::SharedSubspace { rank, pairs });
    }

    let mut rng = seeded_rng(seed);
    let frame = linalg::random_orthonormal(&mut rng, d, rank);
    let normals = (0..m)
        .map(|k| {
            let mut n = vec![0.0; d];
            for (q, &e) in frame.iter().zip(&kept) {
                let coeff = eig.eigenvectors[(k, e)] * eig.eigenvalues[e].sqrt();
                linalg::axpy(coeff, q, &mut n);
            }
            let r = linalg::norm(&n);
            linalg::scale(1.0 / r, &mut n);
            n
        })
        .collect();

    let model = SemanticModel::new(
        specs.iter().map(|s| s.name.clone()).collect(),
        specs.iter().map(|s| s.lambda).collect(),
        normals,
        noise_sigma,
    )?;
    Ok(BuiltModel { model, warnings })
}

fn gram_matrix(rows: &[Vec<f64>], m: usize) -> Result<DMatrix<f64>> {
    if rows.len() != m || rows.iter().any(|r| r.len() != m) {
        return Err(Error::Model(format!("correlations must be a {m}x{m} matrix")));
    }
    let g = DMatrix::from_fn(m, m, |i, j| rows[i][j]);
    for i in 0..m {
        if (g[(i, i)] - 1.0).abs() > 1e-12 {
            return Err(Error::Model(format!("correlation diagonal entry {i} must be 1")));
        }
        for j in 0..m {
            if !g[(i, j)].is_finite() || g[(i, j)].abs() > 1.0 + 1e-12 {
                return Err(Error::Model(format!("correlation ({i},{j}) outside [-1, 1]")));
            }
            if (g[(i, j)] - g[(j, i)]).abs() > 1e-12 {
                return Err(Error::Model(format!("correlation matrix not symmetric at ({i},{j})")));
            }
        }
    }
    Ok(g)
}

/// Partition of `layers` generator layers into contiguous groups, with each
/// attribute owned by exactly one group.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGroupMap {
    layers: usize,
    groups: Vec<Range<usize>>,
    owner: BTreeMap<String, usize>,
}

/// Serialized form of a [`LayerGroupMap`]: groups as `[start, end)` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerGroupSpec {
    pub layers: usize,
    pub groups: Vec<[usize; 2]>,
    pub owner: BTreeMap<String, usize>,
}

/// The 18-layer split `00-01, 02-03, 04-05, 06-07, 08-17`.
pub const DEFAULT_GROUPS_18: [Range<usize>; 5] = [0..2, 2..4, 4..6, 6..8, 8..18];

impl LayerGroupMap {
    pub fn new(layers: usize, groups: Vec<Range<usize>>, owner: BTreeMap<String, usize>) -> Result<Self> {
        let mut next = 0;
        for g in &groups {
            if g.start != next || g.end <= g.start {
                return Err(Error::validation(format!(
                    "layer groups must partition 0..{layers} contiguously; bad group {g:?}"
                )));
            }
            next = g.end;
        }
        if next != layers || layers == 0 {
            return Err(Error::validation(format!(
                "layer groups cover 0..{next}, expected 0..{layers}"
            )));
        }
        if let Some((name, &g)) = owner.iter().find(|(_, &g)| g >= groups.len()) {
            return Err(Error::validation(format!("attribute '{name}' owned by missing group {g}")));
        }
        Ok(Self { layers, groups, owner })
    }

    /// Five groups over 18 layers.
    pub fn default_18(owner: BTreeMap<String, usize>) -> Result<Self> {
        Self::new(18, DEFAULT_GROUPS_18.to_vec(), owner)
    }

    /// One group spanning every layer, owning every attribute.
    pub fn single(layers: usize, attributes: &[String]) -> Result<Self> {
        let owner = attributes.iter().map(|a| (a.clone(), 0)).collect();
        Self::new(layers, vec![0..layers], owner)
    }

    pub fn from_spec(spec: &LayerGroupSpec) -> Result<Self> {
        let groups = spec.groups.iter().map(|[a, b]| *a..*b).collect();
        Self::new(spec.layers, groups, spec.owner.clone())
    }

    pub fn to_spec(&self) -> LayerGroupSpec {
        LayerGroupSpec {
            layers: self.layers,
            groups: self.groups.iter().map(|g| [g.start, g.end]).collect(),
            owner: self.owner.clone(),
        }
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn groups(&self) -> &[Range<usize>] {
        &self.groups
    }

    pub fn group_layers(&self, g: usize) -> Vec<usize> {
        self.groups[g].clone().collect()
    }

    /// `"00-01"` style label.
    pub fn label(&self, g: usize) -> String {
        let r = &self.groups[g];
        format!("{:02}-{:02}", r.start, r.end - 1)
    }

    pub fn owner_of(&self, attribute: &str) -> Result<usize> {
        self.owner
            .get(attribute)
            .copied()
            .ok_or_else(|| Error::validation(format!("attribute '{attribute}' has no owning layer group")))
    }

    fn check_owners(&self, model: &SemanticModel) -> Result<()> {
        for a in model.attributes() {
            self.owner_of(a)?;
        }
        Ok(())
    }
}

/// Scores a `WPlus` code: attribute `k` reads only the mean of the layers in
/// its owning group, `λ_k n_kᵀ mean(z_l : l ∈ owner(k))`.
pub fn layered_score<R: Rng + ?Sized>(
    model: &SemanticModel,
    z: &LatentCode,
    map: &LayerGroupMap,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let means = group_means(model, z, map)?;
    Ok((0..model.attributes.len())
        .map(|k| {
            let g = map.owner[&model.attributes[k]];
            let mut s = model.lambdas[k] * linalg::dot(&model.normals[k], &means[g]);
            if model.noise_sigma > 0.0 {
                s += model.noise_sigma * rng.sample::<f64, _>(StandardNormal);
            }
            model.squash(s)
        })
        .collect())
}

fn group_means(model: &SemanticModel, z: &LatentCode, map: &LayerGroupMap) -> Result<Vec<Vec<f64>>> {
    if z.space() != Space::WPlus {
        return Err(Error::SpaceMismatch {
            expected: Space::WPlus.to_string(),
            actual: z.space().to_string(),
        });
    }
    if z.layers() != map.layers {
        return Err(Error::validation(format!(
            "code has {} layers, group map expects {}",
            z.layers(),
            map.layers
        )));
    }
    if z.dim() != model.dim {
        return Err(Error::DimMismatch { expected: model.dim, actual: z.dim() });
    }
    map.check_owners(model)?;
    Ok(map
        .groups
        .iter()
        .map(|g| {
            let mut mean = vec![0.0; model.dim];
            for l in g.clone() {
                linalg::axpy(1.0, z.layer(l), &mut mean);
            }
            linalg::scale(1.0 / g.len() as f64, &mut mean);
            mean
        })
        .collect())
}

/// Deterministic score function over latent codes, used for re-scoring.
pub trait Scorer: Sync {
    fn attributes(&self) -> &[String];
    fn score(&self, z: &LatentCode) -> Result<Vec<f64>>;
}

impl Scorer for SemanticModel {
    fn attributes(&self) -> &[String] {
        &self.attributes
    }

    fn score(&self, z: &LatentCode) -> Result<Vec<f64>> {
        self.mean_score(z)
    }
}

/// Noise-free layered oracle as a [`Scorer`] over `WPlus` codes.
#[derive(Debug, Clone)]
pub struct LayeredOracle {
    pub model: SemanticModel,
    pub map: LayerGroupMap,
}

impl LayeredOracle {
    pub fn new(model: SemanticModel, map: LayerGroupMap) -> Result<Self> {
        map.check_owners(&model)?;
        Ok(Self { model, map })
    }
}

impl Scorer for LayeredOracle {
    fn attributes(&self) -> &[String] {
        &self.model.attributes
    }

    fn score(&self, z: &LatentCode) -> Result<Vec<f64>> {
        let means = group_means(&self.model, z, &self.map)?;
        Ok((0..self.model.attributes.len())
            .map(|k| {
                let g = self.map.owner[&self.model.attributes[k]];
                self.model.squash(self.model.lambdas[k] * linalg::dot(&self.model.normals[k], &means[g]))
            })
            .collect())
    }
}

pub const IDENTITY_FEATURE_DIM: usize = 256;

/// Mock face-recognition network: a fixed `256 × d` matrix with orthonormal rows.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityExtractor {
    rows: Vec<Vec<f64>>,
}

impl IdentityExtractor {
    pub fn new(d: usize, seed: u64) -> Result<Self> {
        if d < IDENTITY_FEATURE_DIM {
            return Err(Error::Model(format!(
                "identity extractor needs d >= {IDENTITY_FEATURE_DIM}, got {d}"
            )));
        }
        let mut rng = seeded_rng(seed);
        Ok(Self { rows: linalg::random_orthonormal(&mut rng, d, IDENTITY_FEATURE_DIM) })
    }

    pub fn dim(&self) -> usize {
        self.rows[0].len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// `P·z` over all values of the code (layered codes are read as flat vectors).
    pub fn features(&self, z: &LatentCode) -> Result<Vec<f64>> {
        if z.values().len() != self.dim() {
            return Err(Error::DimMismatch { expected: self.dim(), actual: z.values().len() });
        }
        Ok(self.rows.iter().map(|r| linalg::dot(r, z.values())).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry;

    fn specs(lambdas: &[f64]) -> Vec<AttributeSpec> {
        lambdas
            .iter()
            .enumerate()
            .map(|(i, &l)| AttributeSpec { name: format!("a{i}"), lambda: l })
            .collect()
    }

    fn gram(model: &SemanticModel) -> Vec<Vec<f64>> {
        let n = model.normals();
        n.iter().map(|a| n.iter().map(|b| linalg::dot(a, b)).collect()).collect()
    }

    #[test]
    fn m2_reference_values() {
        let m2 = SemanticModel::reference_m2();
        assert!((gram(&m2)[0][1] - 0.70711).abs() < 1e-5);
        let s = m2.mean_score(&LatentCode::z(vec![1.0, 1.0, 0.0, 0.0]).unwrap()).unwrap();
        assert!((s[0] - 1.0).abs() < 1e-12);
        assert!((s[1] - 2.8284).abs() < 1e-4);
        let zero = m2.mean_score(&LatentCode::z(vec![0.0; 4]).unwrap()).unwrap();
        assert_eq!(zero, vec![0.0, 0.0]);
        let cov = semantic_covariance(&m2);
        assert!((cov[0][0] - 1.0).abs() < 1e-12 && (cov[1][1] - 4.0).abs() < 1e-12);
        assert!((cov[0][1] - 1.41421).abs() < 1e-5 && cov[0][1] == cov[1][0]);
    }

    #[test]
    fn built_model_matches_requested_gram() {
        let corr = vec![
            vec![1.0, 0.3, -0.2],
            vec![0.3, 1.0, 0.5],
            vec![-0.2, 0.5, 1.0],
        ];
        let built = make_semantic_model(16, &specs(&[1.0, 2.0, 0.5]), Some(&corr), 0.0, 9).unwrap();
        assert!(built.warnings.is_empty());
        let g = gram(&built.model);
        for i in 0..3 {
            for j in 0..3 {
                assert!((g[i][j] - corr[i][j]).abs() < 1e-9, "({i},{j}) {}", g[i][j]);
            }
        }
    }

    #[test]
    fn orthogonal_request_gives_identity_gram() {
        let built = make_semantic_model(32, &specs(&[1.0, 1.0, 1.0, 1.0]), None, 0.0, 1).unwrap();
        let g = gram(&built.model);
        for (i, row) in g.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                assert!((v - if i == j { 1.0 } else { 0.0 }).abs() < 1e-9);
            }
        }
        let cov = semantic_covariance(&built.model);
        assert!((cov[2][2] - 1.0).abs() < 1e-9 && cov[0][1].abs() < 1e-9);
    }

    #[test]
    fn perfectly_correlated_request_warns() {
        let corr = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        let built = make_semantic_model(8, &specs(&[1.0, 3.0]), Some(&corr), 0.0, 2).unwrap();
        assert!(matches!(
            &built.warnings[..],
            [ModelWarning::SharedSubspace { rank: 1, pairs }] if pairs.len() == 1
        ));
        let g = gram(&built.model);
        assert!((g[0][1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn non_psd_request_fails() {
        let corr = vec![
            vec![1.0, 0.9, -0.9],
            vec![0.9, 1.0, 0.9],
            vec![-0.9, 0.9, 1.0],
        ];
        assert!(make_semantic_model(8, &specs(&[1.0, 1.0, 1.0]), Some(&corr), 0.0, 0).is_err());
        let asym = vec![vec![1.0, 0.2], vec![0.1, 1.0]];
        assert!(make_semantic_model(8, &specs(&[1.0, 1.0]), Some(&asym), 0.0, 0).is_err());
    }

    #[test]
    fn noise_is_seeded() {
        let m = SemanticModel::reference_m2().with_noise(0.5).unwrap();
        let z = LatentCode::z(vec![0.3, -0.1, 2.0, 0.0]).unwrap();
        let a = score(&m, &z, &mut seeded_rng(4)).unwrap();
        let b = score(&m, &z, &mut seeded_rng(4)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, m.mean_score(&z).unwrap());
    }

    #[test]
    fn tanh_squashes_scores() {
        let m = SemanticModel::reference_m2().with_nonlinearity(Nonlinearity::Tanh);
        let s = m.mean_score(&LatentCode::z(vec![10.0, 0.0, 0.0, 0.0]).unwrap()).unwrap();
        assert!(s.iter().all(|v| v.abs() < 1.0));
    }

    #[test]
    fn score_equals_lambda_times_distance() {
        let built = make_semantic_model(12, &specs(&[0.7, 1.9]), None, 0.0, 5).unwrap();
        let mut rng = seeded_rng(8);
        for _ in 0..20 {
            let z = LatentCode::z(linalg::gaussian_vector(&mut rng, 12)).unwrap();
            let s = score(&built.model, &z, &mut rng).unwrap();
            for k in 0..2 {
                let b = built.model.boundary(k, Space::Z);
                let d = geometry::distance(&b, &z).unwrap();
                assert!((s[k] - b.lambda().unwrap() * d).abs() < 1e-12);
            }
        }
    }

    fn layered_setup() -> (SemanticModel, LayerGroupMap) {
        let model = SemanticModel::reference_m2();
        let owner = [("attr1".to_string(), 0), ("attr2".to_string(), 4)].into_iter().collect();
        (model, LayerGroupMap::default_18(owner).unwrap())
    }

    #[test]
    fn group_map_validation_and_labels() {
        let (_, map) = layered_setup();
        let labels: Vec<_> = (0..5).map(|g| map.label(g)).collect();
        assert_eq!(labels, ["00-01", "02-03", "04-05", "06-07", "08-17"]);
        assert!(LayerGroupMap::new(4, vec![0..2, 3..4], BTreeMap::new()).is_err());
        assert!(LayerGroupMap::new(4, vec![0..2], BTreeMap::new()).is_err());
        let bad_owner = [("x".to_string(), 7)].into_iter().collect();
        assert!(LayerGroupMap::new(4, vec![0..4], bad_owner).is_err());
        assert_eq!(LayerGroupMap::from_spec(&map.to_spec()).unwrap(), map);
    }

    #[test]
    fn layered_score_is_local_to_owner_group() {
        let (model, map) = layered_setup();
        let mut rng = seeded_rng(3);
        let base = LatentCode::layered(18, linalg::gaussian_vector(&mut rng, 18 * 4)).unwrap();
        let b = model.boundary(0, Space::W);
        let before = layered_score(&model, &base, &map, &mut rng).unwrap();

        let far = geometry::edit_layered(&base, &b, 2.0, &map.group_layers(4)).unwrap();
        let after = layered_score(&model, &far, &map, &mut rng).unwrap();
        assert!((after[0] - before[0]).abs() <= 1e-9);

        let own = geometry::edit_layered(&base, &b, 2.0, &map.group_layers(0)).unwrap();
        let after = layered_score(&model, &own, &map, &mut rng).unwrap();
        assert!((after[0] - before[0] - 2.0 * 1.0).abs() <= 1e-9);
    }

    #[test]
    fn single_group_layered_score_equals_flat_score_of_mean() {
        let model = SemanticModel::reference_m2();
        let map = LayerGroupMap::single(3, model.attributes()).unwrap();
        let mut rng = seeded_rng(6);
        let z = LatentCode::layered(3, linalg::gaussian_vector(&mut rng, 12)).unwrap();
        let mut mean = vec![0.0; 4];
        for l in 0..3 {
            linalg::axpy(1.0 / 3.0, z.layer(l), &mut mean);
        }
        let flat = model.mean_score(&LatentCode::z(mean).unwrap()).unwrap();
        let layered = layered_score(&model, &z, &map, &mut rng).unwrap();
        for (a, b) in flat.iter().zip(&layered) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn layered_score_rejects_mismatch() {
        let (model, map) = layered_setup();
        let mut rng = seeded_rng(0);
        let wrong_layers = LatentCode::layered(17, vec![0.0; 17 * 4]).unwrap();
        assert!(layered_score(&model, &wrong_layers, &map, &mut rng).is_err());
        let flat = LatentCode::z(vec![0.0; 4]).unwrap();
        assert!(layered_score(&model, &flat, &map, &mut rng).is_err());
    }

    #[test]
    fn identity_extractor_properties() {
        assert!(IdentityExtractor::new(100, 0).is_err());
        let ex = IdentityExtractor::new(300, 1).unwrap();
        for (i, a) in ex.rows().iter().enumerate().step_by(37) {
            for (j, b) in ex.rows().iter().enumerate().step_by(41) {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((linalg::dot(a, b) - expected).abs() < 1e-6);
            }
        }
        let mut rng = seeded_rng(2);
        let z = LatentCode::z(linalg::gaussian_vector(&mut rng, 300)).unwrap();
        let f = ex.features(&z).unwrap();
        assert_eq!(f, ex.features(&z).unwrap());
        assert!(linalg::norm(&f) <= z.norm());

        // Editing drifts features exactly along P·n.
        let n = Boundary::new("x", Space::Z, linalg::gaussian_vector(&mut rng, 300)).unwrap();
        let moved = ex.features(&geometry::edit(&z, &n, 1.5).unwrap()).unwrap();
        let pn = ex.features(&LatentCode::z(n.normal().to_vec()).unwrap()).unwrap();
        for ((a, b), p) in moved.iter().zip(&f).zip(&pn) {
            assert!((a - b - 1.5 * p).abs() < 1e-9);
        }
    }
}
