//! Shared value types. All of them are immutable once constructed.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Tolerance on `‖normal‖₂ = 1` for boundaries and model normals.
pub const UNIT_NORM_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Space {
    Z,
    W,
    WPlus,
}

impl Space {
    /// Numeric tag used by the LSDF header.
    pub fn code(self) -> u32 {
        match self {
            Space::Z => 0,
            Space::W => 1,
            Space::WPlus => 2,
        }
    }

    pub fn from_code(code: u32) -> Option<Self> {
        match code {
            0 => Some(Space::Z),
            1 => Some(Space::W),
            2 => Some(Space::WPlus),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Space::Z => "Z",
            Space::W => "W",
            Space::WPlus => "WPlus",
        }
    }
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Space {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Z" | "z" => Ok(Space::Z),
            "W" | "w" => Ok(Space::W),
            "WPlus" | "W+" | "wplus" | "w+" => Ok(Space::WPlus),
            other => Err(Error::validation(format!("unknown latent space '{other}'"))),
        }
    }
}

/// A latent vector. `WPlus` codes hold `layers` consecutive sub-vectors of
/// length `dim`; every other space has exactly one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentCode {
    values: Vec<f64>,
    space: Space,
    layers: usize,
}

impl LatentCode {
    /// Single-layer code in `Z` or `W`.
    pub fn new(space: Space, values: Vec<f64>) -> Result<Self> {
        if space == Space::WPlus {
            return Self::layered(1, values);
        }
        Self::checked(space, 1, values)
    }

    pub fn z(values: Vec<f64>) -> Result<Self> {
        Self::new(Space::Z, values)
    }

    /// `WPlus` code with `layers` sub-vectors packed layer-major.
    pub fn layered(layers: usize, values: Vec<f64>) -> Result<Self> {
        if layers == 0 {
            return Err(Error::validation("WPlus code needs at least one layer"));
        }
        if values.len() % layers != 0 {
            return Err(Error::validation(format!(
                "{} values cannot be split into {layers} layers",
                values.len()
            )));
        }
        Self::checked(Space::WPlus, layers, values)
    }

    /// Builds a `WPlus` code by repeating one per-layer vector.
    pub fn broadcast(layers: usize, layer: &[f64]) -> Result<Self> {
        let values = layer
            .iter()
            .copied()
            .cycle()
            .take(layer.len() * layers)
            .collect();
        Self::layered(layers, values)
    }

    fn checked(space: Space, layers: usize, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::validation("latent code must have dimension >= 1"));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::validation(format!(
                "latent code entry {i} is not finite ({})",
                values[i]
            )));
        }
        Ok(Self { values, space, layers })
    }

    pub(crate) fn with_values(&self, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), self.values.len());
        Self { values, space: self.space, layers: self.layers }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    /// Per-layer dimension `d`.
    pub fn dim(&self) -> usize {
        self.values.len() / self.layers
    }

    pub fn layer(&self, index: usize) -> &[f64] {
        let d = self.dim();
        &self.values[index * d..(index + 1) * d]
    }

    /// Rounds every entry to the nearest `f32`, the precision of LSDF files.
    pub fn quantized(&self) -> Self {
        self.with_values(self.values.iter().map(|&v| v as f32 as f64).collect())
    }

    pub fn norm(&self) -> f64 {
        linalg::norm(&self.values)
    }
}

/// Accuracy of a boundary on its validation split and (optionally) on the
/// remaining non-candidate samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub val_accuracy: f64,
    #[serde(default)]
    pub full_accuracy: Option<f64>,
    #[serde(default)]
    pub train_accuracy: Option<f64>,
    pub n_train: usize,
    pub n_val: usize,
    #[serde(default)]
    pub n_full: Option<usize>,
}

impl AccuracyReport {
    pub fn validate(&self) -> Result<()> {
        let fractions = [Some(self.val_accuracy), self.full_accuracy, self.train_accuracy];
        for f in fractions.into_iter().flatten() {
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::validation(format!("accuracy {f} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// A semantic hyperplane `{z : normalᵀz + bias = 0}` with unit normal.
#[derive(Debug, Clone, PartialEq)]
pub struct Boundary {
    attribute: String,
    normal: Vec<f64>,
    bias: f64,
    lambda: Option<f64>,
    space: Space,
    metrics: Option<AccuracyReport>,
}

impl Boundary {
    /// Normalizes `direction` to unit length. Zero or non-finite directions are rejected.
    pub fn new(attribute: impl Into<String>, space: Space, direction: Vec<f64>) -> Result<Self> {
        let attribute = attribute.into();
        if direction.is_empty() {
            return Err(Error::validation("boundary normal must be non-empty"));
        }
        if direction.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation(format!(
                "boundary '{attribute}' has a non-finite normal"
            )));
        }
        let n = linalg::norm(&direction);
        if n < 1e-12 {
            return Err(Error::validation(format!("boundary '{attribute}' has a zero normal")));
        }
        let mut normal = direction;
        linalg::scale(1.0 / n, &mut normal);
        Ok(Self { attribute, normal, bias: 0.0, lambda: None, space, metrics: None })
    }

    /// Accepts an already-unit normal as is (used when loading files so that
    /// values round-trip exactly).
    pub fn from_unit(attribute: impl Into<String>, space: Space, normal: Vec<f64>) -> Result<Self> {
        let attribute = attribute.into();
        if normal.is_empty() || normal.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation(format!(
                "boundary '{attribute}' normal must be non-empty and finite"
            )));
        }
        let n = linalg::norm(&normal);
        if (n - 1.0).abs() > UNIT_NORM_TOL {
            return Err(Error::validation(format!(
                "boundary '{attribute}' normal has norm {n}, expected 1"
            )));
        }
        Ok(Self { attribute, normal, bias: 0.0, lambda: None, space, metrics: None })
    }

    pub fn with_bias(mut self, bias: f64) -> Result<Self> {
        if !bias.is_finite() {
            return Err(Error::validation("boundary bias must be finite"));
        }
        self.bias = bias;
        Ok(self)
    }

    pub fn with_lambda(mut self, lambda: Option<f64>) -> Result<Self> {
        if let Some(l) = lambda {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::validation(format!("lambda must be positive, got {l}")));
            }
        }
        self.lambda = lambda;
        Ok(self)
    }

    pub fn with_metrics(mut self, metrics: Option<AccuracyReport>) -> Result<Self> {
        if let Some(m) = &metrics {
            m.validate()?;
        }
        self.metrics = metrics;
        Ok(self)
    }

    pub fn with_attribute(mut self, attribute: impl Into<String>) -> Self {
        self.attribute = attribute.into();
        self
    }

    /// Same hyperplane with the opposite orientation.
    pub fn flipped(&self) -> Self {
        Self {
            normal: self.normal.iter().map(|v| -v).collect(),
            bias: -self.bias,
            ..self.clone()
        }
    }

    pub fn attribute(&self) -> &str {
        &self.attribute
    }

    pub fn normal(&self) -> &[f64] {
        &self.normal
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn lambda(&self) -> Option<f64> {
        self.lambda
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn dim(&self) -> usize {
        self.normal.len()
    }

    pub fn metrics(&self) -> Option<&AccuracyReport> {
        self.metrics.as_ref()
    }
}

/// A latent code together with its attribute scores.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredSample {
    pub code: LatentCode,
    pub scores: Vec<f64>,
}

/// Scored samples sharing one attribute manifest (column order).
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredSet {
    attributes: Vec<String>,
    samples: Vec<ScoredSample>,
}

impl ScoredSet {
    pub fn new(attributes: Vec<String>, samples: Vec<ScoredSample>) -> Result<Self> {
        if attributes.is_empty() {
            return Err(Error::validation("attribute manifest is empty"));
        }
        let m = attributes.len();
        let mut layout = None;
        for (i, s) in samples.iter().enumerate() {
            if s.scores.len() != m {
                return Err(Error::validation(format!(
                    "sample {i} has {} scores, manifest has {m} attributes",
                    s.scores.len()
                )));
            }
            if s.scores.iter().any(|v| !v.is_finite()) {
                return Err(Error::validation(format!("sample {i} has a non-finite score")));
            }
            let l = (s.code.space(), s.code.layers(), s.code.dim());
            match layout {
                None => layout = Some(l),
                Some(first) if first != l => {
                    return Err(Error::validation(format!(
                        "sample {i} latent layout differs from sample 0"
                    )))
                }
                _ => {}
            }
        }
        Ok(Self { attributes, samples })
    }

    /// Pairs codes with score rows (same order, same length).
    pub fn from_parts(
        attributes: Vec<String>,
        codes: Vec<LatentCode>,
        scores: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if codes.len() != scores.len() {
            return Err(Error::validation(format!(
                "{} latent codes but {} score rows",
                codes.len(),
                scores.len()
            )));
        }
        let samples = codes
            .into_iter()
            .zip(scores)
            .map(|(code, scores)| ScoredSample { code, scores })
            .collect();
        Self::new(attributes, samples)
    }

    pub fn attributes(&self) -> &[String] {
        &self.attributes
    }

    pub fn samples(&self) -> &[ScoredSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn attribute_index(&self, name: &str) -> Result<usize> {
        self.attributes
            .iter()
            .position(|a| a == name)
            .ok_or_else(|| Error::UnknownAttribute(name.to_string()))
    }

    /// One attribute's scores in sample order.
    pub fn column(&self, attribute: usize) -> Vec<f64> {
        self.samples.iter().map(|s| s.scores[attribute]).collect()
    }
}

/// An edit request: primal boundary, boundaries to hold fixed, and step sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct ManipulationSpec {
    primal: Boundary,
    conditions: Vec<Boundary>,
    steps: Vec<f64>,
}

impl ManipulationSpec {
    pub fn new(primal: Boundary, conditions: Vec<Boundary>, steps: Vec<f64>) -> Result<Self> {
        for c in &conditions {
            if c.space() != primal.space() {
                return Err(Error::SpaceMismatch {
                    expected: primal.space().to_string(),
                    actual: c.space().to_string(),
                });
            }
            if c.dim() != primal.dim() {
                return Err(Error::DimMismatch { expected: primal.dim(), actual: c.dim() });
            }
            if c.attribute() == primal.attribute() {
                return Err(Error::validation(format!(
                    "condition '{}' is the primal attribute",
                    c.attribute()
                )));
            }
        }
        if let Some(a) = steps.iter().find(|a| !a.is_finite()) {
            return Err(Error::validation(format!("step {a} is not finite")));
        }
        Ok(Self { primal, conditions, steps })
    }

    pub fn primal(&self) -> &Boundary {
        &self.primal
    }

    pub fn conditions(&self) -> &[Boundary] {
        &self.conditions
    }

    pub fn steps(&self) -> &[f64] {
        &self.steps
    }
}
