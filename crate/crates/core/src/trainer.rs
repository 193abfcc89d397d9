//! Boundary discovery from scored samples.
//!
//! 1. Rank samples by one attribute's score and keep the extremes as
//!    confident positives and negatives.
//! 2. Split each side at random into training and validation parts.
//! 3. Fit a linear max-margin classifier and keep its unit normal.
//! 4. Estimate the slope λ of score against signed distance and orient the
//!    normal so that positive distance means a higher score.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry;
use crate::linalg;
use crate::rng::seeded_rng;
use crate::types::{AccuracyReport, Boundary, LatentCode, ScoredSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainerConfig {
    /// Share of samples taken from each end of the ranking, in `(0, 0.5]`.
    pub candidate_fraction: f64,
    pub val_fraction: f64,
    /// Hinge-loss weight `C`.
    pub regularization: f64,
    pub epochs: usize,
    pub seed: u64,
    pub fit_bias: bool,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self {
            candidate_fraction: 0.02,
            val_fraction: 0.30,
            regularization: 1.0,
            epochs: 200,
            seed: 0,
            fit_bias: false,
        }
    }
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.candidate_fraction > 0.0 && self.candidate_fraction <= 0.5) {
            return Err(Error::Config(format!(
                "candidate_fraction must lie in (0, 0.5], got {}",
                self.candidate_fraction
            )));
        }
        if !(self.val_fraction > 0.0 && self.val_fraction < 1.0) {
            return Err(Error::Config(format!(
                "val_fraction must lie in (0, 1), got {}",
                self.val_fraction
            )));
        }
        if !(self.regularization > 0.0 && self.regularization.is_finite()) {
            return Err(Error::Config(format!(
                "regularization C must be positive, got {}",
                self.regularization
            )));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be >= 1".into()));
        }
        Ok(())
    }
}

/// Indices (into the source [`ScoredSet`]) of the selected extremes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidates {
    pub positives: Vec<usize>,
    pub negatives: Vec<usize>,
}

/// `ceil(fraction · n)` with a small guard against representation error
/// (e.g. `0.02 · 500000` must give exactly 10000).
fn ceil_share(fraction: f64, n: usize) -> usize {
    (fraction * n as f64 - 1e-9).ceil().max(0.0) as usize
}

/// Takes the `⌈fraction·n⌉` highest-scoring samples as positives and as many
/// lowest-scoring ones as negatives. Ties are broken by sample index, so with
/// equal scores the first indices become positives and the last negatives.
pub fn select_candidates(set: &ScoredSet, attribute: &str, cfg: &TrainerConfig) -> Result<Candidates> {
    if !(cfg.candidate_fraction > 0.0 && cfg.candidate_fraction <= 0.5) {
        return Err(Error::Config(format!(
            "candidate_fraction must lie in (0, 0.5], got {}",
            cfg.candidate_fraction
        )));
    }
    let j = set.attribute_index(attribute)?;
    let n = set.len();
    let needed = (2.0 / cfg.candidate_fraction - 1e-9).ceil() as usize;
    if n < needed {
        return Err(Error::Data(format!(
            "{n} samples, need at least {needed} for candidate fraction {}",
            cfg.candidate_fraction
        )));
    }
    let k = ceil_share(cfg.candidate_fraction, n);
    if 2 * k > n {
        return Err(Error::Config(format!(
            "{k} candidates per side overlap in {n} samples"
        )));
    }
    let scores = set.column(j);
    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort: descending score, ascending index among ties.
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    Ok(Candidates {
        positives: order[..k].to_vec(),
        negatives: order[n - k..].to_vec(),
    })
}

/// Codes with `±1` labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSet {
    pub attribute: String,
    pub codes: Vec<LatentCode>,
    pub labels: Vec<f64>,
}

impl LabeledSet {
    pub fn new(attribute: impl Into<String>, codes: Vec<LatentCode>, labels: Vec<f64>) -> Result<Self> {
        if codes.len() != labels.len() {
            return Err(Error::validation("codes and labels differ in length"));
        }
        if labels.iter().any(|&y| y != 1.0 && y != -1.0) {
            return Err(Error::validation("labels must be +1 or -1"));
        }
        Ok(Self { attribute: attribute.into(), codes, labels })
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn count(&self, label: f64) -> usize {
        self.labels.iter().filter(|&&y| y == label).count()
    }
}

/// Shuffles each side with the configured seed and moves `⌈val_fraction·side⌉`
/// samples of it to validation. Positives get label `+1`, negatives `−1`.
pub fn split_train_val(
    set: &ScoredSet,
    attribute: &str,
    candidates: &Candidates,
    cfg: &TrainerConfig,
) -> Result<(LabeledSet, LabeledSet)> {
    if candidates.positives.len() < 2 || candidates.negatives.len() < 2 {
        return Err(Error::Data("each candidate side needs at least 2 samples".into()));
    }
    if !(cfg.val_fraction > 0.0 && cfg.val_fraction < 1.0) {
        return Err(Error::Config(format!("val_fraction must lie in (0, 1), got {}", cfg.val_fraction)));
    }
    let mut rng = seeded_rng(cfg.seed);
    let mut train = (Vec::new(), Vec::new());
    let mut val = (Vec::new(), Vec::new());
    for (side, label) in [(&candidates.positives, 1.0), (&candidates.negatives, -1.0)] {
        let mut idx = side.clone();
        idx.shuffle(&mut rng);
        let n_val = ceil_share(cfg.val_fraction, idx.len()).clamp(1, idx.len() - 1);
        let (v, t) = idx.split_at(n_val);
        for &i in t {
            train.0.push(set.samples()[i].code.clone());
            train.1.push(label);
        }
        for &i in v {
            val.0.push(set.samples()[i].code.clone());
            val.1.push(label);
        }
    }
    Ok((
        LabeledSet::new(attribute, train.0, train.1)?,
        LabeledSet::new(attribute, val.0, val.1)?,
    ))
}

/// Non-candidate samples labelled by `score ≥ threshold`.
pub fn remaining_set(
    set: &ScoredSet,
    attribute: &str,
    candidates: &Candidates,
    threshold: f64,
) -> Result<LabeledSet> {
    let j = set.attribute_index(attribute)?;
    let mut taken = vec![false; set.len()];
    for &i in candidates.positives.iter().chain(&candidates.negatives) {
        taken[i] = true;
    }
    let (codes, labels) = set
        .samples()
        .iter()
        .zip(&taken)
        .filter(|(_, &t)| !t)
        .map(|(s, _)| (s.code.clone(), if s.scores[j] >= threshold { 1.0 } else { -1.0 }))
        .unzip();
    LabeledSet::new(attribute, codes, labels)
}

/// Soft-margin linear SVM by deterministic full-batch subgradient descent.
///
/// Minimizes `½‖w‖² + C·Σ max(0, 1 − yᵢ(wᵀxᵢ + b))` with step `1/t` at epoch
/// `t` (the objective is 1-strongly convex in `w`). Scaling every code by `s`
/// and `C` by `1/s²` leaves the sequence of margin violators, and therefore
/// the returned unit normal, unchanged.
///
/// The bias is only learned with `fit_bias`; it is never regularized.
pub fn train_linear_svm(train: &LabeledSet, cfg: &TrainerConfig) -> Result<Boundary> {
    cfg.validate()?;
    let first = train
        .codes
        .first()
        .ok_or_else(|| Error::Training("empty training set".into()))?;
    if train.count(1.0) == 0 || train.count(-1.0) == 0 {
        return Err(Error::Training("training set contains a single class".into()));
    }
    let space = first.space();
    let d = first.values().len();
    if first.layers() != 1 {
        return Err(Error::Unsupported("SVM training on layered codes".into()));
    }
    if let Some(bad) = train.codes.iter().position(|c| c.values().len() != d || c.space() != space) {
        return Err(Error::validation(format!("training code {bad} differs in layout")));
    }

    let c = cfg.regularization;
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut grad = vec![0.0; d];
    for t in 1..=cfg.epochs {
        let eta = 1.0 / t as f64;
        grad.copy_from_slice(&w);
        let mut grad_b = 0.0;
        for (x, &y) in train.codes.iter().zip(&train.labels) {
            if y * (linalg::dot(&w, x.values()) + b) < 1.0 {
                linalg::axpy(-c * y, x.values(), &mut grad);
                grad_b -= c * y;
            }
        }
        linalg::axpy(-eta, &grad, &mut w);
        if cfg.fit_bias {
            b -= eta * grad_b;
        }
    }

    let norm = linalg::norm(&w);
    if !(norm > 1e-12) || !norm.is_finite() {
        return Err(Error::Training(format!("degenerate weight vector (norm {norm:e})")));
    }
    let boundary = Boundary::new(train.attribute.clone(), space, w)?.with_bias(b / norm)?;
    let train_accuracy = accuracy(&boundary, train)?;
    boundary.with_metrics(Some(AccuracyReport {
        val_accuracy: train_accuracy,
        full_accuracy: None,
        train_accuracy: Some(train_accuracy),
        n_train: train.len(),
        n_val: 0,
        n_full: None,
    }))
}

/// Fraction of codes with `sign(nᵀz + bias) = label`, where `sign(0) = +1`.
pub fn accuracy(b: &Boundary, set: &LabeledSet) -> Result<f64> {
    if set.is_empty() {
        return Err(Error::Data("cannot evaluate on an empty set".into()));
    }
    let mut correct = 0usize;
    for (z, &y) in set.codes.iter().zip(&set.labels) {
        let predicted = if geometry::distance(b, z)? >= 0.0 { 1.0 } else { -1.0 };
        if predicted == y {
            correct += 1;
        }
    }
    Ok(correct as f64 / set.len() as f64)
}

pub fn evaluate_boundary(
    b: &Boundary,
    val: &LabeledSet,
    full: Option<&LabeledSet>,
    n_train: usize,
) -> Result<AccuracyReport> {
    let val_accuracy = accuracy(b, val)?;
    let full_accuracy = full.map(|f| accuracy(b, f)).transpose()?;
    Ok(AccuracyReport {
        val_accuracy,
        full_accuracy,
        train_accuracy: b.metrics().and_then(|m| m.train_accuracy),
        n_train,
        n_val: val.len(),
        n_full: full.map(LabeledSet::len),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaFit {
    /// Least-squares slope through the origin; negative when the normal points
    /// towards lower scores.
    pub slope: f64,
    pub n: usize,
}

impl LambdaFit {
    pub fn needs_flip(&self) -> bool {
        self.slope < 0.0
    }
}

/// Slope of score against signed distance, fitted through the origin.
pub fn estimate_lambda(b: &Boundary, set: &ScoredSet, attribute: &str) -> Result<LambdaFit> {
    let j = set.attribute_index(attribute)?;
    if set.len() < 2 {
        return Err(Error::Data("lambda estimation needs at least 2 samples".into()));
    }
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for s in set.samples() {
        let x = geometry::distance(b, &s.code)?;
        lo = lo.min(x);
        hi = hi.max(x);
        sxy += x * s.scores[j];
        sxx += x * x;
    }
    if hi - lo <= 1e-12 * (1.0 + hi.abs()) || sxx == 0.0 {
        return Err(Error::Singular("all samples are at the same distance".into()));
    }
    let slope = sxy / sxx;
    if slope < 0.0 {
        log::warn!("boundary '{}' is oriented against increasing score; flip recommended", b.attribute());
    }
    Ok(LambdaFit { slope, n: set.len() })
}

/// Flips `b` when the fitted slope is negative and records `|slope|` as λ.
pub fn orient(b: Boundary, fit: &LambdaFit) -> Result<Boundary> {
    let b = if fit.needs_flip() { b.flipped() } else { b };
    let lambda = (fit.slope.abs() > 0.0).then_some(fit.slope.abs());
    b.with_lambda(lambda)
}

/// Output of the full selection → split → train → orient → evaluate run.
#[derive(Debug, Clone)]
pub struct TrainedBoundary {
    pub boundary: Boundary,
    pub candidates: Candidates,
    pub lambda: LambdaFit,
    pub report: AccuracyReport,
}

/// Runs the complete protocol for one attribute. The "full" accuracy uses all
/// non-candidate samples labelled by `score ≥ full_threshold`.
pub fn train_boundary(
    set: &ScoredSet,
    attribute: &str,
    cfg: &TrainerConfig,
    full_threshold: f64,
) -> Result<TrainedBoundary> {
    cfg.validate()?;
    let candidates = select_candidates(set, attribute, cfg)?;
    let (train, val) = split_train_val(set, attribute, &candidates, cfg)?;
    let raw = train_linear_svm(&train, cfg)?;
    let lambda = estimate_lambda(&raw, set, attribute)?;
    let boundary = orient(raw, &lambda)?;
    let full = remaining_set(set, attribute, &candidates, full_threshold)?;
    let full = (!full.is_empty()).then_some(full);
    let mut report = evaluate_boundary(&boundary, &val, full.as_ref(), train.len())?;
    report.train_accuracy = Some(accuracy(&boundary, &train)?);
    let boundary = boundary.with_metrics(Some(report.clone()))?;
    Ok(TrainedBoundary { boundary, candidates, lambda, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded_rng;
    use crate::types::{ScoredSample, Space};
    use rand::Rng;

    fn set_from(scores: &[f64]) -> ScoredSet {
        let samples = scores
            .iter()
            .enumerate()
            .map(|(i, &s)| ScoredSample {
                code: LatentCode::z(vec![i as f64, 1.0]).unwrap(),
                scores: vec![s],
            })
            .collect();
        ScoredSet::new(vec!["a".into()], samples).unwrap()
    }

    fn cfg(fraction: f64) -> TrainerConfig {
        TrainerConfig { candidate_fraction: fraction, ..TrainerConfig::default() }
    }

    #[test]
    fn selects_extremes() {
        let set = set_from(&[0.1, 0.9, -0.5, 0.3, 0.8, -0.9, 0.0, 0.2, -0.1, 0.5]);
        let c = select_candidates(&set, "a", &cfg(0.2)).unwrap();
        assert_eq!(c.positives, vec![1, 4]);
        assert_eq!(c.negatives, vec![2, 5]);
    }

    #[test]
    fn ties_break_by_index() {
        let set = set_from(&[1.0; 10]);
        let c = select_candidates(&set, "a", &cfg(0.2)).unwrap();
        assert_eq!(c.positives, vec![0, 1]);
        assert_eq!(c.negatives, vec![8, 9]);
    }

    #[test]
    fn candidate_share_rounding() {
        assert_eq!(ceil_share(0.02, 500_000), 10_000);
        assert_eq!(ceil_share(0.3, 10_000), 3_000);
        assert_eq!(ceil_share(0.3, 2), 1);
    }

    #[test]
    fn selection_errors() {
        let set = set_from(&[0.0; 9]);
        assert!(matches!(select_candidates(&set, "a", &cfg(0.2)), Err(Error::Data(_))));
        assert!(matches!(select_candidates(&set, "a", &cfg(0.6)), Err(Error::Config(_))));
        let odd = set_from(&[0.0; 5]);
        assert!(matches!(select_candidates(&odd, "a", &cfg(0.5)), Err(Error::Config(_))));
        assert!(select_candidates(&set_from(&[0.0; 10]), "b", &cfg(0.2)).is_err());
    }

    #[test]
    fn split_sizes_and_determinism() {
        let scores: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let set = set_from(&scores);
        let c = select_candidates(&set, "a", &cfg(0.2)).unwrap();
        let (t1, v1) = split_train_val(&set, "a", &c, &cfg(0.2)).unwrap();
        let (t2, v2) = split_train_val(&set, "a", &c, &cfg(0.2)).unwrap();
        assert_eq!((t1.count(1.0), t1.count(-1.0)), (14, 14));
        assert_eq!((v1.count(1.0), v1.count(-1.0)), (6, 6));
        assert_eq!(t1, t2);
        assert_eq!(v1, v2);

        let tiny = Candidates { positives: vec![0, 1], negatives: vec![2, 3] };
        let (t, v) = split_train_val(&set, "a", &tiny, &cfg(0.2)).unwrap();
        assert_eq!((t.count(1.0), v.count(1.0), v.count(-1.0)), (1, 1, 1));

        let empty = Candidates { positives: vec![], negatives: vec![2, 3] };
        assert!(split_train_val(&set, "a", &empty, &cfg(0.2)).is_err());
    }

    fn toy_2d(seed: u64) -> LabeledSet {
        let mut rng = seeded_rng(seed);
        let mut codes = Vec::new();
        let mut labels = Vec::new();
        for i in 0..100 {
            let y = if i % 2 == 0 { 1.0 } else { -1.0 };
            let x1 = y * rng.random_range(1.0..2.0);
            let x2 = rng.random_range(-3.0..3.0);
            codes.push(LatentCode::z(vec![x1, x2]).unwrap());
            labels.push(y);
        }
        LabeledSet::new("toy", codes, labels).unwrap()
    }

    #[test]
    fn toy_problem_recovers_axis() {
        let set = toy_2d(1);
        let b = train_linear_svm(&set, &TrainerConfig::default()).unwrap();
        assert!(b.normal()[0].abs() >= 0.99, "{:?}", b.normal());
        assert_eq!(b.metrics().unwrap().train_accuracy, Some(1.0));
        assert_eq!(b.bias(), 0.0);
    }

    #[test]
    fn fit_bias_learns_offset() {
        // Classes separated at x1 = 3.
        let set = toy_2d(2);
        let shifted: Vec<_> = set
            .codes
            .iter()
            .map(|c| LatentCode::z(vec![c.values()[0] + 3.0, c.values()[1]]).unwrap())
            .collect();
        let set = LabeledSet::new("toy", shifted, set.labels.clone()).unwrap();
        let cfg = TrainerConfig { fit_bias: true, epochs: 2000, ..TrainerConfig::default() };
        let b = train_linear_svm(&set, &cfg).unwrap();
        assert!(b.bias() < 0.0);
        assert!(accuracy(&b, &set).unwrap() >= 0.95);
    }

    #[test]
    fn single_class_fails() {
        let set = LabeledSet::new(
            "a",
            vec![LatentCode::z(vec![1.0]).unwrap(), LatentCode::z(vec![2.0]).unwrap()],
            vec![1.0, 1.0],
        )
        .unwrap();
        assert!(matches!(train_linear_svm(&set, &TrainerConfig::default()), Err(Error::Training(_))));
    }

    #[test]
    fn rescaling_codes_and_c_keeps_normal() {
        let set = toy_2d(3);
        let s = 4.0;
        let scaled = LabeledSet::new(
            "toy",
            set.codes
                .iter()
                .map(|c| LatentCode::z(c.values().iter().map(|v| v * s).collect()).unwrap())
                .collect(),
            set.labels.clone(),
        )
        .unwrap();
        let base = TrainerConfig { regularization: 0.5, ..TrainerConfig::default() };
        let rescaled = TrainerConfig { regularization: 0.5 / (s * s), ..base.clone() };
        let a = train_linear_svm(&set, &base).unwrap();
        let b = train_linear_svm(&scaled, &rescaled).unwrap();
        assert!(geometry::boundary_cosine(&a, &b).unwrap() >= 1.0 - 1e-9);
    }

    #[test]
    fn prediction_invariant_to_positive_rescaling() {
        let set = toy_2d(4);
        let b = Boundary::new("toy", Space::Z, vec![0.8, 0.1]).unwrap().with_bias(0.2).unwrap();
        let scaled = Boundary::new("toy", Space::Z, vec![8.0, 1.0]).unwrap().with_bias(0.2).unwrap();
        assert_eq!(accuracy(&b, &set).unwrap(), accuracy(&scaled, &set).unwrap());
    }

    #[test]
    fn training_is_deterministic() {
        let set = toy_2d(5);
        let a = train_linear_svm(&set, &TrainerConfig::default()).unwrap();
        let b = train_linear_svm(&set, &TrainerConfig::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_distance_counts_as_positive() {
        let b = Boundary::new("a", Space::Z, vec![1.0, 0.0]).unwrap();
        let on_plane = LabeledSet::new("a", vec![LatentCode::z(vec![0.0, 1.0]).unwrap()], vec![1.0]).unwrap();
        assert_eq!(accuracy(&b, &on_plane).unwrap(), 1.0);
        let empty = LabeledSet::new("a", vec![], vec![]).unwrap();
        assert!(accuracy(&b, &empty).is_err());
    }

    #[test]
    fn lambda_errors_and_orientation() {
        let b = Boundary::new("a", Space::Z, vec![0.0, 1.0]).unwrap();
        // Every code has second coordinate 1 → identical distances.
        let set = set_from(&[1.0, 2.0, 3.0]);
        assert!(matches!(estimate_lambda(&b, &set, "a"), Err(Error::Singular(_))));

        let samples = (0..5)
            .map(|i| ScoredSample {
                code: LatentCode::z(vec![i as f64 - 2.0, 0.0]).unwrap(),
                scores: vec![-3.0 * (i as f64 - 2.0)],
            })
            .collect();
        let set = ScoredSet::new(vec!["a".into()], samples).unwrap();
        let b = Boundary::new("a", Space::Z, vec![1.0, 0.0]).unwrap();
        let fit = estimate_lambda(&b, &set, "a").unwrap();
        assert!((fit.slope + 3.0).abs() < 1e-12);
        let oriented = orient(b, &fit).unwrap();
        assert_eq!(oriented.normal(), &[-1.0, -0.0]);
        assert_eq!(oriented.lambda(), Some(3.0));
    }
}
