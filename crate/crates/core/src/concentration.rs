//! Monte-Carlo checks of how standard Gaussian latent codes concentrate:
//! projections onto a unit normal are standard normal, codes stay within a few
//! units of any hyperplane through the origin, and their norms cluster around
//! `√d`.
//!
//! Every estimator streams samples chunk by chunk (see [`crate::rng`]) so that
//! `10^5 × 512` draws never sit in memory at once, and reports the empirical
//! fraction next to the exact analytic probability where one exists.
//!
//! The generic bounds carry an unspecified positive constant `c`. Reports
//! therefore surface only the `c`-free factor (`bound_rhs`) plus the exact
//! probability; the annulus check substitutes the heuristic `c = 1/64`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::beta::beta_reg;
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::linalg;
use crate::rng::{self, DetRng, DEFAULT_CHUNK_SIZE};
use crate::types::{LatentCode, Space};

/// Heuristic value for the annulus constant `c`.
pub const ANNULUS_HEURISTIC_C: f64 = 1.0 / 64.0;

/// Sample count, seed and chunking of one Monte-Carlo run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonteCarlo {
    pub samples: usize,
    pub seed: u64,
    pub chunk_size: usize,
}

impl MonteCarlo {
    pub fn new(samples: usize, seed: u64) -> Self {
        Self { samples, seed, chunk_size: DEFAULT_CHUNK_SIZE }
    }

    pub fn with_chunk_size(mut self, chunk_size: usize) -> Self {
        self.chunk_size = chunk_size.max(1);
        self
    }

    /// Folds `f` over `samples` standard Gaussian vectors of dimension `d`.
    ///
    /// `f` receives each vector in a reused buffer; partial results from the
    /// chunks are merged with `merge` in chunk order.
    pub fn fold_gaussian<T, F, M>(&self, d: usize, init: T, f: F, merge: M) -> T
    where
        T: Send + Clone + Sync,
        F: Fn(&mut T, &[f64]) + Sync,
        M: Fn(T, T) -> T,
    {
        let parts = rng::map_chunks(self.samples, self.chunk_size, self.seed, |rng, range| {
            let mut acc = init.clone();
            let mut z = vec![0.0; d];
            for _ in range {
                fill_gaussian(rng, &mut z);
                f(&mut acc, &z);
            }
            acc
        });
        parts.into_iter().fold(init, merge)
    }

    /// Counts the samples for which `pred` holds.
    fn count<F>(&self, d: usize, pred: F) -> usize
    where
        F: Fn(&[f64]) -> bool + Sync,
    {
        self.fold_gaussian(d, 0usize, |acc, z| *acc += usize::from(pred(z)), |a, b| a + b)
    }

    fn fraction(&self, hits: usize) -> f64 {
        hits as f64 / self.samples as f64
    }

    /// Four binomial standard errors at `p`, plus `1/n`.
    pub fn binomial_tolerance(&self, p: f64) -> f64 {
        let n = self.samples as f64;
        4.0 * (p * (1.0 - p) / n).max(0.0).sqrt() + 1.0 / n
    }

    /// Four standard errors at the worst case `p = 1/2`.
    fn worst_case_margin(&self) -> f64 {
        4.0 * (0.25 / self.samples as f64).sqrt()
    }
}

fn fill_gaussian(rng: &mut DetRng, z: &mut [f64]) {
    for v in z {
        *v = rng.sample(StandardNormal);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    /// `P(|nᵀz| > t)`
    Tail,
    /// `P(|nᵀz| ≤ 2α√(d/(d−2)))`
    Property2,
    /// `P(√d − β ≤ ‖z‖ ≤ √d + β)`
    Annulus,
    /// `P(|x₁| ≤ α/√(d−2))` for `x` uniform on the unit sphere.
    SphereCap,
    /// Kolmogorov-Smirnov distance of `nᵀz` from `N(0, 1)`.
    KolmogorovSmirnov,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub statistic: Statistic,
    pub d: usize,
    pub n_samples: usize,
    pub seed: u64,
    pub chunk_size: usize,
    /// Threshold, α or β depending on the statistic.
    pub parameter: f64,
    pub empirical: f64,
    pub analytic: Option<f64>,
    pub bound_rhs: Option<f64>,
    /// Slack allowed between the empirical value and its reference.
    pub tolerance: f64,
    pub passed: bool,
    /// Set when the pass rule depends on a guessed constant.
    pub heuristic: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl ConcentrationReport {
    fn new(statistic: Statistic, d: usize, mc: &MonteCarlo, parameter: f64) -> Self {
        Self {
            statistic,
            d,
            n_samples: mc.samples,
            seed: mc.seed,
            chunk_size: mc.chunk_size,
            parameter,
            empirical: 0.0,
            analytic: None,
            bound_rhs: None,
            tolerance: 0.0,
            passed: false,
            heuristic: false,
            note: None,
        }
    }
}

/// `P(|X| > t)` for `X ~ N(0, 1)`, accurate deep into the tail.
pub fn normal_two_sided_tail(t: f64) -> f64 {
    erfc(t / std::f64::consts::SQRT_2)
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// `P(a ≤ ‖z‖ ≤ b)` for `z ~ N(0, I_d)` (chi distribution with `d` degrees).
pub fn chi_interval_probability(d: usize, a: f64, b: f64) -> f64 {
    let chi2 = ChiSquared::new(d as f64).expect("d >= 1");
    let lo = a.max(0.0);
    (chi2.cdf(b * b) - chi2.cdf(lo * lo)).clamp(0.0, 1.0)
}

/// `P(|x₁| ≤ t)` for `x` uniform on the unit sphere in `R^d` (`x₁² ~ Beta(1/2, (d−1)/2)`).
pub fn sphere_cap_probability(d: usize, t: f64) -> f64 {
    if t >= 1.0 {
        return 1.0;
    }
    beta_reg(0.5, (d as f64 - 1.0) / 2.0, t * t)
}

/// `1 − (2/α)e^{−α²/2}`, the `c`-free factor shared by the projection and cap bounds.
pub fn cap_bound(alpha: f64) -> f64 {
    1.0 - (2.0 / alpha) * (-alpha * alpha / 2.0).exp()
}

/// A fixed random unit direction derived from the seed (independent of the sample stream).
pub fn probe_direction(d: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng::seeded_rng(seed.rotate_left(32) ^ 0x9E37_79B9_7F4A_7C15);
    let mut n = linalg::gaussian_vector(&mut rng, d);
    let r = linalg::norm(&n);
    linalg::scale(1.0 / r, &mut n);
    n
}

/// `n` i.i.d. standard normal codes in `Z`.
///
/// Draws the same stream as the streaming estimators for the same `MonteCarlo`.
pub fn sample_gaussian(d: usize, mc: &MonteCarlo) -> Result<Vec<LatentCode>> {
    if d == 0 || mc.samples == 0 {
        return Err(Error::domain("sample_gaussian needs d >= 1 and n >= 1"));
    }
    let chunks = rng::map_chunks(mc.samples, mc.chunk_size, mc.seed, |rng, range| {
        range
            .map(|_| {
                let mut z = vec![0.0; d];
                fill_gaussian(rng, &mut z);
                z
            })
            .collect::<Vec<_>>()
    });
    chunks
        .into_iter()
        .flatten()
        .map(|v| LatentCode::new(Space::Z, v))
        .collect()
}

/// Fraction of codes with `|nᵀz| > threshold` against `2(1 − Φ(threshold))`.
pub fn tail_probability(d: usize, threshold: f64, mc: &MonteCarlo) -> Result<ConcentrationReport> {
    if !(threshold > 0.0) {
        return Err(Error::domain(format!("threshold must be > 0, got {threshold}")));
    }
    check_samples(d, mc)?;
    let n = probe_direction(d, mc.seed);
    let hits = mc.count(d, |z| linalg::dot(&n, z).abs() > threshold);
    let analytic = normal_two_sided_tail(threshold);

    let mut report = ConcentrationReport::new(Statistic::Tail, d, mc, threshold);
    report.empirical = mc.fraction(hits);
    report.analytic = Some(analytic);
    report.tolerance = mc.binomial_tolerance(analytic);
    report.passed = (report.empirical - analytic).abs() <= report.tolerance;
    Ok(report)
}

/// Fraction with `|nᵀz| ≤ 2α√(d/(d−2))` against the `c`-free lower bound.
pub fn check_property2(d: usize, alpha: f64, mc: &MonteCarlo) -> Result<ConcentrationReport> {
    if d < 4 {
        return Err(Error::domain(format!("requires d >= 4, got {d}")));
    }
    if !(alpha >= 1.0) {
        return Err(Error::domain(format!("requires alpha >= 1, got {alpha}")));
    }
    check_samples(d, mc)?;
    let threshold = 2.0 * alpha * (d as f64 / (d as f64 - 2.0)).sqrt();
    let n = probe_direction(d, mc.seed);
    let hits = mc.count(d, |z| linalg::dot(&n, z).abs() <= threshold);

    let mut report = ConcentrationReport::new(Statistic::Property2, d, mc, alpha);
    report.empirical = mc.fraction(hits);
    report.analytic = Some(1.0 - normal_two_sided_tail(threshold));
    report.bound_rhs = Some(cap_bound(alpha));
    report.tolerance = mc.worst_case_margin();
    report.passed = report.empirical >= cap_bound(alpha) - report.tolerance;
    report.note = Some(format!(
        "threshold {threshold:.6}; the (1 - 3e^(-cd)) factor is omitted (c unspecified)"
    ));
    Ok(report)
}

/// Fraction with `√d − β ≤ ‖z‖ ≤ √d + β`.
///
/// Passes when the fraction clears `1 − 3e^{−β²/64}` (heuristic constant) and
/// agrees with the exact chi-distribution probability within MC error.
pub fn check_annulus(d: usize, beta: f64, mc: &MonteCarlo) -> Result<ConcentrationReport> {
    let root_d = (d as f64).sqrt();
    if !(0.0..=root_d).contains(&beta) {
        return Err(Error::domain(format!("beta must lie in [0, sqrt(d)] = [0, {root_d}], got {beta}")));
    }
    check_samples(d, mc)?;
    let (lo, hi) = (root_d - beta, root_d + beta);
    let (lo2, hi2) = (lo * lo, hi * hi);
    let hits = mc.count(d, |z| {
        let r2 = linalg::dot(z, z);
        lo2 <= r2 && r2 <= hi2
    });
    let analytic = chi_interval_probability(d, lo, hi);
    let bound = 1.0 - 3.0 * (-ANNULUS_HEURISTIC_C * beta * beta).exp();

    let mut report = ConcentrationReport::new(Statistic::Annulus, d, mc, beta);
    report.empirical = mc.fraction(hits);
    report.analytic = Some(analytic);
    report.bound_rhs = Some(bound);
    report.tolerance = mc.binomial_tolerance(analytic);
    report.heuristic = true;
    report.passed = report.empirical >= bound
        && (report.empirical - analytic).abs() <= report.tolerance;
    report.note = Some("bound uses heuristic c = 1/64".into());
    Ok(report)
}

/// Fraction of uniform unit-sphere points with `|x₁| ≤ α/√(d−2)`.
pub fn check_sphere_cap(d: usize, alpha: f64, mc: &MonteCarlo) -> Result<ConcentrationReport> {
    if d < 4 {
        return Err(Error::domain(format!("requires d >= 4, got {d}")));
    }
    if !(alpha >= 1.0) {
        return Err(Error::domain(format!("requires alpha >= 1, got {alpha}")));
    }
    let t = alpha / (d as f64 - 2.0).sqrt();
    if t > 1.0 {
        return Err(Error::domain(format!("alpha/sqrt(d-2) = {t} exceeds 1")));
    }
    check_samples(d, mc)?;
    let hits = mc.count(d, |z| z[0].abs() <= t * linalg::norm(z));

    let mut report = ConcentrationReport::new(Statistic::SphereCap, d, mc, alpha);
    report.empirical = mc.fraction(hits);
    report.analytic = Some(sphere_cap_probability(d, t));
    report.bound_rhs = Some(cap_bound(alpha));
    report.tolerance = mc.worst_case_margin();
    report.passed = report.empirical >= cap_bound(alpha) - report.tolerance;
    Ok(report)
}

/// Kolmogorov-Smirnov statistic of the projections `nᵀz` against `Φ`.
///
/// Passes when the statistic is below the asymptotic critical value at
/// significance 0.001 (`1.9495/√n`).
pub fn ks_projection(d: usize, mc: &MonteCarlo) -> Result<ConcentrationReport> {
    check_samples(d, mc)?;
    let n = probe_direction(d, mc.seed);
    let mut xs = mc.fold_gaussian(
        d,
        Vec::new(),
        |acc: &mut Vec<f64>, z| acc.push(linalg::dot(&n, z)),
        |mut a, b| {
            a.extend(b);
            a
        },
    );
    let stat = ks_statistic(&mut xs, normal_cdf);

    let mut report = ConcentrationReport::new(Statistic::KolmogorovSmirnov, d, mc, 0.0);
    report.empirical = stat;
    report.tolerance = 1.9495 / (mc.samples as f64).sqrt();
    report.passed = stat <= report.tolerance;
    Ok(report)
}

/// `sup_x |F_n(x) − F(x)|` for the sample `xs` (sorted in place).
pub fn ks_statistic(xs: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

fn check_samples(d: usize, mc: &MonteCarlo) -> Result<()> {
    if d == 0 {
        return Err(Error::domain("dimension must be >= 1"));
    }
    if mc.samples == 0 {
        return Err(Error::domain("sample count must be >= 1"));
    }
    Ok(())
}
