//! Density ratio estimators `ρ̂_ε ≈ p̂'/p̂` between `X` and `X \ X'`.
//!
//! A soft classifier `f(x) = P(x ∈ X')` trained with every kept point
//! counted twice turns into a ratio through Bayes' rule,
//! `ρ̂_f = [N/(N-N')]·(1-f)/(1+f)`. With the kernel classifier (KBC) at the
//! learner's bandwidth this reproduces the exact KDE ratio.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::data::TrainingSet;
use crate::kde::{check_bandwidth, exact_ratio_core};
use crate::kernel::{log_gaussian_sum, sq_dist};
use crate::{Error, Point, Result};

/// A nonnegative ratio estimate with a known upper bound `B ≥ sup ρ̂_ε`.
///
/// Rejection sampling relies on the bound. If an implementation reports a
/// bound below its true supremum the sampler still runs, but its output law
/// is biased; nothing detects this at runtime.
pub trait RatioEstimator: Send + Sync {
    fn evaluate(&self, x: &Point) -> f64;

    fn bound(&self) -> f64;
}

impl<T: RatioEstimator + ?Sized> RatioEstimator for Box<T> {
    fn evaluate(&self, x: &Point) -> f64 {
        (**self).evaluate(x)
    }

    fn bound(&self) -> f64 {
        (**self).bound()
    }
}

impl<T: RatioEstimator + ?Sized> RatioEstimator for &T {
    fn evaluate(&self, x: &Point) -> f64 {
        (**self).evaluate(x)
    }

    fn bound(&self) -> f64 {
        (**self).bound()
    }
}

/// Wraps a closure as an estimator.
pub struct FnRatio<F> {
    f: F,
    bound: f64,
}

impl<F: Fn(&Point) -> f64 + Send + Sync> FnRatio<F> {
    pub fn new(f: F, bound: f64) -> Self {
        Self { f, bound }
    }
}

impl<F: Fn(&Point) -> f64 + Send + Sync> RatioEstimator for FnRatio<F> {
    fn evaluate(&self, x: &Point) -> f64 {
        (self.f)(x)
    }

    fn bound(&self) -> f64 {
        self.bound
    }
}

/// Which estimator to build from a training set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EstimatorKind {
    /// The exact KDE ratio at learner bandwidth `sigma`.
    Exact { sigma: f64 },
    /// Kernel-based classifier with bandwidth `sigma_c`.
    Kbc { sigma_c: f64 },
    /// k-nearest-neighbour vote over the duplicated multiset.
    Knn { k: usize },
}

impl EstimatorKind {
    pub fn validate(&self) -> Result<()> {
        match *self {
            EstimatorKind::Exact { sigma } => check_bandwidth(sigma, "exact-ratio bandwidth"),
            EstimatorKind::Kbc { sigma_c } => check_bandwidth(sigma_c, "KBC bandwidth sigma_c"),
            EstimatorKind::Knn { k: 0 } => Err(Error::param("kNN needs k >= 1")),
            EstimatorKind::Knn { .. } => Ok(()),
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EstimatorKind::Exact { sigma } => write!(f, "exact(sigma={sigma})"),
            EstimatorKind::Kbc { sigma_c } => write!(f, "kbc(sigma_c={sigma_c})"),
            EstimatorKind::Knn { k } => write!(f, "knn(k={k})"),
        }
    }
}

fn check_counts(n: usize, n_deleted: usize) -> Result<()> {
    if n_deleted >= n {
        Err(Error::param(format!(
            "deletion count N'={n_deleted} must be below N={n}"
        )))
    } else {
        Ok(())
    }
}

/// `B = N/(N - N')`, the supremum of every Bayes-rule estimator and of the
/// exact KDE ratio.
pub fn dre_bound(n: usize, n_deleted: usize) -> Result<f64> {
    check_counts(n, n_deleted)?;
    Ok(n as f64 / (n - n_deleted) as f64)
}

/// `[N/(N-N')]·(1-f)/(1+f)`.
pub fn ratio_from_classifier(f_value: f64, n: usize, n_deleted: usize) -> Result<f64> {
    let scale = dre_bound(n, n_deleted)?;
    if !(0.0..=1.0).contains(&f_value) {
        return Err(Error::param(format!(
            "classifier output must lie in [0, 1], got {f_value}"
        )));
    }
    Ok(bayes_ratio(f_value, scale))
}

#[inline]
fn bayes_ratio(f: f64, scale: f64) -> f64 {
    scale * (1.0 - f) / (1.0 + f)
}

/// Same as [`bayes_ratio`] but fed `g = 1 - f`, which keeps full relative
/// precision when `f` is within a few ulps of 1.
#[inline]
fn bayes_ratio_from_complement(g: f64, scale: f64) -> f64 {
    scale * g / (2.0 - g)
}

/// `S_D / (S_D + 2 S_K)` from log kernel sums.
#[inline]
fn kbc_core(log_kept: f64, log_del: f64) -> f64 {
    if log_del == f64::NEG_INFINITY {
        return 0.0;
    }
    1.0 / (1.0 + 2.0 * (log_kept - log_del).exp())
}

/// `1 - f = 2 S_K / (S_D + 2 S_K)` from log kernel sums.
#[inline]
fn kbc_complement(log_kept: f64, log_del: f64) -> f64 {
    if log_del == f64::NEG_INFINITY {
        return 1.0;
    }
    1.0 / (1.0 + 0.5 * (log_del - log_kept).exp())
}

/// Kernel-based soft classifier
/// `f(x) = Σ_del K(x - x_i) / (Σ_del K(x - x_i) + 2 Σ_kept K(x - x_i))`.
///
/// With no deleted points `f ≡ 0`.
pub fn kbc_classifier(training: &TrainingSet, sigma_c: f64, x: &Point) -> f64 {
    kbc_core(
        log_gaussian_sum(&training.kept_points(), x, sigma_c),
        log_gaussian_sum(&training.deleted_points(), x, sigma_c),
    )
}

/// Fraction of deleted-class entries among the `k` nearest entries of the
/// multiset holding each deleted point once and each kept point twice.
///
/// Ties in distance are broken by point index, then copy index, so the two
/// copies of a kept point are always adjacent.
pub fn knn_classifier(training: &TrainingSet, k: usize, x: &Point) -> Result<f64> {
    check_knn_k(training, k)?;
    Ok(knn_fraction(
        training.points(),
        training.deleted_mask(),
        k,
        x,
    ))
}

fn check_knn_k(training: &TrainingSet, k: usize) -> Result<()> {
    let n_del = training.n_deleted();
    let multiset = n_del + 2 * (training.len() - n_del);
    if k == 0 || k > multiset {
        return Err(Error::param(format!(
            "kNN k={k} must lie in [1, {multiset}] (size of the duplicated training multiset)"
        )));
    }
    Ok(())
}

fn knn_fraction(points: &[Point], deleted: &[bool], k: usize, x: &Point) -> f64 {
    let mut order: Vec<(f64, usize)> = points
        .iter()
        .enumerate()
        .map(|(i, p)| (sq_dist(p, x), i))
        .collect();
    let by_dist = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    // k slots never need more than k distinct points
    let take = k.min(order.len());
    if take < order.len() {
        order.select_nth_unstable_by(take - 1, by_dist);
        order.truncate(take);
    }
    order.sort_unstable_by(by_dist);

    let mut filled = 0;
    let mut votes = 0;
    for (_, i) in order {
        let copies = if deleted[i] { 1 } else { 2 };
        let used = copies.min(k - filled);
        if deleted[i] {
            votes += used;
        }
        filled += used;
        if filled == k {
            break;
        }
    }
    votes as f64 / k as f64
}

/// Exact KDE ratio `p̂'/p̂` with kept and deleted points pre-split.
#[derive(Debug, Clone)]
pub struct ExactRatio {
    kept: Vec<Point>,
    deleted: Vec<Point>,
    sigma: f64,
    scale: f64,
}

impl ExactRatio {
    pub fn new(training: &TrainingSet, sigma: f64) -> Result<Self> {
        check_bandwidth(sigma, "exact-ratio bandwidth")?;
        Ok(Self {
            kept: training.kept_points(),
            deleted: training.deleted_points(),
            sigma,
            scale: dre_bound(training.len(), training.n_deleted())?,
        })
    }

    /// `log ρ̂(x)` without going through the linear-scale ratio.
    pub fn log_evaluate(&self, x: &Point) -> f64 {
        let log_kept = log_gaussian_sum(&self.kept, x, self.sigma);
        let log_del = log_gaussian_sum(&self.deleted, x, self.sigma);
        let log_all = crate::kernel::log_add_exp(log_kept, log_del);
        self.scale.ln() + log_kept - log_all
    }
}

impl RatioEstimator for ExactRatio {
    fn evaluate(&self, x: &Point) -> f64 {
        let log_kept = log_gaussian_sum(&self.kept, x, self.sigma);
        let log_del = log_gaussian_sum(&self.deleted, x, self.sigma);
        self.scale * exact_ratio_core(log_kept, log_del)
    }

    fn bound(&self) -> f64 {
        self.scale
    }
}

/// KBC classifier composed with the Bayes-rule ratio.
#[derive(Debug, Clone)]
pub struct KbcRatio {
    kept: Vec<Point>,
    deleted: Vec<Point>,
    sigma_c: f64,
    scale: f64,
}

impl KbcRatio {
    pub fn new(training: &TrainingSet, sigma_c: f64) -> Result<Self> {
        check_bandwidth(sigma_c, "KBC bandwidth sigma_c")?;
        Ok(Self {
            kept: training.kept_points(),
            deleted: training.deleted_points(),
            sigma_c,
            scale: dre_bound(training.len(), training.n_deleted())?,
        })
    }

    pub fn classify(&self, x: &Point) -> f64 {
        kbc_core(
            log_gaussian_sum(&self.kept, x, self.sigma_c),
            log_gaussian_sum(&self.deleted, x, self.sigma_c),
        )
    }
}

impl RatioEstimator for KbcRatio {
    fn evaluate(&self, x: &Point) -> f64 {
        let g = kbc_complement(
            log_gaussian_sum(&self.kept, x, self.sigma_c),
            log_gaussian_sum(&self.deleted, x, self.sigma_c),
        );
        bayes_ratio_from_complement(g, self.scale)
    }

    fn bound(&self) -> f64 {
        self.scale
    }
}

/// kNN classifier composed with the Bayes-rule ratio. Takes at most `k + 1`
/// distinct values.
#[derive(Debug, Clone)]
pub struct KnnRatio {
    points: Vec<Point>,
    deleted: Vec<bool>,
    k: usize,
    scale: f64,
}

impl KnnRatio {
    pub fn new(training: &TrainingSet, k: usize) -> Result<Self> {
        check_knn_k(training, k)?;
        Ok(Self {
            points: training.points().to_vec(),
            deleted: training.deleted_mask().to_vec(),
            k,
            scale: dre_bound(training.len(), training.n_deleted())?,
        })
    }

    pub fn classify(&self, x: &Point) -> f64 {
        knn_fraction(&self.points, &self.deleted, self.k, x)
    }
}

impl RatioEstimator for KnnRatio {
    fn evaluate(&self, x: &Point) -> f64 {
        bayes_ratio(self.classify(x), self.scale)
    }

    fn bound(&self) -> f64 {
        self.scale
    }
}

pub fn make_estimator(
    kind: &EstimatorKind,
    training: &TrainingSet,
) -> Result<Box<dyn RatioEstimator>> {
    kind.validate()?;
    Ok(match *kind {
        EstimatorKind::Exact { sigma } => Box::new(ExactRatio::new(training, sigma)?),
        EstimatorKind::Kbc { sigma_c } => Box::new(KbcRatio::new(training, sigma_c)?),
        EstimatorKind::Knn { k } => Box::new(KnnRatio::new(training, k)?),
    })
}
