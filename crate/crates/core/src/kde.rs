//! Gaussian kernel density estimation.
//!
//! `p̂(x) = (1/n) Σ_i N(x; x_i, σ²I)`. Fitting only stores the points; all
//! work happens at query time, in log space.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::data::TrainingSet;
use crate::kernel::log_gaussian_sum;
use crate::{Error, Point, Result, DIM};

/// A distribution with a computable log-density.
pub trait Density {
    fn log_density(&self, x: &Point) -> f64;
}

/// A distribution that can be sampled one point at a time.
pub trait PointSampler {
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Point;

    fn draw_n<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<Point> {
        (0..n).map(|_| self.draw(rng)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KdeModel {
    points: Vec<Point>,
    sigma: f64,
    log_norm: f64,
}

pub(crate) fn check_bandwidth(sigma: f64, what: &str) -> Result<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::param(format!(
            "{what} must be positive and finite, got {sigma}"
        )))
    }
}

/// Log of the Gaussian kernel normalization `(2πσ²)^{-d/2}`.
pub(crate) fn log_kernel_norm(sigma: f64) -> f64 {
    -0.5 * DIM as f64 * (2.0 * PI * sigma * sigma).ln()
}

pub fn kde_fit(points: Vec<Point>, sigma: f64) -> Result<KdeModel> {
    if points.is_empty() {
        return Err(Error::EmptyInput("KDE points"));
    }
    check_bandwidth(sigma, "KDE bandwidth")?;
    let log_norm = log_kernel_norm(sigma) - (points.len() as f64).ln();
    Ok(KdeModel {
        points,
        sigma,
        log_norm,
    })
}

impl KdeModel {
    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn log_density(&self, x: &Point) -> f64 {
        self.log_norm + log_gaussian_sum(&self.points, x, self.sigma)
    }

    /// Ancestral sampling: a uniformly chosen point plus `N(0, σ²I)` noise.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<Point> {
        self.draw_n(n, rng)
    }
}

impl Density for KdeModel {
    fn log_density(&self, x: &Point) -> f64 {
        KdeModel::log_density(self, x)
    }
}

impl PointSampler for KdeModel {
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        let c = self.points[rng.random_range(0..self.points.len())];
        let zx: f64 = rng.sample(StandardNormal);
        let zy: f64 = rng.sample(StandardNormal);
        [c[0] + self.sigma * zx, c[1] + self.sigma * zy]
    }
}

/// The pre-trained and re-trained models of a training set: KDE on `X` and
/// on `X \ X'`.
pub fn fit_pair(training: &TrainingSet, sigma: f64) -> Result<(KdeModel, KdeModel)> {
    let full = kde_fit(training.points().to_vec(), sigma)?;
    let kept = kde_fit(training.kept_points(), sigma)?;
    Ok((full, kept))
}

/// The exact ratio `p̂'(x)/p̂(x)` of two Gaussian KDEs fit on `X \ X'` and `X`:
///
/// `[N/(N-N')] · Σ_kept K_σ(x - x_i) / Σ_all K_σ(x - x_i)`.
///
/// See [`crate::dre::ExactRatio`] for the reusable estimator form.
pub fn kde_exact_ratio(training: &TrainingSet, sigma: f64, x: &Point) -> f64 {
    let kept = training.kept_points();
    let deleted = training.deleted_points();
    let n = training.len() as f64;
    let scale = n / kept.len() as f64;
    let log_kept = log_gaussian_sum(&kept, x, sigma);
    let log_del = log_gaussian_sum(&deleted, x, sigma);
    scale * exact_ratio_core(log_kept, log_del)
}

/// `S_kept / (S_kept + S_del)` from the two log-sums.
#[inline]
pub(crate) fn exact_ratio_core(log_kept: f64, log_del: f64) -> f64 {
    if log_del == f64::NEG_INFINITY {
        1.0
    } else {
        1.0 / (1.0 + (log_del - log_kept).exp())
    }
}

impl PointSampler for crate::data::MixtureSpec {
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        crate::data::sample_mixture(self, 1, rng).0[0]
    }
}

impl Density for crate::data::MixtureSpec {
    fn log_density(&self, x: &Point) -> f64 {
        crate::data::mixture_log_density(self, x)
    }
}
