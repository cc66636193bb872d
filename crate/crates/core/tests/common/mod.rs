//! Independent reference implementations shared by the integration tests.
//! They use plain loops on purpose and none of the library's kernel code.
#![allow(dead_code)]

use std::f64::consts::PI;

use dre_deletion::harness::{Experiment, ExperimentConfig};
use dre_deletion::Point;
use rand::Rng;
use rand_distr::StandardNormal;

/// Config with defaults plus `key=value` overrides.
pub fn config(overrides: &[&str]) -> ExperimentConfig {
    let owned: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
    ExperimentConfig::from_json_str("{}", &owned).expect("valid test config")
}

pub fn experiment(overrides: &[&str]) -> (ExperimentConfig, Experiment) {
    let c = config(overrides);
    let e = Experiment::prepare(&c).expect("experiment");
    (c, e)
}

/// `log (1/n) Σ N(x; x_i, σ²I)` in two dimensions by a two-pass
/// log-sum-exp over every point.
pub fn naive_log_kde(points: &[Point], sigma: f64, x: &Point) -> f64 {
    let exps: Vec<f64> = points
        .iter()
        .map(|p| {
            let d2 = (x[0] - p[0]).powi(2) + (x[1] - p[1]).powi(2);
            -d2 / (2.0 * sigma * sigma)
        })
        .collect();
    let max = exps.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = exps.iter().map(|e| (e - max).exp()).sum();
    max + sum.ln() - (points.len() as f64).ln() - (2.0 * PI * sigma * sigma).ln()
}

/// Draws from a Gaussian KDE: a uniform centre plus `N(0, σ²I)` noise.
pub fn sample_kde<R: Rng>(points: &[Point], sigma: f64, n: usize, rng: &mut R) -> Vec<Point> {
    (0..n)
        .map(|_| {
            let c = points[rng.random_range(0..points.len())];
            let zx: f64 = rng.sample(StandardNormal);
            let zy: f64 = rng.sample(StandardNormal);
            [c[0] + sigma * zx, c[1] + sigma * zy]
        })
        .collect()
}

/// `(mean, standard error of the mean)`.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Sample variance and the standard error of that variance estimate,
/// `sqrt((μ4 - s⁴ (n-3)/(n-1)) / n)`.
pub fn variance_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    let se = ((m4 - var * var * (n - 3.0) / (n - 1.0)) / n).sqrt();
    (var, se)
}

/// Sup distance between two empirical CDFs by brute force over all
/// pooled values.
pub fn naive_ks(a: &[f64], b: &[f64]) -> f64 {
    let ecdf = |s: &[f64], t: f64| s.iter().filter(|&&v| v <= t).count() as f64 / s.len() as f64;
    a.iter()
        .chain(b)
        .map(|&t| (ecdf(a, t) - ecdf(b, t)).abs())
        .fold(0.0, f64::max)
}
