//! Log-space Gaussian kernel sums.
//!
//! With a bandwidth of 0.1 the raw kernel values underflow a few units away
//! from the data, so every sum here is accumulated relative to its largest
//! term and returned as a logarithm.

use crate::Point;

/// Terms smaller than `exp(-TERM_CUTOFF)` times the largest term are
/// dropped. Even a few thousand of them sit far below f64 resolution.
const TERM_CUTOFF: f64 = 60.0;

#[inline]
pub fn sq_dist(a: &Point, b: &Point) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

/// `log Σ_i exp(-‖x - p_i‖² / (2σ²))`, or `-∞` for an empty set.
///
/// The kernel normalization constant is left out; callers add it when they
/// need a density and drop it when it cancels in a ratio.
pub fn log_gaussian_sum(points: &[Point], x: &Point, sigma: f64) -> f64 {
    let Some(min_d2) = points.iter().map(|p| sq_dist(p, x)).reduce(f64::min) else {
        return f64::NEG_INFINITY;
    };
    let inv = 1.0 / (2.0 * sigma * sigma);
    let cutoff = TERM_CUTOFF / inv;
    let mut acc = 0.0;
    for p in points {
        let excess = sq_dist(p, x) - min_d2;
        if excess < cutoff {
            acc += (-excess * inv).exp();
        }
    }
    acc.ln() - min_d2 * inv
}

/// `log(exp(a) + exp(b))` without overflow; handles `-∞` operands.
#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// Max-shifted log-sum-exp over a slice.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + values.iter().map(|v| (v - hi).exp()).sum::<f64>().ln()
}
