//! Rejection sampling from the approximated model `ρ̂_ε · p̂`.

use rand::Rng;
use rayon::prelude::*;

use crate::dre::RatioEstimator;
use crate::kde::PointSampler;
use crate::rng::stream_rng;
use crate::{Error, Point, Result};

/// Accepted samples plus the number of proposals it took to get them.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RejectionReport {
    pub samples: Vec<Point>,
    pub attempts: u64,
    pub accepted: u64,
}

impl RejectionReport {
    pub fn acceptance_rate(&self) -> f64 {
        if self.attempts == 0 {
            return f64::NAN;
        }
        self.accepted as f64 / self.attempts as f64
    }
}

/// `1000 · n · B`, rounded up.
pub fn default_max_attempts(n: usize, bound: f64) -> u64 {
    (1000.0 * n as f64 * bound).ceil() as u64
}

/// Draws `n` samples of `ρ̂_ε · p̂` (normalized) by proposing `y ~ p̂`,
/// then `u ~ U[0,1]` from the same stream, and accepting when
/// `ρ̂_ε(y) > B·u`.
///
/// Fails with [`Error::Exhausted`], carrying what was accepted so far, when
/// `max_attempts` proposals do not yield `n` acceptances.
pub fn rejection_sample<S, E, R>(
    base: &S,
    estimator: &E,
    n: usize,
    rng: &mut R,
    max_attempts: u64,
) -> Result<RejectionReport>
where
    S: PointSampler + ?Sized,
    E: RatioEstimator + ?Sized,
    R: Rng + ?Sized,
{
    if max_attempts < n as u64 {
        return Err(Error::param(format!(
            "max_attempts ({max_attempts}) must be at least n ({n})"
        )));
    }
    let bound = estimator.bound();
    let mut report = RejectionReport {
        samples: Vec::with_capacity(n),
        ..Default::default()
    };
    while report.samples.len() < n {
        if report.attempts == max_attempts {
            return Err(Error::Exhausted {
                requested: n,
                partial: report,
            });
        }
        report.attempts += 1;
        let y = base.draw(rng);
        let u: f64 = rng.random();
        if estimator.evaluate(&y) > bound * u {
            report.samples.push(y);
            report.accepted += 1;
        }
    }
    Ok(report)
}

/// Splits `n` across `chunks` independent sub-streams derived from `seed`
/// and concatenates the results in chunk order, so the output does not
/// depend on the number of worker threads.
pub fn rejection_sample_par<S, E>(
    base: &S,
    estimator: &E,
    n: usize,
    seed: u64,
    chunks: usize,
) -> Result<RejectionReport>
where
    S: PointSampler + Sync + ?Sized,
    E: RatioEstimator + ?Sized,
{
    let chunks = chunks.max(1);
    let bound = estimator.bound();
    let parts: Vec<Result<RejectionReport>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let size = n / chunks + usize::from(c < n % chunks);
            let mut rng = stream_rng(seed, &[c as u64]);
            rejection_sample(
                base,
                estimator,
                size,
                &mut rng,
                default_max_attempts(size, bound),
            )
        })
        .collect();
    let mut out = RejectionReport::default();
    for part in parts {
        let part = part?;
        out.attempts += part.attempts;
        out.accepted += part.accepted;
        out.samples.extend(part.samples);
    }
    Ok(out)
}
