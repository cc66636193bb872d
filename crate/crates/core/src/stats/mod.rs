//! Deletion-test statistics and the KS comparison of their distributions.
//!
//! Ratio values are clamped to `[RATIO_FLOOR, B]` before `log` or `φ` is
//! applied. kNN estimators return exactly 0 when every vote is cast by a
//! deleted point, and `log 0` would otherwise poison a whole repeat.

mod ks;
mod mmd;

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dre::RatioEstimator;
use crate::kde::{Density, PointSampler};
use crate::{Error, Point, Result};

pub use ks::{ks_critical_value, ks_statistic, ks_two_sample, KsResult};
pub use mmd::{mmd_closed_form_kde, mmd_closed_form_kde_with_bandwidth, mmd_u_squared};

/// Lower clamp applied to ratio values before `log`/`φ`.
pub const RATIO_FLOOR: f64 = 1e-12;

/// Convex generator `φ` of a φ-divergence, with `φ(1) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhiFamily {
    /// `φ(t) = log t`
    Log,
    /// `φ(t) = t log t`
    Kl,
    /// `φ(t) = (√t - 1)²`
    Hellinger,
}

impl PhiFamily {
    pub fn apply(self, t: f64) -> f64 {
        match self {
            PhiFamily::Log => t.ln(),
            PhiFamily::Kl => t * t.ln(),
            PhiFamily::Hellinger => (t.sqrt() - 1.0).powi(2),
        }
    }

    /// `ψ(t) = φ(t) / (1 + t)`.
    pub fn psi(self, t: f64) -> f64 {
        self.apply(t) / (1.0 + t)
    }

    pub fn name(self) -> &'static str {
        match self {
            PhiFamily::Log => "log",
            PhiFamily::Kl => "kl",
            PhiFamily::Hellinger => "hellinger",
        }
    }
}

/// `R` repeated values of one named statistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatisticDistribution {
    pub name: String,
    pub values: Vec<f64>,
}

impl StatisticDistribution {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        let name = name.into();
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::param(format!(
                "statistic {name} has non-finite value {v}"
            )));
        }
        Ok(Self { name, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        mean(&self.values)
    }

    /// Standard error of the mean.
    pub fn standard_error(&self) -> f64 {
        (sample_variance(&self.values) / self.values.len() as f64).sqrt()
    }
}

/// Writes `name,repeat_index,value` rows in the given order.
pub fn write_statistics_csv<'a, W, I>(out: W, series: I) -> Result<()>
where
    W: Write,
    I: IntoIterator<Item = &'a StatisticDistribution>,
{
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["name", "repeat_index", "value"])?;
    for s in series {
        for (i, v) in s.values.iter().enumerate() {
            w.write_record([s.name.as_str(), &i.to_string(), &v.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance; NaN for fewer than two values.
pub(crate) fn sample_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Ratio values of `ys` clamped to `[RATIO_FLOOR, bound]`.
#[derive(Debug, Clone)]
pub struct ClampedRatios {
    pub values: Vec<f64>,
    /// How many values hit either clamp.
    pub clamped: usize,
}

impl ClampedRatios {
    pub fn evaluate<E: RatioEstimator + ?Sized>(ys: &[Point], estimator: &E) -> Self {
        let bound = estimator.bound();
        let mut clamped = 0;
        let values = ys
            .iter()
            .map(|y| {
                let r = estimator.evaluate(y);
                if r < RATIO_FLOOR {
                    clamped += 1;
                    RATIO_FLOOR
                } else if r > bound {
                    clamped += 1;
                    bound
                } else {
                    r
                }
            })
            .collect();
        Self { values, clamped }
    }

    /// `(1/m) Σ log ρ̂(y)`.
    pub fn lr(&self) -> f64 {
        self.values.iter().map(|r| r.ln()).sum::<f64>() / self.values.len() as f64
    }

    /// `(1/m) Σ ψ(ρ̂(y))`, one half of the ASC statistic.
    pub fn psi_mean(&self, phi: PhiFamily) -> f64 {
        self.values.iter().map(|&r| phi.psi(r)).sum::<f64>() / self.values.len() as f64
    }
}

/// Likelihood ratio statistic `(1/m) Σ_{y∈Y} log ρ̂(y)`.
pub fn lr_statistic<E: RatioEstimator + ?Sized>(ys: &[Point], estimator: &E) -> Result<f64> {
    if ys.is_empty() {
        return Err(Error::EmptyInput("LR sample set"));
    }
    Ok(ClampedRatios::evaluate(ys, estimator).lr())
}

/// ASC statistic `(1/m) Σ_{Ŷ} ψ(ρ̂) + (1/m) Σ_{Y} ψ(ρ̂)` with
/// `ψ(t) = φ(t)/(1+t)`.
pub fn asc_statistic<E: RatioEstimator + ?Sized>(
    y_hat: &[Point],
    ys: &[Point],
    estimator: &E,
    phi: PhiFamily,
) -> Result<f64> {
    if y_hat.is_empty() || ys.is_empty() {
        return Err(Error::EmptyInput("ASC sample set"));
    }
    if y_hat.len() != ys.len() {
        return Err(Error::LengthMismatch {
            what: "ASC sample sets",
            left: y_hat.len(),
            right: ys.len(),
        });
    }
    let a = ClampedRatios::evaluate(y_hat, estimator);
    let b = ClampedRatios::evaluate(ys, estimator);
    Ok(a.psi_mean(phi) + b.psi_mean(phi))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KlEstimate {
    pub estimate: f64,
    pub standard_error: f64,
}

/// Monte Carlo `KL(p‖q) ≈ (1/n) Σ [log p(x) - log q(x)]`, `x ~ p`.
pub fn kl_monte_carlo<P, Q, R>(p: &P, q: &Q, n: usize, rng: &mut R) -> Result<KlEstimate>
where
    P: Density + PointSampler + ?Sized,
    Q: Density + ?Sized,
    R: Rng + ?Sized,
{
    if n < 2 {
        return Err(Error::param(format!(
            "KL Monte Carlo needs n >= 2, got {n}"
        )));
    }
    let diffs: Vec<f64> = (0..n)
        .map(|_| {
            let x = p.draw(rng);
            p.log_density(&x) - q.log_density(&x)
        })
        .collect();
    Ok(KlEstimate {
        estimate: mean(&diffs),
        standard_error: (sample_variance(&diffs) / n as f64).sqrt(),
    })
}
