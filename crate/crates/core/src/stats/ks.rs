use serde::Serialize;

use super::StatisticDistribution;
use crate::{Error, Result};

/// Two-sample Kolmogorov–Smirnov statistic with the sample sizes needed for
/// its asymptotic critical values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub n_a: usize,
    pub n_b: usize,
}

impl KsResult {
    pub fn critical_at(&self, alpha: f64) -> f64 {
        ks_critical_value(alpha, self.n_a, self.n_b)
    }

    pub fn rejects_at(&self, alpha: f64) -> bool {
        self.statistic > self.critical_at(alpha)
    }
}

/// `c(α)·sqrt((n_a + n_b)/(n_a n_b))` with `c(α) = sqrt(-ln(α/2)/2)`
/// (1.358 at α = 0.05, 1.628 at α = 0.01).
pub fn ks_critical_value(alpha: f64, n_a: usize, n_b: usize) -> f64 {
    let c = (-(alpha / 2.0).ln() / 2.0).sqrt();
    let (a, b) = (n_a as f64, n_b as f64);
    c * ((a + b) / (a * b)).sqrt()
}

/// Sup-norm distance between the empirical CDFs of `a` and `b`.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput("KS sample"));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_unstable_by(f64::total_cmp);
    b.sort_unstable_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);

    let (mut i, mut j) = (0, 0);
    let mut sup: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let v = if a[i] <= b[j] { a[i] } else { b[j] };
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        sup = sup.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(KsResult {
        statistic: sup,
        n_a: a.len(),
        n_b: b.len(),
    })
}

pub fn ks_two_sample(a: &StatisticDistribution, b: &StatisticDistribution) -> Result<KsResult> {
    ks_statistic(&a.values, &b.values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identical_samples() {
        let a = [3.0, 1.0, 2.0, 2.0];
        let b = [2.0, 2.0, 3.0, 1.0];
        assert_eq!(ks_statistic(&a, &b).unwrap().statistic, 0.0);
    }

    #[test]
    fn disjoint_supports() {
        let a = [0.1, 0.2, 0.3];
        let b = [1.0, 2.0];
        assert_eq!(ks_statistic(&a, &b).unwrap().statistic, 1.0);
    }

    #[test]
    fn hand_computed_gap() {
        let r = ks_statistic(&[1.0, 2.0], &[1.5, 2.5]).unwrap();
        assert_eq!(r.statistic, 0.5);
    }

    #[test]
    fn reference_values() {
        // lace's ks2sample reference cases
        let r = ks_statistic(&[1.0, 1.0, 4.0, 4.0], &[1.0, 1.0, 1.0, 4.0]).unwrap();
        assert!((r.statistic - 0.25).abs() < 1e-15);
        let xs = [0.42, 0.24, 0.86, 0.85, 0.82, 0.82, 0.25, 0.78, 0.13, 0.27];
        let ys = [0.24, 0.27, 0.87, 0.29, 0.57, 0.44, 0.5, 0.00, 0.56, 0.03];
        assert!((ks_statistic(&xs, &ys).unwrap().statistic - 0.4).abs() < 1e-15);
    }

    #[test]
    fn empty_is_an_error() {
        assert!(ks_statistic(&[], &[1.0]).is_err());
        assert!(ks_statistic(&[1.0], &[]).is_err());
    }

    #[test]
    fn critical_values() {
        let c05 = ks_critical_value(0.05, 1, 1) / 2f64.sqrt();
        let c01 = ks_critical_value(0.01, 1, 1) / 2f64.sqrt();
        assert!((c05 - 1.358).abs() < 1e-3);
        assert!((c01 - 1.628).abs() < 1e-3);
        assert!((ks_critical_value(0.05, 250, 250) - 0.1215).abs() < 1e-4);
    }

    proptest! {
        #[test]
        fn symmetric_and_transform_invariant(
            a in prop::collection::vec(-5.0..5.0f64, 1..40),
            b in prop::collection::vec(-5.0..5.0f64, 1..40),
        ) {
            let ab = ks_statistic(&a, &b).unwrap().statistic;
            let ba = ks_statistic(&b, &a).unwrap().statistic;
            prop_assert_eq!(ab, ba);
            let f = |v: &f64| v.exp() * 3.0 - 1.0;
            let ta: Vec<f64> = a.iter().map(f).collect();
            let tb: Vec<f64> = b.iter().map(f).collect();
            prop_assert_eq!(ab, ks_statistic(&ta, &tb).unwrap().statistic);
            prop_assert!((0.0..=1.0).contains(&ab));
        }
    }
}
