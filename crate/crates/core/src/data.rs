//! Synthetic data: the MoG-8 and CKB-8 mixtures, training sets and deletion sets.
//!
//! Two covariance conventions coexist in this crate and must not be mixed
//! up. MoG-8 components have covariance `0.1·I` (variance 0.1 per axis,
//! stored as `variance`). The KDE learner uses kernels `N(0, σ²I)` with
//! `σ = 0.1`, i.e. variance 0.01.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::io::Write;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::kernel::{log_sum_exp, sq_dist};
use crate::{Error, Point, Result};

/// Which of the two synthetic distributions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dataset {
    Mog8,
    Ckb8,
}

impl Dataset {
    pub fn spec(self, lambda: f64) -> Result<MixtureSpec> {
        match self {
            Dataset::Mog8 => make_mog8_spec(lambda),
            Dataset::Ckb8 => make_ckb8_spec(lambda),
        }
    }

    /// Clusters whose weight is scaled by λ, 1-based.
    pub fn default_reweighted(self) -> BTreeSet<u32> {
        match self {
            Dataset::Mog8 => [1, 3, 5, 7].into_iter().collect(),
            Dataset::Ckb8 => CKB8_REWEIGHTED.into_iter().collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Component {
    /// `N(center, variance·I)`.
    Gaussian { center: Point, variance: f64 },
    /// Uniform on `[xmin, xmax] × [ymin, ymax]`.
    UniformRect {
        xmin: f64,
        xmax: f64,
        ymin: f64,
        ymax: f64,
    },
}

impl Component {
    fn validate(&self) -> Result<()> {
        match *self {
            Component::Gaussian { center, variance } => {
                if !(variance > 0.0 && variance.is_finite()) {
                    return Err(Error::param(format!(
                        "gaussian variance must be > 0, got {variance}"
                    )));
                }
                if !center.iter().all(|c| c.is_finite()) {
                    return Err(Error::param("gaussian center must be finite"));
                }
            }
            Component::UniformRect {
                xmin,
                xmax,
                ymin,
                ymax,
            } => {
                if !(xmin < xmax && ymin < ymax) {
                    return Err(Error::param(format!(
                        "rectangle [{xmin},{xmax}]x[{ymin},{ymax}] is empty"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn log_density(&self, x: &Point) -> f64 {
        match *self {
            Component::Gaussian { center, variance } => {
                -(2.0 * PI * variance).ln() - sq_dist(x, &center) / (2.0 * variance)
            }
            Component::UniformRect {
                xmin,
                xmax,
                ymin,
                ymax,
            } => {
                if (xmin..=xmax).contains(&x[0]) && (ymin..=ymax).contains(&x[1]) {
                    -((xmax - xmin) * (ymax - ymin)).ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        match *self {
            Component::Gaussian { center, variance } => {
                let sd = variance.sqrt();
                let zx: f64 = rng.sample(StandardNormal);
                let zy: f64 = rng.sample(StandardNormal);
                [center[0] + sd * zx, center[1] + sd * zy]
            }
            Component::UniformRect {
                xmin,
                xmax,
                ymin,
                ymax,
            } => {
                let u: f64 = rng.random();
                let v: f64 = rng.random();
                [xmin + (xmax - xmin) * u, ymin + (ymax - ymin) * v]
            }
        }
    }
}

/// A finite mixture of Gaussian and uniform-rectangle components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    components: Vec<Component>,
    weights: Vec<f64>,
}

impl MixtureSpec {
    pub fn new(components: Vec<Component>, weights: Vec<f64>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::EmptyInput("mixture components"));
        }
        if components.len() != weights.len() {
            return Err(Error::LengthMismatch {
                what: "mixture components and weights",
                left: components.len(),
                right: weights.len(),
            });
        }
        if weights
            .iter()
            .any(|w| !w.is_finite() || *w < 0.0)
        {
            return Err(Error::param(
                "mixture weights must be finite and nonnegative",
            ));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::param(format!(
                "mixture weights sum to {total}, not 1"
            )));
        }
        for c in &components {
            c.validate()?;
        }
        Ok(Self {
            components,
            weights,
        })
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda <= 1.0 {
        Ok(())
    } else {
        Err(Error::param(format!(
            "lambda must lie in (0, 1], got {lambda}"
        )))
    }
}

/// Per-cluster weights `w_i / (4(1+λ))`, `w_i = λ` for reweighted clusters.
fn reweighted_weights(lambda: f64, reweighted: impl Fn(u32) -> bool) -> Vec<f64> {
    (1..=8u32)
        .map(|i| if reweighted(i) { lambda } else { 1.0 } / (4.0 * (1.0 + lambda)))
        .collect()
}

/// Eight Gaussians of covariance `0.1·I` centered at angles `2πi/8` on the
/// unit circle; odd clusters carry weight proportional to λ.
pub fn make_mog8_spec(lambda: f64) -> Result<MixtureSpec> {
    check_lambda(lambda)?;
    let components = (1..=8)
        .map(|i| {
            let theta = 2.0 * PI * i as f64 / 8.0;
            Component::Gaussian {
                center: [theta.cos(), theta.sin()],
                variance: 0.1,
            }
        })
        .collect();
    MixtureSpec::new(components, reweighted_weights(lambda, |i| i % 2 == 1))
}

/// Corners `(xmin, ymin)` of the eight occupied 0.25-squares of the 4×4 board.
const CKB8_CORNERS: [(f64, f64); 8] = [
    (0.0, 0.0),
    (0.0, 0.5),
    (0.25, 0.25),
    (0.25, 0.75),
    (0.5, 0.0),
    (0.5, 0.5),
    (0.75, 0.25),
    (0.75, 0.75),
];

const CKB8_REWEIGHTED: [u32; 4] = [1, 4, 6, 7];

/// Uniform distribution on eight squares of a 4×4 checkerboard over the
/// unit square; squares 1, 4, 6, 7 carry weight proportional to λ.
pub fn make_ckb8_spec(lambda: f64) -> Result<MixtureSpec> {
    check_lambda(lambda)?;
    let components = CKB8_CORNERS
        .iter()
        .map(|&(x, y)| Component::UniformRect {
            xmin: x,
            xmax: x + 0.25,
            ymin: y,
            ymax: y + 0.25,
        })
        .collect();
    MixtureSpec::new(
        components,
        reweighted_weights(lambda, |i| CKB8_REWEIGHTED.contains(&i)),
    )
}

/// Ancestral sampling: draw a component, then a point from it. Cluster ids
/// are 1-based component indices.
pub fn sample_mixture<R: Rng + ?Sized>(
    spec: &MixtureSpec,
    n: usize,
    rng: &mut R,
) -> (Vec<Point>, Vec<u32>) {
    let picker = WeightedIndex::new(&spec.weights).expect("validated mixture weights");
    let mut points = Vec::with_capacity(n);
    let mut ids = Vec::with_capacity(n);
    for _ in 0..n {
        let c = picker.sample(rng);
        points.push(spec.components[c].sample(rng));
        ids.push(c as u32 + 1);
    }
    (points, ids)
}

/// `log p(x)`; `-∞` where the mixture has no mass.
pub fn mixture_log_density(spec: &MixtureSpec, x: &Point) -> f64 {
    let terms: Vec<f64> = spec
        .components
        .iter()
        .zip(&spec.weights)
        .map(|(c, w)| w.ln() + c.log_density(x))
        .collect();
    log_sum_exp(&terms)
}

/// How the deletion set is drawn from the reweighted clusters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeletionRule {
    /// Each point of a reweighted cluster is deleted independently with
    /// probability `1 - λ`.
    #[default]
    Bernoulli,
    /// Exactly `round((1 - λ)·M)` of the `M` reweighted-cluster points are
    /// deleted, chosen uniformly without replacement.
    ExactFraction,
}

/// The training set `X` with cluster provenance and the deletion mask for `X'`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    points: Vec<Point>,
    cluster_ids: Vec<u32>,
    deleted: Vec<bool>,
}

impl TrainingSet {
    pub fn new(points: Vec<Point>, cluster_ids: Vec<u32>, deleted: Vec<bool>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyInput("training points"));
        }
        if points.len() != cluster_ids.len() {
            return Err(Error::LengthMismatch {
                what: "points and cluster ids",
                left: points.len(),
                right: cluster_ids.len(),
            });
        }
        if points.len() != deleted.len() {
            return Err(Error::LengthMismatch {
                what: "points and deletion mask",
                left: points.len(),
                right: deleted.len(),
            });
        }
        if deleted.iter().all(|&d| d) {
            return Err(Error::DeletesEverything(points.len()));
        }
        Ok(Self {
            points,
            cluster_ids,
            deleted,
        })
    }

    /// Convenience constructor for hand-built sets: `deleted` first, then `kept`.
    /// Cluster ids are all set to 0.
    pub fn from_split(deleted: &[Point], kept: &[Point]) -> Result<Self> {
        let points: Vec<Point> = deleted.iter().chain(kept).copied().collect();
        let mask = (0..points.len()).map(|i| i < deleted.len()).collect();
        let ids = vec![0; points.len()];
        Self::new(points, ids, mask)
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn cluster_ids(&self) -> &[u32] {
        &self.cluster_ids
    }

    pub fn deleted_mask(&self) -> &[bool] {
        &self.deleted
    }

    /// `N`.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `N'`.
    pub fn n_deleted(&self) -> usize {
        self.deleted.iter().filter(|&&d| d).count()
    }

    /// `X \ X'`, in original order.
    pub fn kept_points(&self) -> Vec<Point> {
        self.select(false)
    }

    /// `X'`, in original order.
    pub fn deleted_points(&self) -> Vec<Point> {
        self.select(true)
    }

    fn select(&self, deleted: bool) -> Vec<Point> {
        self.points
            .iter()
            .zip(&self.deleted)
            .filter(|(_, &d)| d == deleted)
            .map(|(p, _)| *p)
            .collect()
    }

    /// Writes `x,y,cluster_id,deleted` rows with a header.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "y", "cluster_id", "deleted"])?;
        for ((p, id), d) in self.points.iter().zip(&self.cluster_ids).zip(&self.deleted) {
            w.write_record([
                p[0].to_string(),
                p[1].to_string(),
                id.to_string(),
                u8::from(*d).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn build_deletion_set<R: Rng + ?Sized>(
    points: Vec<Point>,
    cluster_ids: Vec<u32>,
    lambda: f64,
    reweighted_clusters: &BTreeSet<u32>,
    rng: &mut R,
) -> Result<TrainingSet> {
    build_deletion_set_with_rule(
        points,
        cluster_ids,
        lambda,
        reweighted_clusters,
        DeletionRule::Bernoulli,
        rng,
    )
}

/// Marks points of `reweighted_clusters` for deletion; points of other
/// clusters are never deleted.
pub fn build_deletion_set_with_rule<R: Rng + ?Sized>(
    points: Vec<Point>,
    cluster_ids: Vec<u32>,
    lambda: f64,
    reweighted_clusters: &BTreeSet<u32>,
    rule: DeletionRule,
    rng: &mut R,
) -> Result<TrainingSet> {
    check_lambda(lambda)?;
    if points.len() != cluster_ids.len() {
        return Err(Error::LengthMismatch {
            what: "points and cluster ids",
            left: points.len(),
            right: cluster_ids.len(),
        });
    }
    let p_delete = 1.0 - lambda;
    let mut deleted = vec![false; points.len()];
    match rule {
        DeletionRule::Bernoulli => {
            for (d, id) in deleted.iter_mut().zip(&cluster_ids) {
                if reweighted_clusters.contains(id) {
                    *d = rng.random::<f64>() < p_delete;
                }
            }
        }
        DeletionRule::ExactFraction => {
            let eligible: Vec<usize> = cluster_ids
                .iter()
                .enumerate()
                .filter(|(_, id)| reweighted_clusters.contains(id))
                .map(|(i, _)| i)
                .collect();
            let count = (p_delete * eligible.len() as f64).round() as usize;
            for j in rand::seq::index::sample(rng, eligible.len(), count) {
                deleted[eligible[j]] = true;
            }
        }
    }
    TrainingSet::new(points, cluster_ids, deleted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    #[test]
    fn mog8_lambda_one_is_uniform() {
        let spec = make_mog8_spec(1.0).unwrap();
        assert_eq!(spec.components().len(), 8);
        for (i, (c, w)) in spec.components().iter().zip(spec.weights()).enumerate() {
            assert!((w - 0.125).abs() < 1e-15);
            let theta = 2.0 * PI * (i + 1) as f64 / 8.0;
            match c {
                Component::Gaussian { center, variance } => {
                    assert!((center[0] - theta.cos()).abs() < 1e-15);
                    assert!((center[1] - theta.sin()).abs() < 1e-15);
                    assert_eq!(*variance, 0.1);
                    assert!((center[0].hypot(center[1]) - 1.0).abs() < 1e-15);
                }
                _ => panic!("expected gaussian"),
            }
        }
    }

    #[test]
    fn mog8_reweighting() {
        let spec = make_mog8_spec(0.8).unwrap();
        for (i, w) in spec.weights().iter().enumerate() {
            let expected = if (i + 1) % 2 == 1 {
                0.8 / 7.2
            } else {
                1.0 / 7.2
            };
            assert!((w - expected).abs() < 1e-15, "cluster {}", i + 1);
        }
        assert!((spec.weights()[0] - 0.11111).abs() < 1e-5);
        assert!((spec.weights()[1] - 0.13889).abs() < 1e-5);

        let spec = make_mog8_spec(0.5).unwrap();
        let w = spec.weights();
        assert!((w[0] / w[1] - 0.5).abs() < 1e-15);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lambda_out_of_range_is_rejected() {
        for bad in [0.0, -0.1, 1.0001, f64::NAN] {
            assert!(make_mog8_spec(bad).is_err());
            assert!(make_ckb8_spec(bad).is_err());
        }
    }

    #[test]
    fn ckb8_squares_and_weights() {
        let spec = make_ckb8_spec(1.0).unwrap();
        assert_eq!(
            spec.components()[0],
            Component::UniformRect {
                xmin: 0.0,
                xmax: 0.25,
                ymin: 0.0,
                ymax: 0.25
            }
        );
        assert_eq!(
            spec.components()[7],
            Component::UniformRect {
                xmin: 0.75,
                xmax: 1.0,
                ymin: 0.75,
                ymax: 1.0
            }
        );
        assert!((mixture_log_density(&spec, &[0.1, 0.1]) - 2f64.ln()).abs() < 1e-12);
        assert_eq!(mixture_log_density(&spec, &[0.3, 0.1]), f64::NEG_INFINITY);

        let spec = make_ckb8_spec(0.8).unwrap();
        for (i, w) in spec.weights().iter().enumerate() {
            let expected = if [1, 4, 6, 7].contains(&(i + 1)) {
                0.8 / 7.2
            } else {
                1.0 / 7.2
            };
            assert!((w - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn mog8_density_at_origin() {
        let spec = make_mog8_spec(1.0).unwrap();
        let expected = (1.0 / (2.0 * PI * 0.1)).ln() - 1.0 / 0.2;
        assert!((mixture_log_density(&spec, &[0.0, 0.0]) - expected).abs() < 1e-12);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let g = Component::Gaussian {
            center: [0.0, 0.0],
            variance: 1.0,
        };
        assert!(MixtureSpec::new(vec![g], vec![0.9]).is_err());
        assert!(MixtureSpec::new(vec![g, g], vec![1.0]).is_err());
        let bad = Component::Gaussian {
            center: [0.0, 0.0],
            variance: 0.0,
        };
        assert!(MixtureSpec::new(vec![bad], vec![1.0]).is_err());
        let rect = Component::UniformRect {
            xmin: 1.0,
            xmax: 1.0,
            ymin: 0.0,
            ymax: 1.0,
        };
        assert!(MixtureSpec::new(vec![rect], vec![1.0]).is_err());
    }

    fn integrate(spec: &MixtureSpec, lo: f64, hi: f64, steps: usize) -> f64 {
        let h = (hi - lo) / steps as f64;
        let mut total = 0.0;
        for i in 0..steps {
            for j in 0..steps {
                let x = [lo + (i as f64 + 0.5) * h, lo + (j as f64 + 0.5) * h];
                total += mixture_log_density(spec, &x).exp();
            }
        }
        total * h * h
    }

    #[test]
    fn densities_integrate_to_one() {
        for lambda in [1.0, 0.6] {
            // centers lie within the unit circle; 6 standard deviations past it
            let reach = 1.0 + 6.0 * 0.1f64.sqrt();
            let mog = make_mog8_spec(lambda).unwrap();
            assert!((integrate(&mog, -reach, reach, 600) - 1.0).abs() < 1e-3);
            let ckb = make_ckb8_spec(lambda).unwrap();
            assert!((integrate(&ckb, 0.0, 1.0, 400) - 1.0).abs() < 1e-3);
        }
    }

    #[test]
    fn sampling_basics() {
        let spec = make_mog8_spec(1.0).unwrap();
        let (p, ids) = sample_mixture(&spec, 0, &mut stream_rng(1, &[]));
        assert!(p.is_empty() && ids.is_empty());

        let a = sample_mixture(&spec, 50, &mut stream_rng(1, &[]));
        let b = sample_mixture(&spec, 50, &mut stream_rng(1, &[]));
        assert_eq!(a, b);
        assert!(a.1.iter().all(|id| (1..=8).contains(id)));

        // CKB points land in the square named by their id
        let ckb = make_ckb8_spec(0.7).unwrap();
        let (pts, ids) = sample_mixture(&ckb, 500, &mut stream_rng(2, &[]));
        for (p, id) in pts.iter().zip(&ids) {
            let c = &ckb.components()[*id as usize - 1];
            assert!(c.log_density(p).is_finite());
        }
    }

    #[test]
    fn cluster_frequencies_match_weights() {
        let spec = make_mog8_spec(1.0).unwrap();
        let n = 100_000;
        let (_, ids) = sample_mixture(&spec, n, &mut stream_rng(11, &[]));
        let tol = 3.0 * (0.125f64 * 0.875 / n as f64).sqrt();
        for c in 1..=8 {
            let freq = ids.iter().filter(|&&i| i == c).count() as f64 / n as f64;
            assert!((freq - 0.125).abs() < tol, "cluster {c}: {freq}");
        }
    }

    #[test]
    fn deletion_respects_clusters() {
        let spec = make_mog8_spec(1.0).unwrap();
        let mut rng = stream_rng(3, &[]);
        let (pts, ids) = sample_mixture(&spec, 400, &mut rng);
        let rw = Dataset::Mog8.default_reweighted();

        let full = build_deletion_set(pts.clone(), ids.clone(), 1.0, &rw, &mut rng).unwrap();
        assert_eq!(full.n_deleted(), 0);

        let set = build_deletion_set(pts.clone(), ids.clone(), 0.3, &rw, &mut rng).unwrap();
        for (id, d) in set.cluster_ids().iter().zip(set.deleted_mask()) {
            if *d {
                assert!(rw.contains(id));
            }
        }
        assert_eq!(set.kept_points().len() + set.deleted_points().len(), 400);

        let exact = build_deletion_set_with_rule(
            pts,
            ids,
            0.75,
            &rw,
            DeletionRule::ExactFraction,
            &mut rng,
        )
        .unwrap();
        let eligible = exact
            .cluster_ids()
            .iter()
            .filter(|id| rw.contains(id))
            .count();
        assert_eq!(exact.n_deleted(), (0.25 * eligible as f64).round() as usize);
    }

    #[test]
    fn deleting_everything_is_an_error() {
        let pts = vec![[0.0, 0.0], [1.0, 1.0]];
        let ids = vec![1, 3];
        let all: BTreeSet<u32> = [1, 3].into_iter().collect();
        let r = build_deletion_set_with_rule(
            pts,
            ids,
            1e-300,
            &all,
            DeletionRule::ExactFraction,
            &mut stream_rng(0, &[]),
        );
        assert!(matches!(r, Err(Error::DeletesEverything(2))));
        assert!(TrainingSet::new(vec![[0.0, 0.0]], vec![1], vec![true]).is_err());
    }

    #[test]
    fn expected_deletion_count() {
        // MoG-8, λ = 0.8, N = 400: N' ~ Binomial(400, 0.5 · 0.2)
        let spec = make_mog8_spec(1.0).unwrap();
        let rw = Dataset::Mog8.default_reweighted();
        let seeds = 100;
        let mut total = 0usize;
        for s in 0..seeds {
            let mut rng = stream_rng(s, &[5]);
            let (pts, ids) = sample_mixture(&spec, 400, &mut rng);
            total += build_deletion_set(pts, ids, 0.8, &rw, &mut rng)
                .unwrap()
                .n_deleted();
        }
        let mean = total as f64 / seeds as f64;
        let se = (400.0 * 0.1 * 0.9 / seeds as f64).sqrt();
        assert!((mean - 40.0).abs() < 3.0 * se, "mean N' = {mean}");
    }

    #[test]
    fn csv_dump_format() {
        let set = TrainingSet::new(
            vec![[0.5, -1.25], [2.0, 3.0]],
            vec![3, 4],
            vec![true, false],
        )
        .unwrap();
        let mut buf = Vec::new();
        set.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "x,y,cluster_id,deleted\n0.5,-1.25,3,1\n2,3,4,0\n"
        );
    }
}
