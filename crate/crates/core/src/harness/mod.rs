//! The repeated-experiment protocol.
//!
//! An experiment draws `X ~ p*`, marks the deletion set, and fits the
//! pre-trained KDE `p̂` (on `X`) and the re-trained KDE `p̂'` (on `X \ X'`)
//! once. Each of the `R` repeats then draws four independent sets of size
//! `m`: `Ŷ ~ p̂`, `Y_D ~ ρ̂_ε·p̂` (rejection sampling), `Y_H0 ~ p̂` and
//! `Y_H1 ~ p̂'`, and records LR and ASC statistics under both the exact
//! ratio `ρ̂` and the estimator `ρ̂_ε`.
//!
//! Every set in every repeat has its own RNG stream derived from
//! `(master_seed, set, repeat)`, so a series does not depend on which
//! other series were computed, on execution order, or on the thread count.

mod config;
mod output;

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::data::{build_deletion_set_with_rule, sample_mixture, TrainingSet};
use crate::dre::{make_estimator, EstimatorKind, ExactRatio, RatioEstimator};
use crate::kde::{fit_pair, KdeModel, PointSampler};
use crate::rng::{derive_seed, stream_rng, Stream};
use crate::sampling::{default_max_attempts, rejection_sample};
use crate::stats::{
    ks_two_sample, lr_statistic, mmd_closed_form_kde_with_bandwidth, mmd_u_squared, ClampedRatios,
    StatisticDistribution,
};
use crate::{Error, Point, Result};

pub use config::{default_kbc_grid, EstimatorEntry, ExperimentConfig, KnnVotes, DEFAULT_KNN_GRID};
pub use output::{write_ks_table, write_outputs, EstimatorDiagnostics, RunSummary};

/// The training set and the two KDE models of one experiment.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub training: TrainingSet,
    pub pretrained: KdeModel,
    pub retrained: KdeModel,
    pub exact: ExactRatio,
}

impl Experiment {
    /// Draws `X` and `X'` from the streams selected by `path` and fits the models.
    fn build(config: &ExperimentConfig, path: &[u64]) -> Result<Self> {
        let p_star = config.dataset.spec(1.0)?;
        let seed_of = |s: Stream| {
            let mut full = vec![s as u64];
            full.extend_from_slice(path);
            full
        };
        let mut rng = stream_rng(config.master_seed, &seed_of(Stream::Training));
        let (points, ids) = sample_mixture(&p_star, config.n, &mut rng);
        let mut rng = stream_rng(config.master_seed, &seed_of(Stream::Deletion));
        let training = build_deletion_set_with_rule(
            points,
            ids,
            config.lambda,
            &config.reweighted(),
            config.deletion_rule,
            &mut rng,
        )?;
        let (pretrained, retrained) = fit_pair(&training, config.sigma_a)?;
        let exact = ExactRatio::new(&training, config.sigma_a)?;
        Ok(Self {
            training,
            pretrained,
            retrained,
            exact,
        })
    }

    pub fn prepare(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        Self::build(config, &[])
    }

    /// The experiment used by repeat `r`: the shared one, or a fresh draw
    /// when `redraw_x` is set.
    fn for_repeat<'a>(&'a self, config: &ExperimentConfig, r: usize) -> Result<ExperimentRef<'a>> {
        if config.redraw_x {
            Ok(ExperimentRef::Owned(Box::new(Self::build(
                config,
                &[r as u64],
            )?)))
        } else {
            Ok(ExperimentRef::Shared(self))
        }
    }
}

enum ExperimentRef<'a> {
    Shared(&'a Experiment),
    Owned(Box<Experiment>),
}

impl std::ops::Deref for ExperimentRef<'_> {
    type Target = Experiment;

    fn deref(&self) -> &Experiment {
        match self {
            ExperimentRef::Shared(e) => e,
            ExperimentRef::Owned(e) => e,
        }
    }
}

/// The four sample sets of a repeat.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum SampleSet {
    /// `Ŷ ~ p̂`, the reference half of ASC.
    YHat,
    /// `Y_D ~ ρ̂_ε · p̂`.
    YApprox,
    /// `Y_H0 ~ p̂`.
    YNull,
    /// `Y_H1 ~ p̂'`.
    YAlt,
}

impl SampleSet {
    pub const ALL: [SampleSet; 4] = [
        SampleSet::YHat,
        SampleSet::YApprox,
        SampleSet::YNull,
        SampleSet::YAlt,
    ];

    pub fn label(self) -> &'static str {
        match self {
            SampleSet::YHat => "Y_hat",
            SampleSet::YApprox => "Y_D",
            SampleSet::YNull => "Y_H0",
            SampleSet::YAlt => "Y_H1",
        }
    }

    fn stream(self) -> Stream {
        match self {
            SampleSet::YHat => Stream::YHat,
            SampleSet::YApprox => Stream::YApprox,
            SampleSet::YNull => Stream::YNull,
            SampleSet::YAlt => Stream::YAlt,
        }
    }
}

/// Which ratio a statistic is computed with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RatioKind {
    /// The exact `ρ̂ = p̂'/p̂`.
    Exact,
    /// The estimator under study, `ρ̂_ε`.
    Estimated,
}

impl RatioKind {
    pub fn label(self) -> &'static str {
        match self {
            RatioKind::Exact => "rho",
            RatioKind::Estimated => "rho_e",
        }
    }
}

/// `LR/<set>/<ratio>`.
pub fn lr_name(set: SampleSet, ratio: RatioKind) -> String {
    format!("LR/{}/{}", set.label(), ratio.label())
}

/// `ASC_<phi>/<set>/<ratio>`; the reference set `Ŷ` is implicit.
pub fn asc_name(phi: crate::stats::PhiFamily, set: SampleSet, ratio: RatioKind) -> String {
    format!("ASC_{}/{}/{}", phi.name(), set.label(), ratio.label())
}

/// Statistic distributions of one estimator plus run diagnostics.
#[derive(Debug, Clone, Default)]
pub struct RepeatsOutput {
    pub series: BTreeMap<String, StatisticDistribution>,
    /// Ratio values that hit the `[ε, B]` clamp, summed over repeats.
    pub clamped: usize,
    pub attempts: u64,
    pub accepted: u64,
}

impl RepeatsOutput {
    pub fn get(&self, name: &str) -> Result<&StatisticDistribution> {
        self.series
            .get(name)
            .ok_or_else(|| Error::param(format!("no statistic series named {name}")))
    }

    pub fn acceptance_rate(&self) -> Option<f64> {
        (self.attempts > 0).then(|| self.accepted as f64 / self.attempts as f64)
    }
}

struct RepeatValues {
    stats: Vec<(String, f64)>,
    clamped: usize,
    attempts: u64,
    accepted: u64,
}

fn draw_set(
    exp: &Experiment,
    estimator: &dyn RatioEstimator,
    set: SampleSet,
    m: usize,
    master_seed: u64,
    r: usize,
) -> Result<(Vec<Point>, u64)> {
    let mut rng = stream_rng(master_seed, &[set.stream() as u64, r as u64]);
    Ok(match set {
        SampleSet::YHat | SampleSet::YNull => (exp.pretrained.sample(m, &mut rng), 0),
        SampleSet::YAlt => (exp.retrained.sample(m, &mut rng), 0),
        SampleSet::YApprox => {
            let max = default_max_attempts(m, estimator.bound());
            let report = rejection_sample(&exp.pretrained, estimator, m, &mut rng, max)?;
            (report.samples, report.attempts)
        }
    })
}

fn one_repeat(
    config: &ExperimentConfig,
    shared: &Experiment,
    shared_estimator: Option<&dyn RatioEstimator>,
    kind: &EstimatorKind,
    sets: &[SampleSet],
    r: usize,
) -> Result<RepeatValues> {
    let exp = shared.for_repeat(config, r)?;
    let owned;
    let estimator: &dyn RatioEstimator = match shared_estimator {
        Some(e) => e,
        None => {
            owned = make_estimator(kind, &exp.training)?;
            owned.as_ref()
        }
    };

    let mut out = RepeatValues {
        stats: Vec::new(),
        clamped: 0,
        attempts: 0,
        accepted: 0,
    };
    let mut ratios = BTreeMap::new();
    for &set in sets {
        let (ys, attempts) = draw_set(&exp, estimator, set, config.m, config.master_seed, r)?;
        if set == SampleSet::YApprox {
            out.attempts += attempts;
            out.accepted += ys.len() as u64;
        }
        let exact = ClampedRatios::evaluate(&ys, &exp.exact);
        let est = ClampedRatios::evaluate(&ys, estimator);
        out.clamped += exact.clamped + est.clamped;
        ratios.insert(set, [exact, est]);
    }

    for (&set, pair) in &ratios {
        for (ratio, values) in [RatioKind::Exact, RatioKind::Estimated]
            .into_iter()
            .zip(pair)
        {
            out.stats.push((lr_name(set, ratio), values.lr()));
        }
    }
    if let Some(hat) = ratios.get(&SampleSet::YHat) {
        for (&set, pair) in ratios.iter().filter(|(s, _)| **s != SampleSet::YHat) {
            for (i, ratio) in [RatioKind::Exact, RatioKind::Estimated]
                .into_iter()
                .enumerate()
            {
                for &phi in &config.phi_families {
                    let v = hat[i].psi_mean(phi) + pair[i].psi_mean(phi);
                    out.stats.push((asc_name(phi, set, ratio), v));
                }
            }
        }
    }
    Ok(out)
}

/// Runs `R` repeats computing statistics only for `sets`. ASC series need
/// `SampleSet::YHat` among them.
pub fn run_repeats_for(
    config: &ExperimentConfig,
    experiment: &Experiment,
    kind: &EstimatorKind,
    sets: &[SampleSet],
) -> Result<RepeatsOutput> {
    kind.validate()?;
    let shared = if config.redraw_x {
        None
    } else {
        Some(make_estimator(kind, &experiment.training)?)
    };
    let per_repeat: Vec<RepeatValues> = (0..config.repeats)
        .into_par_iter()
        .map(|r| one_repeat(config, experiment, shared.as_deref(), kind, sets, r))
        .collect::<Result<_>>()?;

    let mut columns: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut out = RepeatsOutput::default();
    for rv in per_repeat {
        out.clamped += rv.clamped;
        out.attempts += rv.attempts;
        out.accepted += rv.accepted;
        for (name, v) in rv.stats {
            columns.entry(name).or_default().push(v);
        }
    }
    for (name, values) in columns {
        out.series
            .insert(name.clone(), StatisticDistribution::new(name, values)?);
    }
    Ok(out)
}

/// All LR series `{Ŷ, Y_D, Y_H0, Y_H1} × {ρ̂, ρ̂_ε}` plus ASC series over
/// `{Y_D, Y_H0, Y_H1} × {ρ̂, ρ̂_ε}` for every configured φ.
pub fn run_repeats(
    config: &ExperimentConfig,
    experiment: &Experiment,
    kind: &EstimatorKind,
) -> Result<RepeatsOutput> {
    run_repeats_for(config, experiment, kind, &SampleSet::ALL)
}

/// The three questions of the synthetic experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Question {
    /// Does `ρ̂_ε` approximate `ρ̂`? `stat(Y_H0, ρ̂)` vs `stat(Y_H0, ρ̂_ε)`.
    Q1,
    /// Is `ρ̂_ε·p̂` indistinguishable from `p̂'`? `stat(Y_H1, ρ̂)` vs `stat(Y_D, ρ̂)`.
    Q2,
    /// Does `ρ̂_ε` separate `p̂` from `p̂'`? `stat(Y_H0, ρ̂_ε)` vs `stat(Y_H1, ρ̂_ε)`.
    Q3,
}

impl Question {
    pub fn label(self) -> &'static str {
        match self {
            Question::Q1 => "q1",
            Question::Q2 => "q2",
            Question::Q3 => "q3",
        }
    }

    pub fn sets(self) -> &'static [SampleSet] {
        match self {
            Question::Q1 => &[SampleSet::YHat, SampleSet::YNull],
            Question::Q2 => &[SampleSet::YHat, SampleSet::YApprox, SampleSet::YAlt],
            Question::Q3 => &[SampleSet::YHat, SampleSet::YNull, SampleSet::YAlt],
        }
    }

    /// The two (set, ratio) sides being compared.
    pub fn sides(self) -> [(SampleSet, RatioKind); 2] {
        match self {
            Question::Q1 => [
                (SampleSet::YNull, RatioKind::Exact),
                (SampleSet::YNull, RatioKind::Estimated),
            ],
            Question::Q2 => [
                (SampleSet::YAlt, RatioKind::Exact),
                (SampleSet::YApprox, RatioKind::Exact),
            ],
            Question::Q3 => [
                (SampleSet::YNull, RatioKind::Estimated),
                (SampleSet::YAlt, RatioKind::Estimated),
            ],
        }
    }
}

/// One line of `ks_table.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KsRow {
    pub experiment: String,
    pub estimator: String,
    pub statistic: String,
    pub ks: f64,
    pub critical_05: f64,
}

#[derive(Debug, Clone)]
pub struct EstimatorRun {
    pub kind: EstimatorKind,
    pub output: RepeatsOutput,
}

#[derive(Debug, Clone)]
pub struct QuestionReport {
    pub question: Question,
    pub rows: Vec<KsRow>,
    pub runs: Vec<EstimatorRun>,
}

impl QuestionReport {
    /// The KS row of `statistic` (`"LR"` or `"ASC_<phi>"`) for `kind`.
    pub fn row(&self, kind: &EstimatorKind, statistic: &str) -> Option<&KsRow> {
        let label = kind.to_string();
        self.rows
            .iter()
            .find(|r| r.estimator == label && r.statistic == statistic)
    }
}

/// KS rows for `question` from an estimator's statistic distributions.
pub fn ks_rows(
    question: Question,
    config: &ExperimentConfig,
    kind: &EstimatorKind,
    output: &RepeatsOutput,
) -> Result<Vec<KsRow>> {
    let [a, b] = question.sides();
    let mut pairs = vec![("LR".to_string(), lr_name(a.0, a.1), lr_name(b.0, b.1))];
    for &phi in &config.phi_families {
        pairs.push((
            format!("ASC_{}", phi.name()),
            asc_name(phi, a.0, a.1),
            asc_name(phi, b.0, b.1),
        ));
    }
    pairs
        .into_iter()
        .map(|(statistic, left, right)| {
            let ks = ks_two_sample(output.get(&left)?, output.get(&right)?)?;
            Ok(KsRow {
                experiment: question.label().to_string(),
                estimator: kind.to_string(),
                statistic,
                ks: ks.statistic,
                critical_05: ks.critical_at(0.05),
            })
        })
        .collect()
}

/// Runs `question` for every estimator of the grid.
pub fn run_question(config: &ExperimentConfig, question: Question) -> Result<QuestionReport> {
    let experiment = Experiment::prepare(config)?;
    run_question_on(config, &experiment, question)
}

pub fn run_question_on(
    config: &ExperimentConfig,
    experiment: &Experiment,
    question: Question,
) -> Result<QuestionReport> {
    let mut report = QuestionReport {
        question,
        rows: Vec::new(),
        runs: Vec::new(),
    };
    for kind in config.estimators() {
        let output = run_repeats_for(config, experiment, &kind, question.sets())?;
        report
            .rows
            .extend(ks_rows(question, config, &kind, &output)?);
        report.runs.push(EstimatorRun { kind, output });
    }
    Ok(report)
}

pub fn run_q1(config: &ExperimentConfig) -> Result<QuestionReport> {
    run_question(config, Question::Q1)
}

pub fn run_q2(config: &ExperimentConfig) -> Result<QuestionReport> {
    run_question(config, Question::Q2)
}

pub fn run_q3(config: &ExperimentConfig) -> Result<QuestionReport> {
    run_question(config, Question::Q3)
}

/// Threshold calibration for the deletion test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NullCalibration {
    /// Simulated null statistics; at least 20.
    pub n_cal: usize,
    pub alpha: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Hypothesis {
    /// The model is the pre-trained `p̂`: nothing was deleted.
    H0,
    /// The model is the re-trained `p̂'`.
    H1,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeletionDecision {
    pub decision: Hypothesis,
    pub statistic: f64,
    pub threshold: f64,
}

/// Tests whether `ys` came from `p̂` (H0) or from the model with `X'`
/// deleted (H1).
///
/// The statistic is `LR(Y, ρ̂_ε)`. Its null distribution is simulated with
/// `n_cal` fresh sets of `|Y|` samples from `p̂`; H1 is declared when the
/// observed value exceeds the order statistic of rank
/// `⌈(1-α)(n_cal+1)⌉`. By exchangeability the false-rejection rate is then
/// at most α, and exactly α when `(1-α)(n_cal+1)` is an integer.
pub fn deletion_test<S, E, R>(
    ys: &[Point],
    estimator: &E,
    pretrained: &S,
    calibration: NullCalibration,
    rng: &mut R,
) -> Result<DeletionDecision>
where
    S: PointSampler + ?Sized,
    E: RatioEstimator + ?Sized,
    R: Rng + ?Sized,
{
    let NullCalibration { n_cal, alpha } = calibration;
    if n_cal < 20 {
        return Err(Error::Calibration(format!(
            "n_cal must be at least 20, got {n_cal}"
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Calibration(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    let statistic = lr_statistic(ys, estimator)?;
    let mut null: Vec<f64> = (0..n_cal)
        .map(|_| lr_statistic(&pretrained.draw_n(ys.len(), rng), estimator))
        .collect::<Result<_>>()?;
    null.sort_unstable_by(f64::total_cmp);
    let rank = ((1.0 - alpha) * (n_cal + 1) as f64 - 1e-9).ceil() as usize;
    let threshold = if rank > n_cal {
        f64::INFINITY
    } else {
        null[rank.max(1) - 1]
    };
    let decision = if statistic > threshold {
        Hypothesis::H1
    } else {
        Hypothesis::H0
    };
    Ok(DeletionDecision {
        decision,
        statistic,
        threshold,
    })
}

/// Rejection rates of the deletion test for one estimator.
#[derive(Debug, Clone, Serialize)]
pub struct DeletionTestSummary {
    pub estimator: String,
    pub trials: usize,
    /// Fraction of H0 trials (`Y ~ p̂`) declared H1.
    pub false_rejection_rate: f64,
    /// Fraction of H1 trials (`Y ~ p̂'`) declared H1.
    pub power: f64,
    #[serde(skip)]
    pub null_statistics: Vec<f64>,
    #[serde(skip)]
    pub alt_statistics: Vec<f64>,
}

/// Runs `trials` deletion tests with samples from `p̂` and as many with
/// samples from `p̂'`, each with its own calibration stream.
pub fn run_deletion_trials(
    config: &ExperimentConfig,
    experiment: &Experiment,
    kind: &EstimatorKind,
    trials: usize,
) -> Result<DeletionTestSummary> {
    let estimator = make_estimator(kind, &experiment.training)?;
    let calibration = NullCalibration {
        n_cal: config.n_cal,
        alpha: config.alpha,
    };
    let run = |truth: Hypothesis| -> Result<Vec<DeletionDecision>> {
        let h = truth as u64;
        (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = stream_rng(
                    config.master_seed,
                    &[Stream::TestSample as u64, h, t as u64],
                );
                let ys = match truth {
                    Hypothesis::H0 => experiment.pretrained.sample(config.m, &mut rng),
                    Hypothesis::H1 => experiment.retrained.sample(config.m, &mut rng),
                };
                let mut cal = stream_rng(
                    config.master_seed,
                    &[Stream::Calibration as u64, h, t as u64],
                );
                deletion_test(
                    &ys,
                    &estimator,
                    &experiment.pretrained,
                    calibration,
                    &mut cal,
                )
            })
            .collect()
    };
    let null = run(Hypothesis::H0)?;
    let alt = run(Hypothesis::H1)?;
    let rate = |ds: &[DeletionDecision]| {
        ds.iter().filter(|d| d.decision == Hypothesis::H1).count() as f64 / ds.len().max(1) as f64
    };
    Ok(DeletionTestSummary {
        estimator: kind.to_string(),
        trials,
        false_rejection_rate: rate(&null),
        power: rate(&alt),
        null_statistics: null.iter().map(|d| d.statistic).collect(),
        alt_statistics: alt.iter().map(|d| d.statistic).collect(),
    })
}

/// Unbiased MMD² estimates under both hypotheses plus the closed form.
#[derive(Debug, Clone, Serialize)]
pub struct MmdReport {
    pub closed_form: f64,
    pub bandwidth: f64,
    #[serde(skip)]
    pub null: StatisticDistribution,
    #[serde(skip)]
    pub alt: StatisticDistribution,
}

/// For each repeat, `MMD²_u(Y, Ŷ)` with `Ŷ ~ p̂` and `Y ~ p̂` (null) or
/// `Y ~ p̂'` (alternative).
pub fn run_mmd(config: &ExperimentConfig, experiment: &Experiment) -> Result<MmdReport> {
    let h = config.mmd_bandwidth;
    let closed_form = mmd_closed_form_kde_with_bandwidth(&experiment.training, config.sigma_a, h)?;
    let pairs: Vec<(f64, f64)> = (0..config.repeats)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(config.master_seed, &[Stream::Mmd as u64, r as u64]);
            let y_hat = experiment.pretrained.sample(config.m, &mut rng);
            let y_null = experiment.pretrained.sample(config.m, &mut rng);
            let y_alt = experiment.retrained.sample(config.m, &mut rng);
            Ok((
                mmd_u_squared(&y_null, &y_hat, h)?,
                mmd_u_squared(&y_alt, &y_hat, h)?,
            ))
        })
        .collect::<Result<_>>()?;
    let (null, alt): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    Ok(MmdReport {
        closed_form,
        bandwidth: h,
        null: StatisticDistribution::new("MMD2/H0", null)?,
        alt: StatisticDistribution::new("MMD2/H1", alt)?,
    })
}

/// Seeds of the shared training draw, for the run summary.
pub fn training_seeds(config: &ExperimentConfig) -> BTreeMap<&'static str, u64> {
    BTreeMap::from([
        ("master_seed", config.master_seed),
        (
            "training",
            derive_seed(config.master_seed, &[Stream::Training as u64]),
        ),
        (
            "deletion",
            derive_seed(config.master_seed, &[Stream::Deletion as u64]),
        ),
    ])
}
