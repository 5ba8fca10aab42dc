//! Monte Carlo comparison of NB1, NB2 and the random baseline.
//!
//! Each iteration draws one full poster × judge score matrix from the
//! additive model, lets every design pick its observed cells out of that same
//! matrix, fits the random-judge model to each subset and scores the
//! estimates against the shared truth. Differences between designs are
//! therefore paired within iterations.
//!
//! Seeds: iteration `i` uses `derive_seed(seed, [i])`; inside an iteration
//! the score matrix uses label `ROLE_TRUTH` and each design uses its kind
//! label plus `ROLE_DESIGN`, so adding or reordering designs leaves the other
//! streams untouched.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::design::{is_connected, DesignConfig};
use crate::generator::{generate, GeneratorKind};
use crate::mixedmodel::{fit_random, FitResult, ScoreTable};
use crate::rng::{derive_seed, Stream};
use crate::{FitError, GenerateError};

const ROLE_TRUTH: u64 = 0x7472_7574_68;
const ROLE_DESIGN: u64 = 0x6465_7369_676e;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("invalid simulation parameters: {0}")]
    InvalidParams(String),
    #[error("design {0} not present in the report")]
    UnknownDesign(String),
    #[error("unknown metric `{0}`")]
    UnknownMetric(String),
    #[error("{kind} generation failed: {source}")]
    Generate { kind: GeneratorKind, source: GenerateError },
    #[error("{kind} fit failed: {source}")]
    Fit { kind: GeneratorKind, source: FitError },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimParams {
    pub t: usize,
    pub b: usize,
    pub k: usize,
    /// Number of awards.
    pub awards: usize,
    pub mu: f64,
    pub sd_poster: f64,
    pub sd_judge: f64,
    pub sd_error: f64,
    pub iterations: usize,
    pub seed: u64,
    pub designs: Vec<GeneratorKind>,
}

impl Default for SimParams {
    fn default() -> Self {
        Self::standard()
    }
}

impl SimParams {
    /// 200 posters, 100 judges, 5 reviews each, 30 awards, μ = 80 and
    /// standard deviations 7 / 6 / 7 for posters / judges / error.
    pub fn standard() -> Self {
        Self {
            t: 200,
            b: 100,
            k: 5,
            awards: 30,
            mu: 80.0,
            sd_poster: 7.0,
            sd_judge: 6.0,
            sd_error: 7.0,
            iterations: 1000,
            seed: 1,
            designs: GeneratorKind::ALL.to_vec(),
        }
    }

    /// The standard preset with all three standard deviations set to 5.
    pub fn appendix555() -> Self {
        Self {
            sd_poster: 5.0,
            sd_judge: 5.0,
            sd_error: 5.0,
            ..Self::standard()
        }
    }

    pub fn check(&self) -> Result<(), SimError> {
        let bad = |msg: String| Err(SimError::InvalidParams(msg));
        if [self.sd_poster, self.sd_judge, self.sd_error].iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return bad("standard deviations must be finite and non-negative".into());
        }
        if self.awards == 0 || self.awards > self.t {
            return bad(format!("awards must lie in 1..={}, got {}", self.t, self.awards));
        }
        if self.designs.is_empty() {
            return bad("no designs selected".into());
        }
        DesignConfig::new(self.t, self.k, self.b, 0).map_err(|e| SimError::InvalidParams(e.to_string()))?;
        Ok(())
    }
}

/// True poster scores and the full score matrix (`matrix[poster][judge]`).
#[derive(Debug, Clone, PartialEq)]
pub struct Truth {
    pub true_scores: Vec<f64>,
    pub matrix: Vec<Vec<f64>>,
}

/// Draws poster effects, then judge effects, then the error for every cell
/// in poster-major order.
pub fn synthesize_scores(params: &SimParams, iteration_seed: u64) -> Truth {
    let mut rng = Stream::new(derive_seed(iteration_seed, &[ROLE_TRUTH]));
    let poster: Vec<f64> = (0..params.t).map(|_| rng.normal(0.0, params.sd_poster)).collect();
    let judge: Vec<f64> = (0..params.b).map(|_| rng.normal(0.0, params.sd_judge)).collect();
    let matrix = poster
        .iter()
        .map(|p| judge.iter().map(|j| params.mu + p + j + rng.normal(0.0, params.sd_error)).collect())
        .collect();
    Truth {
        true_scores: poster.iter().map(|p| params.mu + p).collect(),
        matrix,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    WinProp,
    MedianRankDev,
    MeanScoreDev,
    MeanSe,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::WinProp, Metric::MedianRankDev, Metric::MeanScoreDev, Metric::MeanSe];

    pub fn label(self) -> &'static str {
        match self {
            Metric::WinProp => "win_prop",
            Metric::MedianRankDev => "median_rank_dev",
            Metric::MeanScoreDev => "mean_score_dev",
            Metric::MeanSe => "mean_se",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Metric {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Metric::ALL
            .into_iter()
            .find(|m| m.label() == s)
            .ok_or_else(|| SimError::UnknownMetric(s.to_string()))
    }
}

/// One design's scores in one iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignMetrics {
    pub kind: GeneratorKind,
    pub win_prop: f64,
    pub median_rank_dev: f64,
    pub mean_score_dev: f64,
    pub mean_se: f64,
    /// The design's co-review graph is not connected (fixed-judge fit impossible).
    pub disconnected: bool,
}

impl DesignMetrics {
    pub fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::WinProp => self.win_prop,
            Metric::MedianRankDev => self.median_rank_dev,
            Metric::MeanScoreDev => self.mean_score_dev,
            Metric::MeanSe => self.mean_se,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationResult {
    pub iteration: usize,
    pub designs: Vec<DesignMetrics>,
}

impl IterationResult {
    pub fn for_kind(&self, kind: GeneratorKind) -> Option<&DesignMetrics> {
        self.designs.iter().find(|d| d.kind == kind)
    }
}

/// Ranks 1..=t by descending value, ties to the lower id.
fn rank_by_value(values: &[f64]) -> Vec<usize> {
    let mut ids: Vec<usize> = (0..values.len()).collect();
    ids.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let mut rank = vec![0; values.len()];
    for (position, id) in ids.into_iter().enumerate() {
        rank[id] = position + 1;
    }
    rank
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Scores one fit against the truth. Unreviewed posters rank after every
/// reviewed one (in id order) and are estimated by the grand mean.
pub fn evaluate_fit(fit: &FitResult, true_scores: &[f64], awards: usize) -> (f64, f64, f64, f64) {
    let t = true_scores.len();
    let true_rank = rank_by_value(true_scores);
    let reviewed = fit.reviewed().count();
    let mut next_unreviewed = reviewed;
    let est_rank: Vec<usize> = fit
        .rank
        .iter()
        .map(|r| {
            r.unwrap_or_else(|| {
                next_unreviewed += 1;
                next_unreviewed
            })
        })
        .collect();
    let best: Vec<usize> = (0..t).filter(|&i| true_rank[i] <= awards).collect();
    let hits = best.iter().filter(|&&i| est_rank[i] <= awards).count();
    let mut rank_dev: Vec<f64> = best
        .iter()
        .map(|&i| (est_rank[i] as f64 - true_rank[i] as f64).abs())
        .collect();
    let score_dev = best
        .iter()
        .map(|&i| {
            let estimate = if fit.pmm[i].is_nan() { fit.grand_mean } else { fit.pmm[i] };
            (estimate - true_scores[i]).abs()
        })
        .sum::<f64>()
        / awards as f64;
    let mean_se = fit.reviewed().map(|i| fit.se[i]).sum::<f64>() / reviewed.max(1) as f64;
    (hits as f64 / awards as f64, median(&mut rank_dev), score_dev, mean_se)
}

/// One replicate: shared truth, one design per selected kind, random-judge fit.
pub fn run_iteration(params: &SimParams, iteration_seed: u64) -> Result<Vec<DesignMetrics>, SimError> {
    let truth = synthesize_scores(params, iteration_seed);
    params
        .designs
        .iter()
        .map(|&kind| {
            let seed = derive_seed(iteration_seed, &[kind.stream_label(), ROLE_DESIGN]);
            let config = DesignConfig::new(params.t, params.k, params.b, seed)
                .map_err(|e| SimError::InvalidParams(e.to_string()))?;
            let (design, _) = generate(&config, kind).map_err(|source| SimError::Generate { kind, source })?;
            let disconnected = !is_connected(&design, design.num_blocks()).unwrap_or(false)
                || design.replication().contains(&0);
            let scores = ScoreTable::from_matrix(&design, &truth.matrix);
            let fit = fit_random(&design, &scores).map_err(|source| SimError::Fit { kind, source })?;
            let (win_prop, median_rank_dev, mean_score_dev, mean_se) = evaluate_fit(&fit, &truth.true_scores, params.awards);
            Ok(DesignMetrics {
                kind,
                win_prop,
                median_rank_dev,
                mean_score_dev,
                mean_se,
                disconnected,
            })
        })
        .collect()
}

pub fn iteration_seed(master: u64, iteration: usize) -> u64 {
    derive_seed(master, &[iteration as u64])
}

/// Empirical distribution summary. Quantiles interpolate linearly between
/// order statistics (Hyndman–Fan type 7).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Distribution {
    pub n: usize,
    pub mean: f64,
    pub min: f64,
    pub q025: f64,
    pub q50: f64,
    pub q975: f64,
    pub max: f64,
}

pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

impl Distribution {
    pub fn of(values: &[f64]) -> Self {
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        Self {
            n,
            mean: if n == 0 { f64::NAN } else { sorted.iter().sum::<f64>() / n as f64 },
            min: sorted.first().copied().unwrap_or(f64::NAN),
            q025: quantile(&sorted, 0.025),
            q50: quantile(&sorted, 0.5),
            q975: quantile(&sorted, 0.975),
            max: sorted.last().copied().unwrap_or(f64::NAN),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricSummary {
    pub kind: GeneratorKind,
    pub metric: Metric,
    pub distribution: Distribution,
}

/// Paired difference `first − second` of one metric across iterations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DifferenceSummary {
    pub first: GeneratorKind,
    pub second: GeneratorKind,
    pub metric: Metric,
    pub mean: f64,
    /// 95% paired t-interval for the mean difference.
    pub ci_low: f64,
    pub ci_high: f64,
    pub distribution: Distribution,
}

impl DifferenceSummary {
    pub fn excludes_zero(&self) -> bool {
        self.ci_low > 0.0 || self.ci_high < 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimStudyReport {
    pub iterations: Vec<IterationResult>,
    /// Dropped iterations with the failure message.
    pub failures: Vec<(usize, String)>,
    pub designs: Vec<GeneratorKind>,
    pub summaries: Vec<MetricSummary>,
    /// All design pairs in selection order, first − second.
    pub differences: Vec<DifferenceSummary>,
    /// Disconnected RANDOM designs among the kept iterations.
    pub disconnected_random: usize,
}

impl SimStudyReport {
    pub fn from_iterations(
        designs: Vec<GeneratorKind>,
        iterations: Vec<IterationResult>,
        failures: Vec<(usize, String)>,
    ) -> Result<Self, SimError> {
        let mut report = Self {
            iterations,
            failures,
            designs,
            summaries: Vec::new(),
            differences: Vec::new(),
            disconnected_random: 0,
        };
        report.disconnected_random = report
            .iterations
            .iter()
            .filter_map(|it| it.for_kind(GeneratorKind::Random))
            .filter(|m| m.disconnected)
            .count();
        for &kind in &report.designs {
            for metric in Metric::ALL {
                let values = report.values(kind, metric)?;
                report.summaries.push(MetricSummary {
                    kind,
                    metric,
                    distribution: Distribution::of(&values),
                });
            }
        }
        let designs = report.designs.clone();
        for (a, &first) in designs.iter().enumerate() {
            for &second in &designs[a + 1..] {
                for metric in Metric::ALL {
                    let diff = summarize_differences(&report, first, second, metric)?;
                    report.differences.push(diff);
                }
            }
        }
        Ok(report)
    }

    /// Per-iteration values of one metric, in iteration order.
    pub fn values(&self, kind: GeneratorKind, metric: Metric) -> Result<Vec<f64>, SimError> {
        self.iterations
            .iter()
            .map(|it| {
                it.for_kind(kind)
                    .map(|m| m.get(metric))
                    .ok_or_else(|| SimError::UnknownDesign(kind.to_string()))
            })
            .collect()
    }

    pub fn summary(&self, kind: GeneratorKind, metric: Metric) -> Option<&Distribution> {
        self.summaries
            .iter()
            .find(|s| s.kind == kind && s.metric == metric)
            .map(|s| &s.distribution)
    }
}

/// Paired summary of `first − second` for one metric.
pub fn summarize_differences(
    report: &SimStudyReport,
    first: GeneratorKind,
    second: GeneratorKind,
    metric: Metric,
) -> Result<DifferenceSummary, SimError> {
    for kind in [first, second] {
        if !report.designs.contains(&kind) {
            return Err(SimError::UnknownDesign(kind.to_string()));
        }
    }
    let a = report.values(first, metric)?;
    let b = report.values(second, metric)?;
    let diffs: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
    let distribution = Distribution::of(&diffs);
    let n = diffs.len();
    let (ci_low, ci_high) = if n < 2 {
        (f64::NAN, f64::NAN)
    } else {
        let mean = distribution.mean;
        let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let crit = StudentsT::new(0.0, 1.0, (n - 1) as f64)
            .expect("positive degrees of freedom")
            .inverse_cdf(0.975);
        let half = crit * (var / n as f64).sqrt();
        (mean - half, mean + half)
    };
    Ok(DifferenceSummary {
        first,
        second,
        metric,
        mean: distribution.mean,
        ci_low,
        ci_high,
        distribution,
    })
}

/// Runs every iteration (in parallel on the current rayon pool) and
/// aggregates in iteration order. Failed iterations are dropped and listed.
pub fn run_study(params: &SimParams) -> Result<SimStudyReport, SimError> {
    params.check()?;
    let outcomes: Vec<(usize, Result<Vec<DesignMetrics>, SimError>)> = (0..params.iterations)
        .into_par_iter()
        .map(|i| (i, run_iteration(params, iteration_seed(params.seed, i))))
        .collect();
    let mut iterations = Vec::with_capacity(outcomes.len());
    let mut failures = Vec::new();
    for (iteration, outcome) in outcomes {
        match outcome {
            Ok(designs) => iterations.push(IterationResult { iteration, designs }),
            Err(err) => failures.push((iteration, err.to_string())),
        }
    }
    SimStudyReport::from_iterations(params.designs.clone(), iterations, failures)
}

/// Equal-width histogram over `[min, max]`: `(low, high, count)` per bin.
pub fn histogram(values: &[f64], bins: usize) -> Vec<(f64, f64, usize)> {
    let bins = bins.max(1);
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if values.is_empty() {
        return Vec::new();
    }
    if lo == hi {
        return vec![(lo, hi, values.len())];
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in values {
        let idx = (((v - lo) / width) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, c)| (lo + i as f64 * width, lo + (i + 1) as f64 * width, c))
        .collect()
}
