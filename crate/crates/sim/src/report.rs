//! Serializable experiment records.
//!
//! A report captures the full provenance of a Monte-Carlo run: generator
//! spec, method ids, level grid, horizon, replication count, and the master
//! seed, alongside the measured outcomes. Re-running the harness with the
//! recorded inputs reproduces every number except the wall-clock field.

use serde::{Deserialize, Serialize};

use crate::generator::GeneratorSpec;

/// Width summary at one (t, alpha) grid point, aggregated over replications.
///
/// `None` entries mean the corresponding statistic was unbounded: early in a
/// stream a set can be a ray or the whole line, and some fixed-sample
/// baselines are undefined until their tuning admits the level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WidthStat {
    pub t: u64,
    pub alpha: f64,
    pub mean: Option<f64>,
    pub q10: Option<f64>,
    pub median: Option<f64>,
    pub q90: Option<f64>,
    /// Median width of the bounded middle piece, recorded for methods whose
    /// raw sets can be unions.
    pub middle_median: Option<f64>,
    /// Most frequent shape tag at this grid point ("interval", "union3", ...).
    pub topology: Option<String>,
}

/// Full record of one experiment.
///
/// A single shape serves all three experiment kinds; sections that do not
/// apply stay empty. `centers` lists the true per-replication means in
/// replication order, whether fixed by the spec or drawn per replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    /// "coverage", "widths", or "crossing".
    pub experiment: String,
    pub method: String,
    /// Second method of a crossing comparison.
    pub method_b: Option<String>,
    pub spec: GeneratorSpec,
    pub alphas: Vec<f64>,
    pub horizon: u64,
    pub reps: u64,
    pub seed: u64,
    /// Crossing threshold, when the experiment has one.
    pub threshold: Option<f64>,
    pub centers: Vec<f64>,

    /// Replications whose set excluded the true mean at any time <= horizon.
    pub miscoverage_count: Option<u64>,
    pub miscoverage_rate: Option<f64>,
    /// Three binomial standard errors at the observed rate.
    pub rate_se3: Option<f64>,
    /// First time the per-time set excluded the truth, per replication.
    pub first_miscoverage: Vec<Option<u64>>,

    pub widths: Vec<WidthStat>,

    /// First time the lower bound exceeded the threshold; `None` = censored.
    pub crossing_a: Vec<Option<u64>>,
    pub crossing_b: Vec<Option<u64>>,
    pub crossing_median_a: Option<f64>,
    pub crossing_median_b: Option<f64>,
    /// median_a / median_b when both are uncensored.
    pub crossing_ratio: Option<f64>,
    pub censored_a: Option<u64>,
    pub censored_b: Option<u64>,

    /// Wall-clock duration; informational only, excluded from reproducibility.
    pub runtime_ms: u64,
}

impl ExperimentReport {
    /// Empty report skeleton; the harness fills the experiment's section.
    pub fn base(
        experiment: &str,
        method: &str,
        spec: &GeneratorSpec,
        alphas: &[f64],
        horizon: u64,
        reps: u64,
    ) -> Self {
        ExperimentReport {
            experiment: experiment.to_string(),
            method: method.to_string(),
            method_b: None,
            spec: spec.clone(),
            alphas: alphas.to_vec(),
            horizon,
            reps,
            seed: spec.seed,
            threshold: None,
            centers: Vec::new(),
            miscoverage_count: None,
            miscoverage_rate: None,
            rate_se3: None,
            first_miscoverage: Vec::new(),
            widths: Vec::new(),
            crossing_a: Vec::new(),
            crossing_b: Vec::new(),
            crossing_median_a: None,
            crossing_median_b: None,
            crossing_ratio: None,
            censored_a: None,
            censored_b: None,
            runtime_ms: 0,
        }
    }
}

/// Nearest-rank quantile. Infinities are ordered normally, so an unbounded
/// sample can surface as an infinite quantile; callers map that to `None`.
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    assert!(!xs.is_empty() && (0.0..=1.0).contains(&q));
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let rank = (q * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

/// Nearest-rank quantile with `None` when the selected element is not finite.
pub fn finite_quantile(xs: &[f64], q: f64) -> Option<f64> {
    let v = quantile(xs, q);
    v.is_finite().then_some(v)
}
