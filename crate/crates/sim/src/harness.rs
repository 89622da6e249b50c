//! Replication harness for coverage, width-profile, and crossing experiments.
//!
//! Replications are embarrassingly parallel. Each one derives its own RNG
//! from the master seed and the replication index through a SplitMix64
//! finalizer, so the numbers a run produces are independent of thread count
//! and scheduling order. Reduction is a plain ordered collect over the
//! per-replication outcomes.

use std::collections::BTreeMap;
use std::time::Instant;

use heavycs::sn::middle_width_of;
use heavycs::{CsConfig, CsRunner, Method, MethodOptions, Observation};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use crate::generator::GeneratorSpec;
use crate::report::{finite_quantile, quantile, ExperimentReport, WidthStat};
use crate::SimError;

/// SplitMix64 finalizer used to scramble seeds.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Child seed for one replication. Independent of execution order by
/// construction, so parallel and serial runs agree replication by
/// replication.
pub fn child_seed(seed: u64, rep: u64) -> u64 {
    mix(seed ^ mix(rep))
}

/// Stream cipher RNG for one replication.
pub fn child_rng(seed: u64, rep: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(child_seed(seed, rep))
}

/// Estimator configuration implied by a generator spec at a given level:
/// dispersion bounds cross over, the true center never does. A degenerate
/// zero-variance spec maps to a unit bound, since the estimators require a
/// positive one and any positive bound dominates a constant stream.
pub fn config_for(spec: &GeneratorSpec, alpha: f64) -> CsConfig {
    let mut cfg = CsConfig::new(alpha);
    if let Some(s2) = spec.sigma2 {
        cfg = cfg.with_sigma2(if s2 > 0.0 { s2 } else { 1.0 });
    }
    if let Some((p, v)) = spec.moment {
        cfg = cfg.with_moment(p, v);
    }
    cfg
}

/// Law-of-the-iterated-logarithm reference curve sigma sqrt(2 log log t / t),
/// the asymptotic floor any width envelope is measured against. Guide curve
/// for plots only; requires t >= 3 so the double logarithm is positive.
pub fn lil_reference(t: f64, sigma: f64) -> f64 {
    assert!(t >= 3.0, "lil_reference needs t >= 3, got {t}");
    sigma * (2.0 * t.ln().ln() / t).sqrt()
}

fn tag(rep: u64, t: u64) -> impl Fn(heavycs::CsError) -> SimError {
    move |source| SimError::Estimator { rep, t, source }
}

/// Time-uniform coverage experiment with the config implied by the spec.
pub fn run_coverage(
    method: Method,
    spec: &GeneratorSpec,
    horizon: u64,
    reps: u64,
    alpha: f64,
) -> Result<ExperimentReport, SimError> {
    run_coverage_cfg(method, config_for(spec, alpha), MethodOptions::default(), spec, horizon, reps)
}

/// Coverage experiment with an explicit estimator config (heteroscedastic
/// route, custom schedules via `opts`, and so on).
///
/// Per replication the harness tracks the true center as a membership probe
/// and records the first time the per-time set excludes it; a replication
/// counts as miscovered if that ever happens within the horizon. First
/// exclusion by a per-time set and first exclusion by the running
/// intersection happen at the same t, so the probe uses the cheap per-time
/// route.
pub fn run_coverage_cfg(
    method: Method,
    config: CsConfig,
    opts: MethodOptions,
    spec: &GeneratorSpec,
    horizon: u64,
    reps: u64,
) -> Result<ExperimentReport, SimError> {
    spec.validate()?;
    let start = Instant::now();
    let outcomes: Vec<(f64, Option<u64>)> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = child_rng(spec.seed, rep);
            let (mu, obs) = spec.sample_stream(&mut rng, horizon);
            let mut runner =
                CsRunner::new(method, config, opts.clone()).map_err(tag(rep, 0))?;
            let idx = runner.track(mu);
            let mut first = None;
            for o in &obs {
                runner.advance(o).map_err(tag(rep, o.t))?;
                if !runner.tracked_contains(idx) {
                    first = Some(o.t);
                    break;
                }
            }
            Ok((mu, first))
        })
        .collect::<Result<_, SimError>>()?;

    let mut report =
        ExperimentReport::base("coverage", method.name(), spec, &[config.alpha], horizon, reps);
    report.centers = outcomes.iter().map(|(mu, _)| *mu).collect();
    report.first_miscoverage = outcomes.iter().map(|(_, f)| *f).collect();
    let missed = report.first_miscoverage.iter().filter(|f| f.is_some()).count() as u64;
    let rate = missed as f64 / reps as f64;
    report.miscoverage_count = Some(missed);
    report.miscoverage_rate = Some(rate);
    report.rate_se3 = Some(3.0 * (rate * (1.0 - rate) / reps as f64).sqrt());
    report.runtime_ms = start.elapsed().as_millis() as u64;
    Ok(report)
}

/// Evaluation grid for width profiles: powers of two up to the horizon, plus
/// the horizon itself.
pub fn t_grid(horizon: u64) -> Vec<u64> {
    assert!(horizon >= 1);
    let mut grid = Vec::new();
    let mut p = 1u64;
    while p < horizon {
        grid.push(p);
        p = p.saturating_mul(2);
    }
    grid.push(horizon);
    grid
}

/// Width statistics on the (t_grid x alphas) grid.
///
/// All levels reuse the same per-replication stream (common random numbers),
/// which stabilizes cross-level comparisons like slope fits. Unbounded sets
/// and not-yet-admissible fixed-sample baselines surface as `None` entries
/// rather than errors. The self-normalized method additionally records a
/// middle-width column (the bounded extent of its set) alongside the
/// majority topology tag.
pub fn run_width_profile(
    method: Method,
    spec: &GeneratorSpec,
    horizon: u64,
    reps: u64,
    alphas: &[f64],
) -> Result<ExperimentReport, SimError> {
    spec.validate()?;
    assert!(!alphas.is_empty(), "need at least one level");
    let start = Instant::now();
    let grid = t_grid(horizon);
    let (na, ng) = (alphas.len(), grid.len());

    struct RepProfile {
        mu: f64,
        widths: Vec<f64>,
        mids: Vec<f64>,
        kinds: Vec<String>,
    }

    let profiles: Vec<RepProfile> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = child_rng(spec.seed, rep);
            let (mu, obs) = spec.sample_stream(&mut rng, horizon);
            let mut widths = vec![f64::INFINITY; na * ng];
            let mut mids = vec![f64::NAN; na * ng];
            let mut kinds = vec![String::new(); na * ng];
            for (ai, &alpha) in alphas.iter().enumerate() {
                let cfg = config_for(spec, alpha);
                let mut runner =
                    CsRunner::new(method, cfg, MethodOptions::default()).map_err(tag(rep, 0))?;
                let mut gi = 0usize;
                for o in &obs {
                    runner.advance(o).map_err(tag(rep, o.t))?;
                    if gi < ng && o.t == grid[gi] {
                        let cell = ai * ng + gi;
                        // A set evaluation that cannot reach its level yet is
                        // reported as unbounded, not as a failure.
                        if let Ok(set) = runner.set() {
                            widths[cell] = set.width();
                            // Bounded extent of the set: the set itself once
                            // a companion removed the outer rays, else the
                            // middle piece of a raw three-piece shape.
                            mids[cell] = if set.width().is_finite() {
                                set.width()
                            } else {
                                middle_width_of(&set)
                            };
                            kinds[cell] = set.kind();
                        } else {
                            kinds[cell] = "line".to_string();
                        }
                        gi += 1;
                    }
                }
            }
            Ok(RepProfile { mu, widths, mids, kinds })
        })
        .collect::<Result<_, SimError>>()?;

    let mut report =
        ExperimentReport::base("widths", method.name(), spec, alphas, horizon, reps);
    report.centers = profiles.iter().map(|p| p.mu).collect();
    for (ai, &alpha) in alphas.iter().enumerate() {
        for (gi, &t) in grid.iter().enumerate() {
            let cell = ai * ng + gi;
            let ws: Vec<f64> = profiles.iter().map(|p| p.widths[cell]).collect();
            let mean = if ws.iter().all(|w| w.is_finite()) {
                Some(ws.iter().sum::<f64>() / ws.len() as f64)
            } else {
                None
            };
            let mids: Vec<f64> = profiles.iter().map(|p| p.mids[cell]).collect();
            let middle_median = if method == Method::Sn {
                finite_quantile(&mids, 0.5)
            } else {
                None
            };
            let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
            for p in &profiles {
                *counts.entry(p.kinds[cell].as_str()).or_default() += 1;
            }
            let topology = counts
                .iter()
                .max_by_key(|(_, &c)| c)
                .map(|(k, _)| k.to_string());
            report.widths.push(WidthStat {
                t,
                alpha,
                mean,
                q10: finite_quantile(&ws, 0.1),
                median: finite_quantile(&ws, 0.5),
                q90: finite_quantile(&ws, 0.9),
                middle_median,
                topology,
            });
        }
    }
    report.runtime_ms = start.elapsed().as_millis() as u64;
    Ok(report)
}

fn first_crossing(
    method: Method,
    config: CsConfig,
    obs: &[Observation],
    threshold: f64,
    rep: u64,
) -> Result<Option<u64>, SimError> {
    let mut runner = CsRunner::new(method, config, MethodOptions::default()).map_err(tag(rep, 0))?;
    let idx = runner.track(threshold);
    for o in obs {
        runner.advance(o).map_err(tag(rep, o.t))?;
        if runner.tracked_below(idx) {
            return Ok(Some(o.t));
        }
    }
    Ok(None)
}

/// First-crossing comparison: per replication, the first t at which each
/// method's lower confidence bound exceeds the threshold, on a shared
/// stream. Replications that never cross within the horizon stay censored
/// (`None`); medians treat censored entries as infinite and are themselves
/// withheld when the median replication is censored.
pub fn run_crossing(
    method_a: Method,
    method_b: Method,
    spec: &GeneratorSpec,
    threshold: f64,
    horizon: u64,
    reps: u64,
    alpha: f64,
) -> Result<ExperimentReport, SimError> {
    spec.validate()?;
    let start = Instant::now();
    let config = config_for(spec, alpha);
    let outcomes: Vec<(f64, Option<u64>, Option<u64>)> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = child_rng(spec.seed, rep);
            let (mu, obs) = spec.sample_stream(&mut rng, horizon);
            let a = first_crossing(method_a, config, &obs, threshold, rep)?;
            let b = first_crossing(method_b, config, &obs, threshold, rep)?;
            Ok((mu, a, b))
        })
        .collect::<Result<_, SimError>>()?;

    let mut report =
        ExperimentReport::base("crossing", method_a.name(), spec, &[alpha], horizon, reps);
    report.method_b = Some(method_b.name().to_string());
    report.threshold = Some(threshold);
    report.centers = outcomes.iter().map(|(mu, _, _)| *mu).collect();
    report.crossing_a = outcomes.iter().map(|(_, a, _)| *a).collect();
    report.crossing_b = outcomes.iter().map(|(_, _, b)| *b).collect();

    let censored_median = |times: &[Option<u64>]| -> Option<f64> {
        let vals: Vec<f64> = times
            .iter()
            .map(|t| t.map_or(f64::INFINITY, |v| v as f64))
            .collect();
        let med = quantile(&vals, 0.5);
        med.is_finite().then_some(med)
    };
    report.crossing_median_a = censored_median(&report.crossing_a);
    report.crossing_median_b = censored_median(&report.crossing_b);
    report.crossing_ratio = match (report.crossing_median_a, report.crossing_median_b) {
        (Some(a), Some(b)) => Some(a / b),
        _ => None,
    };
    report.censored_a = Some(report.crossing_a.iter().filter(|t| t.is_none()).count() as u64);
    report.censored_b = Some(report.crossing_b.iter().filter(|t| t.is_none()).count() as u64);
    report.runtime_ms = start.elapsed().as_millis() as u64;
    Ok(report)
}
