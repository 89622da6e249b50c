//! Reference intervals and sequences used for comparison experiments.
//!
//! Three fixed-sample intervals (Chebyshev, Chernoff, the influence-function
//! CI) and three time-uniform sequences (the two-sided normal mixture, the
//! predictably-mixed Hoeffding sequence, the sub-Gaussian stitched envelope),
//! plus the "trivial" union-bound sequence built from per-time CIs at levels
//! `alpha / (t(t+1))`.
//!
//! The Chebyshev and Chernoff intervals assume a known mean estimate and are
//! valid only at a fixed, pre-committed sample size; monitoring them
//! continuously voids their guarantee (the simulation lab measures exactly
//! that failure). The sequences all admit optional stopping.

use crate::catoni::{solve_decreasing, InfluenceFn};
use crate::error::CsError;
use crate::kahan::NeumaierSum;
use crate::schedules::catoni_lambda;
use crate::set::Interval;
use crate::stream::StreamState;

/// Fixed-sample interval from a second-moment tail bound:
/// `mean_hat +- sigma / sqrt(alpha t)`.
pub fn chebyshev_ci(t: u64, mean_hat: f64, sigma2: f64, alpha: f64) -> Interval {
    assert!(t >= 1, "need at least one observation");
    let half = sigma2.sqrt() / (alpha * t as f64).sqrt();
    Interval::new(mean_hat - half, mean_hat + half)
}

/// Fixed-sample interval from an exponential tail bound:
/// `mean_hat +- sigma sqrt(2 log(2/alpha) / t)`.
pub fn chernoff_ci(t: u64, mean_hat: f64, sigma2: f64, alpha: f64) -> Interval {
    assert!(t >= 1, "need at least one observation");
    let half = sigma2.sqrt() * (2.0 * (2.0 / alpha).ln() / t as f64).sqrt();
    Interval::new(mean_hat - half, mean_hat + half)
}

/// Two-sided normal-mixture confidence sequence for sub-Gaussian streams:
/// `mean_hat +- sigma sqrt((t+1) log(4(t+1)/alpha^2)) / t`.
pub fn normal_mixture_cs(t: u64, mean_hat: f64, sigma2: f64, alpha: f64) -> Interval {
    assert!(t >= 1, "need at least one observation");
    let tf = t as f64;
    let half = sigma2.sqrt() * ((tf + 1.0) * (4.0 * (tf + 1.0) / (alpha * alpha)).ln()).sqrt() / tf;
    Interval::new(mean_hat - half, mean_hat + half)
}

/// Predictably-mixed Hoeffding confidence sequence for sub-Gaussian streams,
/// read off the running weighted sums:
/// `(sum lam x +- (sigma^2 sum lam^2 / 2 + log(2/alpha))) / sum lam`.
pub fn pm_hoeffding_cs(state: &StreamState, sigma2: f64, alpha: f64) -> Interval {
    let sum_lam = state.sum_lam();
    assert!(sum_lam > 0.0, "weight sum must be positive");
    let center = state.sum_lam_x() / sum_lam;
    let half = (sigma2 * state.sum_lam2() / 2.0 + (2.0 / alpha).ln()) / sum_lam;
    Interval::new(center - half, center + half)
}

/// Closed-form envelope of the epoch-stitched sub-Gaussian sequence for
/// standardized (unit-variance) streams:
/// `mean_hat +- 1.7 sqrt((log log 2t + 0.72 log(10.4/alpha)) / t)`.
pub fn stitched_subgaussian_cs(t: u64, mean_hat: f64, alpha: f64) -> Interval {
    assert!(t >= 1, "need at least one observation");
    let tf = t as f64;
    let half = 1.7 * (((2.0 * tf).ln().ln() + 0.72 * (10.4 / alpha).ln()) / tf).sqrt();
    Interval::new(mean_hat - half, mean_hat + half)
}

/// Shared fixed-coefficient influence-function interval: all observations
/// weighted by one `lambda`, thresholds `+-(sigma^2 t lambda^2 / 2 + log_level)`.
fn fixed_lambda_interval(
    xs: &[f64],
    t: u64,
    sigma2: f64,
    lambda: f64,
    log_level: f64,
) -> Result<Interval, CsError> {
    let influence = InfluenceFn::new(2.0)?;
    let data = &xs[..t as usize];
    let f = |m: f64| {
        data.iter()
            .map(|&x| influence.phi(lambda * (x - m)))
            .collect::<NeumaierSum>()
            .value()
    };
    let c = sigma2 * t as f64 * lambda * lambda / 2.0 + log_level;
    let center = data.iter().copied().collect::<NeumaierSum>().value() / t as f64;
    let lower = solve_decreasing(&f, c, center, t)?;
    let upper = solve_decreasing(&f, -c, center, t)?;
    Ok(Interval::new(lower, upper))
}

/// Influence sum over `xs[0..t]` with one fixed coefficient; the membership
/// primitives compare it to the threshold without root-finding.
fn fixed_lambda_sum(xs: &[f64], t: u64, lambda: f64, m: f64) -> f64 {
    let influence = InfluenceFn::new(2.0).expect("p = 2 is always valid");
    xs[..t as usize]
        .iter()
        .map(|&x| influence.phi(lambda * (x - m)))
        .collect::<NeumaierSum>()
        .value()
}

/// Coefficient and threshold of the union-bound sequence at time `t`:
/// the variance-tuned coefficient at base level held fixed at index `t`,
/// and the per-time level `alpha / (t(t+1))`.
fn trivial_tuning(t: u64, sigma2: f64, alpha: f64) -> (f64, f64) {
    let lambda = catoni_lambda(t, alpha, sigma2, 9);
    let tf = t as f64;
    // log(2 / (alpha / (t(t+1)))) = log(2 t (t+1) / alpha).
    let c = sigma2 * tf * lambda * lambda / 2.0 + (2.0 * tf * (tf + 1.0) / alpha).ln();
    (lambda, c)
}

/// Coefficient and threshold of the fixed-sample interval, when the tuning
/// exists (`t > 2 log(2/alpha)`).
fn ci_tuning(t: u64, sigma2: f64, alpha: f64) -> Option<(f64, f64)> {
    let big_l = (2.0 / alpha).ln();
    let tf = t as f64;
    if tf <= 2.0 * big_l {
        return None;
    }
    let eta2 = 2.0 * sigma2 * big_l / (tf - 2.0 * big_l);
    let lambda = (2.0 * big_l / (tf * (sigma2 + eta2))).sqrt();
    Some((lambda, sigma2 * tf * lambda * lambda / 2.0 + big_l))
}

/// Union-bound confidence sequence from per-time influence-function CIs:
/// at time `t` the CI level is `alpha / (t(t+1))`, so the levels telescope
/// to `alpha` over all times. The coefficient is the variance-tuned
/// `lambda` held fixed at index `t`.
pub fn trivial_catoni_cs(
    xs: &[f64],
    t: u64,
    sigma2: f64,
    alpha: f64,
) -> Result<Interval, CsError> {
    if t == 0 || (xs.len() as u64) < t {
        return Err(CsError::InvalidConfig(format!(
            "need {t} observations, got {}",
            xs.len()
        )));
    }
    let lambda = catoni_lambda(t, alpha, sigma2, 9);
    let tf = t as f64;
    let log_level = (2.0 * tf * (tf + 1.0) / alpha).ln();
    fixed_lambda_interval(xs, t, sigma2, lambda, log_level)
}

/// Membership in the union-bound sequence without root-finding:
/// `|f_t(m)| <= c_t`. Everything is in the set before any data.
pub fn trivial_catoni_contains(xs: &[f64], t: u64, sigma2: f64, alpha: f64, m: f64) -> bool {
    if t == 0 {
        return true;
    }
    let (lambda, c) = trivial_tuning(t, sigma2, alpha);
    fixed_lambda_sum(xs, t, lambda, m).abs() <= c
}

/// Whether the lower endpoint of the union-bound sequence exceeds `thr`,
/// decided from the decreasing influence sum: `f_t(thr) > c_t`.
pub fn trivial_catoni_lower_exceeds(
    xs: &[f64],
    t: u64,
    sigma2: f64,
    alpha: f64,
    thr: f64,
) -> bool {
    if t == 0 {
        return false;
    }
    let (lambda, c) = trivial_tuning(t, sigma2, alpha);
    fixed_lambda_sum(xs, t, lambda, thr) > c
}

/// Fixed-sample influence-function interval with the variance-tuned
/// coefficient evaluated exactly at index `t` (no floor). Requires
/// `t > 2 log(2/alpha)` for the tuning to exist.
pub fn catoni_ci(xs: &[f64], t: u64, sigma2: f64, alpha: f64) -> Result<Interval, CsError> {
    if t == 0 || (xs.len() as u64) < t {
        return Err(CsError::InvalidConfig(format!(
            "need {t} observations, got {}",
            xs.len()
        )));
    }
    let (lambda, _) = match ci_tuning(t, sigma2, alpha) {
        Some(tuning) => tuning,
        None => return Err(CsError::LevelTooSmall { alpha, t }),
    };
    fixed_lambda_interval(xs, t, sigma2, lambda, (2.0 / alpha).ln())
}

/// Membership test for the fixed-sample interval; vacuously true while the
/// tuning does not yet exist (the interval makes no claim there).
pub fn catoni_ci_contains(xs: &[f64], t: u64, sigma2: f64, alpha: f64, m: f64) -> bool {
    match ci_tuning(t, sigma2, alpha) {
        None => true,
        Some((lambda, c)) => fixed_lambda_sum(xs, t, lambda, m).abs() <= c,
    }
}

/// Lower-endpoint test for the fixed-sample interval; false while the
/// tuning does not yet exist.
pub fn catoni_ci_lower_exceeds(xs: &[f64], t: u64, sigma2: f64, alpha: f64, thr: f64) -> bool {
    match ci_tuning(t, sigma2, alpha) {
        None => false,
        Some((lambda, c)) => fixed_lambda_sum(xs, t, lambda, thr) > c,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Observation;
    use crate::error::CsError;
    use crate::stream::StreamState;
    use approx::assert_relative_eq;

    fn uniform_stream(n: usize, scale: f64, seed: u64) -> Vec<f64> {
        let mut s = seed;
        (0..n)
            .map(|_| {
                s ^= s << 13;
                s ^= s >> 7;
                s ^= s << 17;
                (((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5) * 2.0 * scale
            })
            .collect()
    }

    #[test]
    fn chebyshev_examples() {
        let iv = chebyshev_ci(4, 0.0, 4.0, 0.25);
        assert_eq!((iv.lo, iv.hi), (-2.0, 2.0));
        let iv = chebyshev_ci(100, 1.0, 1.0, 0.01);
        assert_relative_eq!(iv.lo, 0.0, epsilon = 1e-15);
        assert_relative_eq!(iv.hi, 2.0, max_relative = 1e-15);
        // Degenerate level 1 still evaluates.
        let iv = chebyshev_ci(1, 0.0, 1.0, 1.0);
        assert_eq!((iv.lo, iv.hi), (-1.0, 1.0));
    }

    #[test]
    fn chernoff_examples() {
        let a = 2.0 * (-2.0f64).exp();
        let iv = chernoff_ci(2, 0.0, 1.0, a);
        assert_relative_eq!(iv.hi, 2.0f64.sqrt(), max_relative = 1e-15);
        let a = 2.0 * (-1.0f64).exp();
        let iv = chernoff_ci(8, 0.0, 1.0, a);
        assert_relative_eq!(iv.hi, 0.5, max_relative = 1e-15);
        // Comparison value at t=250, sigma=5, alpha=0.05.
        let iv = chernoff_ci(250, 0.0, 25.0, 0.05);
        assert_relative_eq!(iv.hi, 0.85893881669347512, max_relative = 1e-13);
    }

    #[test]
    fn normal_mixture_examples() {
        // Degenerate level 2 collapses the log to log 2.
        let iv = normal_mixture_cs(1, 3.0, 1.0, 2.0);
        assert_relative_eq!(iv.hi - 3.0, (2.0 * 2.0f64.ln()).sqrt(), max_relative = 1e-15);
        assert_relative_eq!(iv.hi - 3.0, 1.1774100225154747, max_relative = 1e-13);
        let iv = normal_mixture_cs(100, 1.0, 1.0, 0.05);
        assert_relative_eq!(iv.hi - 1.0, 0.34803459913232511, max_relative = 1e-13);
    }

    #[test]
    fn normal_mixture_shrinks_at_root_log_rate() {
        // half(t) / sqrt(log t / t) stays bounded and settles downward.
        let mut prev = f64::INFINITY;
        for &t in &[10_000u64, 100_000, 1_000_000] {
            let half = normal_mixture_cs(t, 0.0, 1.0, 0.05).hi;
            let rate = ((t as f64).ln() / t as f64).sqrt();
            let ratio = half / rate;
            assert!(ratio > 1.0 && ratio < 2.0, "ratio {ratio} out of band at t={t}");
            assert!(ratio < prev, "ratio should settle downward");
            prev = ratio;
        }
    }

    #[test]
    fn pm_hoeffding_single_point() {
        let mut state = StreamState::new(2.0, false);
        state
            .update(1.0, &Observation::new(1, 0.0), 1.0, 1.0)
            .unwrap();
        let iv = pm_hoeffding_cs(&state, 1.0, 2.0 * (-1.0f64).exp());
        assert_relative_eq!(iv.lo, -1.5, max_relative = 1e-15);
        assert_relative_eq!(iv.hi, 1.5, max_relative = 1e-15);
    }

    #[test]
    fn pm_hoeffding_constant_weights_center_on_mean() {
        let xs = uniform_stream(50, 2.0, 7);
        let mut state = StreamState::new(2.0, false);
        for (i, &x) in xs.iter().enumerate() {
            state
                .update(0.3, &Observation::new(i as u64 + 1, x), 1.0, 1.0)
                .unwrap();
        }
        let iv = pm_hoeffding_cs(&state, 1.0, 0.05);
        let mean = xs.iter().sum::<f64>() / 50.0;
        assert_relative_eq!((iv.lo + iv.hi) / 2.0, mean, max_relative = 1e-12, epsilon = 1e-12);
    }

    #[test]
    fn stitched_subgaussian_envelope() {
        let iv = stitched_subgaussian_cs(1024, 0.0, 0.05);
        assert_relative_eq!(iv.hi, 0.12876002780331682, max_relative = 1e-13);
    }

    #[test]
    fn stitched_subgaussian_quarter_of_wide_envelope() {
        // Same inner expression scaled by 1.7 instead of 6.8, so the ratio
        // is exactly one quarter in floating point as well.
        for &t in &[2u64, 17, 256, 1024, 99_991] {
            for &alpha in &[0.5, 0.05, 1e-4] {
                let narrow = stitched_subgaussian_cs(t, 0.0, alpha).hi;
                let wide = crate::stitch::stitched_envelope(t, alpha);
                assert_eq!(narrow / wide, 0.25);
            }
        }
    }

    #[test]
    fn stitched_subgaussian_decreasing_from_two() {
        for &alpha in &[0.5, 0.05] {
            let mut prev = stitched_subgaussian_cs(2, 0.0, alpha).hi;
            for t in 3..=2000u64 {
                let half = stitched_subgaussian_cs(t, 0.0, alpha).hi;
                assert!(half < prev, "width increased at t={t}, alpha={alpha}");
                prev = half;
            }
        }
    }

    #[test]
    fn trivial_levels_telescope() {
        // sum_{t<=N} alpha/(t(t+1)) = alpha N/(N+1).
        let alpha = 0.05;
        let mut sum = NeumaierSum::new();
        let n = 10_000u64;
        for t in 1..=n {
            sum.add(alpha / (t as f64 * (t as f64 + 1.0)));
        }
        assert_relative_eq!(
            sum.value(),
            alpha * n as f64 / (n as f64 + 1.0),
            max_relative = 1e-12
        );
        assert!(sum.value() < alpha);
    }

    #[test]
    fn trivial_first_step_runs_at_half_level() {
        // At t=1 the per-time level is alpha/2, so the interval must match
        // the closed-form single-observation inverse of the influence sum
        // at threshold sigma^2 lambda^2 / 2 + log(4/alpha).
        let (x, sigma2, alpha) = (0.7, 1.0, 0.05);
        let lambda = catoni_lambda(1, alpha, sigma2, 9);
        let c = sigma2 * lambda * lambda / 2.0 + (4.0 / alpha).ln();
        let reach = ((2.0 * c.exp() - 1.0).sqrt() - 1.0) / lambda;
        let iv = trivial_catoni_cs(&[x], 1, sigma2, alpha).unwrap();
        assert_relative_eq!(iv.lo, x - reach, max_relative = 1e-8);
        assert_relative_eq!(iv.hi, x + reach, max_relative = 1e-8);
    }

    #[test]
    fn trivial_is_deterministic() {
        let xs = uniform_stream(300, 3.0, 11);
        let a = trivial_catoni_cs(&xs, 300, 2.0, 0.05).unwrap();
        let b = trivial_catoni_cs(&xs, 300, 2.0, 0.05).unwrap();
        assert_eq!(a.lo.to_bits(), b.lo.to_bits());
        assert_eq!(a.hi.to_bits(), b.hi.to_bits());
    }

    #[test]
    fn catoni_ci_requires_enough_observations() {
        // 2 log(2/0.05) = 7.377..., so t=7 is too small and t=8 works.
        let xs = vec![0.0; 8];
        match catoni_ci(&xs, 7, 1.0, 0.05) {
            Err(CsError::LevelTooSmall { alpha, t }) => {
                assert_eq!(t, 7);
                assert_relative_eq!(alpha, 0.05);
            }
            other => panic!("expected level-too-small, got {other:?}"),
        }
        assert!(catoni_ci(&xs, 8, 1.0, 0.05).is_ok());
    }

    #[test]
    fn catoni_ci_negation_symmetry() {
        let xs = uniform_stream(120, 4.0, 23);
        let neg: Vec<f64> = xs.iter().map(|x| -x).collect();
        let a = catoni_ci(&xs, 120, 3.0, 0.05).unwrap();
        let b = catoni_ci(&neg, 120, 3.0, 0.05).unwrap();
        assert_relative_eq!(a.lo, -b.hi, max_relative = 1e-7, epsilon = 1e-8);
        assert_relative_eq!(a.hi, -b.lo, max_relative = 1e-7, epsilon = 1e-8);
    }

    #[test]
    fn catoni_ci_matches_chernoff_width_at_comparison_point() {
        // t=250, sigma^2=25, alpha=0.05: in the near-linear regime the two
        // half-widths agree to well within 10%.
        let xs = uniform_stream(250, 75.0f64.sqrt(), 99);
        let ci = catoni_ci(&xs, 250, 25.0, 0.05).unwrap();
        let ch = chernoff_ci(250, 0.0, 25.0, 0.05);
        let ratio = ci.width() / ch.width();
        assert!(
            (ratio - 1.0).abs() < 0.10,
            "width ratio {ratio} outside 10% of the exponential-bound interval"
        );
    }

    #[test]
    fn growth_ordering_as_level_shrinks() {
        // Chebyshev half-width grows like alpha^(-1/2), the exponential
        // bound like sqrt(log(1/alpha)); their ratio must blow up.
        let t = 100;
        let mut prev = 0.0;
        for k in 1..=8u32 {
            let alpha = 10f64.powi(-(k as i32));
            let ratio = chebyshev_ci(t, 0.0, 1.0, alpha).hi / chernoff_ci(t, 0.0, 1.0, alpha).hi;
            assert!(ratio > prev, "ratio must increase as alpha shrinks");
            prev = ratio;
        }
        assert!(prev > 1000.0, "ratio at alpha=1e-8 should exceed 1000, got {prev}");
    }

    #[test]
    fn membership_primitives_agree_with_root_found_endpoints() {
        let xs = uniform_stream(400, 3.0, 41);
        let (sigma2, alpha, eps) = (2.0, 0.05, 1e-4);
        for &t in &[1u64, 9, 40, 400] {
            let iv = trivial_catoni_cs(&xs, t, sigma2, alpha).unwrap();
            let mid = (iv.lo + iv.hi) / 2.0;
            assert!(trivial_catoni_contains(&xs, t, sigma2, alpha, mid));
            assert!(!trivial_catoni_contains(&xs, t, sigma2, alpha, iv.lo - eps));
            assert!(!trivial_catoni_contains(&xs, t, sigma2, alpha, iv.hi + eps));
            assert!(trivial_catoni_lower_exceeds(&xs, t, sigma2, alpha, iv.lo - eps));
            assert!(!trivial_catoni_lower_exceeds(&xs, t, sigma2, alpha, iv.lo + eps));
        }
        for &t in &[40u64, 400] {
            let iv = catoni_ci(&xs, t, sigma2, alpha).unwrap();
            assert!(catoni_ci_contains(&xs, t, sigma2, alpha, (iv.lo + iv.hi) / 2.0));
            assert!(!catoni_ci_contains(&xs, t, sigma2, alpha, iv.hi + eps));
            assert!(catoni_ci_lower_exceeds(&xs, t, sigma2, alpha, iv.lo - eps));
            assert!(!catoni_ci_lower_exceeds(&xs, t, sigma2, alpha, iv.lo + eps));
        }
        // Before the fixed-sample tuning exists: vacuous membership, no
        // lower-bound claims.
        assert!(catoni_ci_contains(&xs, 5, sigma2, alpha, 1e9));
        assert!(!catoni_ci_lower_exceeds(&xs, 5, sigma2, alpha, -1e9));
    }

    #[test]
    fn trivial_rejects_missing_history() {
        assert!(trivial_catoni_cs(&[1.0, 2.0], 3, 1.0, 0.05).is_err());
        assert!(trivial_catoni_cs(&[], 0, 1.0, 0.05).is_err());
    }
}
