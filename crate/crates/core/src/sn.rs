//! The self-normalized confidence sequence.
//!
//! Two one-sided exponential processes built from a cubic-free expansion of
//! the log moment generating function give, at each time, a pair of
//! *anti*-intervals: quadratic-root intervals that exclude the mean with
//! high probability. The confidence set is the complement of their union,
//! which typically decomposes into a lower ray, a bounded middle interval,
//! and an upper ray once enough data has arrived.
//!
//! With `Q = sum lam_i^2` and per-step variance bounds folded into
//! `S = sum lam_i^2 sig_i^2`, the two quadratics in `m` are
//!
//! ```text
//! g_plus(m)  = -(Q/6) m^2 + U_plus m  - K_plus
//! g_minus(m) = -(Q/6) m^2 + U_minus m - K_minus
//! U_plus  = sum(lam_i^2 X_i)/3 - sum(lam_i)
//! U_minus = sum(lam_i^2 X_i)/3 + sum(lam_i)
//! K_plus  = log(2/a) - sum(lam_i X_i) + (sum(lam_i^2 X_i^2) + 2 S)/6
//! K_minus = log(2/a) + sum(lam_i X_i) + (sum(lam_i^2 X_i^2) + 2 S)/6
//! ```
//!
//! Each anti-interval is the region where its quadratic is nonnegative:
//! the root interval when the discriminant is positive, empty otherwise.
//!
//! An optional companion interval from the additive-martingale family can
//! be intersected in at a level split `alpha = alpha' + alpha''`: the
//! quadratics run at `alpha'` and the companion at `alpha''`, which removes
//! the unbounded rays (and with them any spurious pieces) at a small cost
//! in the middle width.

use crate::config::{CsConfig, Observation};
use crate::ds::DsEstimator;
use crate::error::CsError;
use crate::schedules::LambdaSchedule;
use crate::set::ConfidenceSet;
use crate::stream::StreamState;

#[derive(Debug, Clone)]
pub struct SnEstimator {
    config: CsConfig,
    /// Level driving the quadratics: `alpha'` under a split, else `alpha`.
    quad_alpha: f64,
    schedule: LambdaSchedule,
    state: StreamState,
    companion: Option<DsEstimator>,
    running: Option<ConfidenceSet>,
}

impl SnEstimator {
    /// A split in `config.alpha_split` activates the companion interval at
    /// level `alpha''` with its own tuned schedule.
    pub fn new(config: CsConfig, schedule: LambdaSchedule) -> Result<Self, CsError> {
        config.validate()?;
        schedule.validate()?;
        let (quad_alpha, companion) = match config.alpha_split {
            Some((a1, a2)) => {
                let mut companion_cfg = config;
                companion_cfg.alpha = a2;
                companion_cfg.alpha_split = None;
                companion_cfg.intersect = false;
                let companion = DsEstimator::new(
                    companion_cfg,
                    LambdaSchedule::ds_tuned(a2, config.sigma2)?,
                )?;
                (a1, Some(companion))
            }
            None => (config.alpha, None),
        };
        Ok(SnEstimator {
            running: config.intersect.then(ConfidenceSet::all),
            config,
            quad_alpha,
            schedule,
            state: StreamState::new(config.p, false),
            companion,
        })
    }

    /// Convenience constructor enabling the companion with the 9-to-1
    /// default split `alpha' = 0.9 alpha`, `alpha'' = alpha/10`.
    pub fn with_default_split(mut config: CsConfig, schedule: LambdaSchedule) -> Result<Self, CsError> {
        config.alpha_split = Some((0.9 * config.alpha, 0.1 * config.alpha));
        SnEstimator::new(config, schedule)
    }

    pub fn config(&self) -> &CsConfig {
        &self.config
    }

    pub fn t(&self) -> u64 {
        self.state.t()
    }

    fn effective_sig2(&self, obs: &Observation) -> Result<f64, CsError> {
        if self.config.heteroscedastic {
            let s = obs.sigma_t.ok_or(CsError::MissingField {
                t: obs.t,
                field: "sigma_t",
            })?;
            Ok(s * s)
        } else {
            Ok(self.config.sigma2)
        }
    }

    pub fn advance(&mut self, obs: &Observation) -> Result<(), CsError> {
        let lambda = self.schedule.next(obs.t)?;
        let sig2 = self.effective_sig2(obs)?;
        let v = obs.v_t.unwrap_or(self.config.v);
        self.state.update(lambda, obs, sig2, v)?;
        self.schedule.record(obs.x);
        if let Some(companion) = self.companion.as_mut() {
            companion.advance(obs)?;
        }
        if self.running.is_some() {
            let fresh = self.fresh_set();
            let running = self.running.take().unwrap();
            self.running = Some(running.intersect(&fresh));
        }
        Ok(())
    }

    /// The two quadratic-root anti-intervals at the current time. Either
    /// may be empty (negative discriminant).
    pub fn anti_intervals(&self) -> (ConfidenceSet, ConfidenceSet) {
        let q = self.state.sum_lam2();
        if q <= 0.0 {
            return (ConfidenceSet::empty(), ConfidenceSet::empty());
        }
        let a = q / 6.0;
        let l = (2.0 / self.quad_alpha).ln();
        let cross = (self.state.sum_lam2_x2() + 2.0 * self.state.sum_lam2_sig2()) / 6.0;
        let u_plus = self.state.sum_lam2_x() / 3.0 - self.state.sum_lam();
        let u_minus = self.state.sum_lam2_x() / 3.0 + self.state.sum_lam();
        let k_plus = l - self.state.sum_lam_x() + cross;
        let k_minus = l + self.state.sum_lam_x() + cross;
        (quad_root_interval(a, u_plus, k_plus), quad_root_interval(a, u_minus, k_minus))
    }

    fn fresh_set(&self) -> ConfidenceSet {
        let (plus, minus) = self.anti_intervals();
        let sn = plus.union(&minus).complement();
        match &self.companion {
            Some(companion) => sn.intersect(&companion.set()),
            None => sn,
        }
    }

    /// The confidence set at the current time (running intersection when
    /// configured).
    pub fn set(&self) -> ConfidenceSet {
        match &self.running {
            Some(r) => r.clone(),
            None => self.fresh_set(),
        }
    }

    pub fn step(&mut self, obs: &Observation) -> Result<ConfidenceSet, CsError> {
        self.advance(obs)?;
        Ok(self.set())
    }

    /// Width of the bounded middle piece when the set decomposes into
    /// lower ray + middle interval + upper ray; infinity otherwise.
    pub fn middle_width(&self) -> f64 {
        middle_width_of(&self.set())
    }
}

/// Width of the middle piece of a ray/interval/ray decomposition, or
/// infinity when the set has a different shape.
pub fn middle_width_of(set: &ConfidenceSet) -> f64 {
    match set.intervals() {
        [first, mid, last]
            if first.lo == f64::NEG_INFINITY && last.hi == f64::INFINITY =>
        {
            mid.width()
        }
        _ => f64::INFINITY,
    }
}

/// The closed interval where `-a m^2 + u m - k >= 0` (with `a > 0`), or the
/// empty set when the discriminant is negative.
///
/// Roots are computed with the sign-aware stable form: the larger-magnitude
/// root from the quadratic formula, the other from the product identity
/// `m1 * m2 = k/a`, avoiding cancellation when `u^2` dominates `4ak`.
fn quad_root_interval(a: f64, u: f64, k: f64) -> ConfidenceSet {
    debug_assert!(a > 0.0);
    let disc = u * u - 4.0 * a * k;
    if disc <= 0.0 {
        return ConfidenceSet::empty();
    }
    let sq = disc.sqrt();
    let q = if u >= 0.0 { (u + sq) / 2.0 } else { (u - sq) / 2.0 };
    // q is never 0 here: disc > 0 forces |u| + sq > 0.
    let r1 = q / a;
    let r2 = k / q;
    let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
    ConfidenceSet::interval(lo, hi)
}
