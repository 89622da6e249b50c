//! The additive-martingale confidence sequence (Dubins-Savage style).
//!
//! At every time `t` the set is the single interval
//!
//! ```text
//! [ (sum lam_i X_i +- (2/alpha - 1 + sum lam_i^2 sig_i^2)) / sum lam_i ]
//! ```
//!
//! where `sig_i^2` is the per-step variance bound (the constant `sigma2` on
//! homoscedastic streams). The half-width does not depend on the data, so
//! with a data-independent schedule the width is a deterministic function
//! of `t`; with the tuned schedule it admits the closed form checked in
//! [`ds_tuned_half_width`].

use crate::config::{CsConfig, Observation};
use crate::error::CsError;
use crate::kahan::NeumaierSum;
use crate::schedules::LambdaSchedule;
use crate::set::ConfidenceSet;
use crate::stream::StreamState;

#[derive(Debug, Clone)]
pub struct DsEstimator {
    config: CsConfig,
    schedule: LambdaSchedule,
    state: StreamState,
    running: Option<ConfidenceSet>,
}

impl DsEstimator {
    pub fn new(config: CsConfig, schedule: LambdaSchedule) -> Result<Self, CsError> {
        config.validate()?;
        schedule.validate()?;
        Ok(DsEstimator {
            running: config.intersect.then(ConfidenceSet::all),
            config,
            schedule,
            state: StreamState::new(config.p, false),
        })
    }

    pub fn config(&self) -> &CsConfig {
        &self.config
    }

    pub fn t(&self) -> u64 {
        self.state.t()
    }

    pub fn state(&self) -> &StreamState {
        &self.state
    }

    /// Resolves the per-step variance bound for `obs` under the current
    /// mode: the stream-supplied bound when heteroscedastic, else `sigma2`.
    fn effective_sig2(&self, obs: &Observation) -> Result<f64, CsError> {
        if self.config.heteroscedastic {
            let s = obs.sigma_t.ok_or(CsError::MissingField {
                t: obs.t,
                field: "sigma_t",
            })?;
            if !(s >= 0.0 && s.is_finite()) {
                return Err(CsError::InvalidConfig(format!(
                    "sigma_t at index {} must be finite and nonnegative, got {s}",
                    obs.t
                )));
            }
            Ok(s * s)
        } else {
            Ok(self.config.sigma2)
        }
    }

    /// Consume one observation without forming the set.
    pub fn advance(&mut self, obs: &Observation) -> Result<(), CsError> {
        let lambda = self.schedule.next(obs.t)?;
        let sig2 = self.effective_sig2(obs)?;
        let v = obs.v_t.unwrap_or(self.config.v);
        self.state.update(lambda, obs, sig2, v)?;
        self.schedule.record(obs.x);
        if self.running.is_some() {
            let fresh = self.current_interval();
            let running = self.running.take().unwrap();
            self.running = Some(running.intersect(&fresh));
        }
        Ok(())
    }

    fn current_interval(&self) -> ConfidenceSet {
        let sum_lam = self.state.sum_lam();
        if sum_lam <= 0.0 {
            return ConfidenceSet::all();
        }
        let center = self.state.sum_lam_x() / sum_lam;
        let half = self.half_width();
        ConfidenceSet::interval(center - half, center + half)
    }

    /// Half-width of the per-time interval. A function of the schedule and
    /// the variance bounds only; the observed values never enter, which is
    /// why the width column of any replication table is constant.
    pub fn half_width(&self) -> f64 {
        (2.0 / self.config.alpha - 1.0 + self.state.sum_lam2_sig2()) / self.state.sum_lam()
    }

    /// The confidence set at the current time: the fresh interval, or the
    /// running intersection of all intervals so far when configured.
    pub fn set(&self) -> ConfidenceSet {
        match &self.running {
            Some(r) => r.clone(),
            None => self.current_interval(),
        }
    }

    /// Advance and return the set; the one-call-per-observation entry point.
    pub fn step(&mut self, obs: &Observation) -> Result<ConfidenceSet, CsError> {
        self.advance(obs)?;
        Ok(self.set())
    }
}

/// Closed-form half-width of the tuned estimator at time `t`:
/// `sqrt(2/alpha - 1) * sigma * (1 + sum_{i<=t} 1/i) / sum_{i<=t} 1/sqrt(i)`.
///
/// Evaluating the interval with the tuned schedule reproduces this value to
/// near machine precision at every `t`; the identity is what pins the
/// `sqrt(log t / sqrt(t))`-type shrinkage of this family.
pub fn ds_tuned_half_width(t: u64, alpha: f64, sigma2: f64) -> f64 {
    let mut harmonic = NeumaierSum::new();
    let mut sqrt_harmonic = NeumaierSum::new();
    for i in 1..=t {
        harmonic.add(1.0 / i as f64);
        sqrt_harmonic.add(1.0 / (i as f64).sqrt());
    }
    (2.0 / alpha - 1.0).sqrt() * sigma2.sqrt() * (1.0 + harmonic.value())
        / sqrt_harmonic.value()
}
