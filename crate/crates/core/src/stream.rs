//! The streaming accumulator every estimator folds its data into.

use crate::config::Observation;
use crate::error::CsError;
use crate::kahan::NeumaierSum;

/// Running sums over a weighted stream, all compensated.
///
/// `update` consumes one `(lambda_t, X_t)` pair together with the effective
/// per-step variance bound `sig2_t` and p-th moment bound `v_t` resolved by
/// the caller (a constant in homoscedastic mode, per-observation otherwise).
/// Indices are checked: observation `t` must follow `t - 1` exactly.
///
/// When `retain_history` is set, the `(lambda_t, X_t)` pairs are kept so
/// root-finding methods can evaluate nonlinear functionals of the stream;
/// closed-form methods skip retention and run in constant memory.
#[derive(Debug, Clone)]
pub struct StreamState {
    t: u64,
    p: f64,
    sum_lam: NeumaierSum,
    sum_lam2: NeumaierSum,
    sum_lam_x: NeumaierSum,
    sum_lam2_x: NeumaierSum,
    sum_lam2_x2: NeumaierSum,
    sum_x: NeumaierSum,
    sum_x2: NeumaierSum,
    sum_lam2_sig2: NeumaierSum,
    sum_v_lamp: NeumaierSum,
    history: Option<Vec<(f64, f64)>>,
}

impl StreamState {
    /// `p` is the moment order used for the `sum_v_lamp` accumulator.
    pub fn new(p: f64, retain_history: bool) -> Self {
        StreamState {
            t: 0,
            p,
            sum_lam: NeumaierSum::new(),
            sum_lam2: NeumaierSum::new(),
            sum_lam_x: NeumaierSum::new(),
            sum_lam2_x: NeumaierSum::new(),
            sum_lam2_x2: NeumaierSum::new(),
            sum_x: NeumaierSum::new(),
            sum_x2: NeumaierSum::new(),
            sum_lam2_sig2: NeumaierSum::new(),
            sum_v_lamp: NeumaierSum::new(),
            history: retain_history.then(Vec::new),
        }
    }

    pub fn update(
        &mut self,
        lambda: f64,
        obs: &Observation,
        sig2_t: f64,
        v_t: f64,
    ) -> Result<(), CsError> {
        if obs.t != self.t + 1 {
            return Err(CsError::Sequencing {
                expected: self.t + 1,
                got: obs.t,
            });
        }
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(CsError::Schedule {
                index: obs.t,
                reason: format!("coefficient must be positive and finite, got {lambda}"),
            });
        }
        if !obs.x.is_finite() {
            return Err(CsError::InvalidConfig(format!(
                "observation {} is not finite: {}",
                obs.t, obs.x
            )));
        }
        let x = obs.x;
        let lam2 = lambda * lambda;
        // lambda^p reduces to lambda^2 bit-exactly at p = 2 so the p-family
        // collapses onto the variance family without numeric drift.
        let lamp = if self.p == 2.0 { lam2 } else { lambda.powf(self.p) };
        self.sum_lam.add(lambda);
        self.sum_lam2.add(lam2);
        self.sum_lam_x.add(lambda * x);
        self.sum_lam2_x.add(lam2 * x);
        self.sum_lam2_x2.add(lam2 * x * x);
        self.sum_x.add(x);
        self.sum_x2.add(x * x);
        self.sum_lam2_sig2.add(lam2 * sig2_t);
        self.sum_v_lamp.add(v_t * lamp);
        if let Some(h) = self.history.as_mut() {
            h.push((lambda, x));
        }
        self.t = obs.t;
        Ok(())
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn sum_lam(&self) -> f64 {
        self.sum_lam.value()
    }

    pub fn sum_lam2(&self) -> f64 {
        self.sum_lam2.value()
    }

    pub fn sum_lam_x(&self) -> f64 {
        self.sum_lam_x.value()
    }

    pub fn sum_lam2_x(&self) -> f64 {
        self.sum_lam2_x.value()
    }

    pub fn sum_lam2_x2(&self) -> f64 {
        self.sum_lam2_x2.value()
    }

    pub fn sum_x(&self) -> f64 {
        self.sum_x.value()
    }

    pub fn sum_x2(&self) -> f64 {
        self.sum_x2.value()
    }

    pub fn sum_lam2_sig2(&self) -> f64 {
        self.sum_lam2_sig2.value()
    }

    pub fn sum_v_lamp(&self) -> f64 {
        self.sum_v_lamp.value()
    }

    /// Retained `(lambda_i, X_i)` pairs, or `None` for constant-memory mode.
    pub fn history(&self) -> Option<&[(f64, f64)]> {
        self.history.as_deref()
    }
}
