//! Predictable coefficient schedules.
//!
//! Every estimator weights observation `X_t` by a coefficient `lambda_t`
//! that may depend on the configuration and on observations `1..t-1` only.
//! This module collects the closed-form tunings for each estimator family
//! plus generic constant, capped, power-decay, and table-driven schedules.
//!
//! Protocol: call [`LambdaSchedule::next`] to obtain `lambda_t` before the
//! observation `X_t` is consumed, then [`LambdaSchedule::record`] with `X_t`
//! afterwards. Only the self-normalized tuning is stateful; for every other
//! kind `record` is a no-op.

use crate::error::CsError;
use crate::kahan::NeumaierSum;

/// Coefficient for the additive-martingale family: `sqrt((2/alpha - 1) / (sigma2 * t))`.
///
/// Plugging this into that family's interval makes the width deterministic
/// and minimal over constant-rate tunings.
pub fn ds_lambda(t: u64, alpha: f64, sigma2: f64) -> f64 {
    ((2.0 / alpha - 1.0) / (sigma2 * t as f64)).sqrt()
}

/// Coefficient for the self-normalized family, tuned from the running
/// moments of past observations:
/// `sqrt(6 t log(2/alpha) / (t (S2 + 2 sigma2 t) - S1^2))`
/// where `S1`, `S2` are the sums of `X_i` and `X_i^2` over `i < t`.
///
/// The denominator is positive whenever `sigma2 > 0` (it is `t` times a
/// nonnegative quadratic plus `2 sigma2 t^2`), but a guard is kept against
/// degenerate inputs.
pub fn sn_lambda(
    t: u64,
    alpha: f64,
    sigma2: f64,
    prev_sum_x: f64,
    prev_sum_x2: f64,
) -> Result<f64, CsError> {
    let tf = t as f64;
    let denom = tf * (prev_sum_x2 + 2.0 * sigma2 * tf) - prev_sum_x * prev_sum_x;
    if denom <= 0.0 {
        return Err(CsError::Schedule {
            index: t,
            reason: format!("nonpositive denominator {denom} in self-normalized tuning"),
        });
    }
    Ok((6.0 * tf * (2.0 / alpha).ln() / denom).sqrt())
}

/// Effective index floor for the influence-function tuning: the
/// user-supplied floor raised, if necessary, to the smallest index with
/// `s > 2 log(2/alpha)` so the tuning below is always real.
pub fn catoni_floor(alpha: f64, floor_index: u64) -> u64 {
    let twol = 2.0 * (2.0 / alpha).ln();
    floor_index.max(twol.ceil() as u64 + 1)
}

/// Coefficient for the influence-function family at effective index
/// `s = max(t, floor)`:
/// `eta_s^2 = 2 sigma2 log(2/alpha) / (s - 2 log(2/alpha))`,
/// `lambda = sqrt(2 log(2/alpha) / (s (sigma2 + eta_s^2)))`.
///
/// The index floor keeps early coefficients bounded; it is raised
/// automatically when `alpha` is small enough that the user floor would
/// make `eta_s^2` undefined.
pub fn catoni_lambda(t: u64, alpha: f64, sigma2: f64, floor_index: u64) -> f64 {
    let s = t.max(catoni_floor(alpha, floor_index)) as f64;
    let l = (2.0 / alpha).ln();
    let eta2 = 2.0 * sigma2 * l / (s - 2.0 * l);
    (2.0 * l / (s * (sigma2 + eta2))).sqrt()
}

/// Coefficient for the p-th-moment family:
/// `0.5 * (2 p log(2/alpha) / (t v))^(1/p)`.
pub fn p_catoni_lambda(t: u64, alpha: f64, p: f64, v: f64) -> f64 {
    0.5 * (2.0 * p * (2.0 / alpha).ln() / (t as f64 * v)).powf(1.0 / p)
}

/// `min(1/sqrt(t), cap)`.
pub fn capped_inv_sqrt(t: u64, cap: f64) -> f64 {
    (1.0 / (t as f64).sqrt()).min(cap)
}

/// Power-decay schedule `scale * t^(-1/2 - gamma)` for `0 <= gamma < 1/2`,
/// used with streams whose variance bounds vary per step.
pub fn het_matched_lambda(t: u64, gamma: f64, scale: f64) -> f64 {
    scale * (t as f64).powf(-0.5 - gamma)
}

/// A coefficient generator. See the module docs for the `next`/`record`
/// protocol.
#[derive(Debug, Clone)]
pub enum LambdaSchedule {
    /// The same coefficient at every index.
    Constant { value: f64 },
    /// `min(1/sqrt(t), cap)`.
    InvSqrtCapped { cap: f64 },
    /// The additive-martingale tuning [`ds_lambda`].
    DsTuned { alpha: f64, sigma2: f64 },
    /// The self-normalized tuning [`sn_lambda`]; keeps private shadow sums
    /// of past observations rather than borrowing estimator state.
    SnTuned {
        alpha: f64,
        sigma2: f64,
        shadow_x: NeumaierSum,
        shadow_x2: NeumaierSum,
    },
    /// The influence-function tuning [`catoni_lambda`].
    CatoniTuned {
        alpha: f64,
        sigma2: f64,
        floor_index: u64,
    },
    /// The p-th-moment tuning [`p_catoni_lambda`].
    PCatoniTuned { alpha: f64, p: f64, v: f64 },
    /// The power-decay schedule [`het_matched_lambda`].
    HetMatched { gamma: f64, scale: f64 },
    /// Explicit per-index coefficients; the last entry extends to all later
    /// indices so ad-hoc experiments stay reproducible past the table end.
    CustomTable { table: Vec<f64> },
}

impl LambdaSchedule {
    pub fn constant(value: f64) -> Result<Self, CsError> {
        let s = LambdaSchedule::Constant { value };
        s.validate()?;
        Ok(s)
    }

    pub fn inv_sqrt_capped(cap: f64) -> Result<Self, CsError> {
        let s = LambdaSchedule::InvSqrtCapped { cap };
        s.validate()?;
        Ok(s)
    }

    pub fn ds_tuned(alpha: f64, sigma2: f64) -> Result<Self, CsError> {
        let s = LambdaSchedule::DsTuned { alpha, sigma2 };
        s.validate()?;
        Ok(s)
    }

    pub fn sn_tuned(alpha: f64, sigma2: f64) -> Result<Self, CsError> {
        let s = LambdaSchedule::SnTuned {
            alpha,
            sigma2,
            shadow_x: NeumaierSum::new(),
            shadow_x2: NeumaierSum::new(),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn catoni_tuned(alpha: f64, sigma2: f64, floor_index: u64) -> Result<Self, CsError> {
        let s = LambdaSchedule::CatoniTuned {
            alpha,
            sigma2,
            floor_index,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn p_catoni_tuned(alpha: f64, p: f64, v: f64) -> Result<Self, CsError> {
        let s = LambdaSchedule::PCatoniTuned { alpha, p, v };
        s.validate()?;
        Ok(s)
    }

    pub fn het_matched(gamma: f64, scale: f64) -> Result<Self, CsError> {
        let s = LambdaSchedule::HetMatched { gamma, scale };
        s.validate()?;
        Ok(s)
    }

    pub fn custom(table: Vec<f64>) -> Result<Self, CsError> {
        let s = LambdaSchedule::CustomTable { table };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), CsError> {
        let bad = |reason: String| Err(CsError::InvalidConfig(reason));
        let level_ok = |alpha: f64| alpha > 0.0 && alpha < 1.0;
        match self {
            LambdaSchedule::Constant { value } => {
                if !(value.is_finite() && *value > 0.0) {
                    return bad(format!("constant coefficient must be positive, got {value}"));
                }
            }
            LambdaSchedule::InvSqrtCapped { cap } => {
                if !(cap.is_finite() && *cap > 0.0) {
                    return bad(format!("cap must be positive, got {cap}"));
                }
            }
            LambdaSchedule::DsTuned { alpha, sigma2 }
            | LambdaSchedule::CatoniTuned { alpha, sigma2, .. } => {
                if !level_ok(*alpha) || !(*sigma2 > 0.0) {
                    return bad(format!(
                        "tuning needs alpha in (0,1) and sigma2 > 0, got alpha={alpha}, sigma2={sigma2}"
                    ));
                }
            }
            LambdaSchedule::SnTuned { alpha, sigma2, .. } => {
                if !level_ok(*alpha) || !(*sigma2 > 0.0) {
                    return bad(format!(
                        "tuning needs alpha in (0,1) and sigma2 > 0, got alpha={alpha}, sigma2={sigma2}"
                    ));
                }
            }
            LambdaSchedule::PCatoniTuned { alpha, p, v } => {
                if !level_ok(*alpha) || !(*p > 1.0 && *p <= 2.0) || !(*v > 0.0) {
                    return bad(format!(
                        "tuning needs alpha in (0,1), p in (1,2], v > 0; got alpha={alpha}, p={p}, v={v}"
                    ));
                }
            }
            LambdaSchedule::HetMatched { gamma, scale } => {
                if !(*gamma >= 0.0 && *gamma < 0.5) || !(scale.is_finite() && *scale > 0.0) {
                    return bad(format!(
                        "power-decay schedule needs 0 <= gamma < 1/2 and scale > 0; got gamma={gamma}, scale={scale}"
                    ));
                }
            }
            LambdaSchedule::CustomTable { table } => {
                if table.is_empty() {
                    return bad("coefficient table is empty".to_string());
                }
                if let Some(v) = table.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
                    return bad(format!("coefficient table entry {v} is not positive"));
                }
            }
        }
        Ok(())
    }

    /// The coefficient for index `t >= 1`. Must be called before `X_t` is
    /// recorded; the result depends only on configuration and on
    /// observations `1..t-1`.
    pub fn next(&self, t: u64) -> Result<f64, CsError> {
        if t == 0 {
            return Err(CsError::Schedule {
                index: 0,
                reason: "indices start at 1".to_string(),
            });
        }
        match self {
            LambdaSchedule::Constant { value } => Ok(*value),
            LambdaSchedule::InvSqrtCapped { cap } => Ok(capped_inv_sqrt(t, *cap)),
            LambdaSchedule::DsTuned { alpha, sigma2 } => Ok(ds_lambda(t, *alpha, *sigma2)),
            LambdaSchedule::SnTuned {
                alpha,
                sigma2,
                shadow_x,
                shadow_x2,
            } => sn_lambda(t, *alpha, *sigma2, shadow_x.value(), shadow_x2.value()),
            LambdaSchedule::CatoniTuned {
                alpha,
                sigma2,
                floor_index,
            } => Ok(catoni_lambda(t, *alpha, *sigma2, *floor_index)),
            LambdaSchedule::PCatoniTuned { alpha, p, v } => Ok(p_catoni_lambda(t, *alpha, *p, *v)),
            LambdaSchedule::HetMatched { gamma, scale } => {
                Ok(het_matched_lambda(t, *gamma, *scale))
            }
            LambdaSchedule::CustomTable { table } => {
                let idx = ((t - 1) as usize).min(table.len() - 1);
                Ok(table[idx])
            }
        }
    }

    /// Feed the observation that followed the last `next` call. Only the
    /// self-normalized tuning consumes it.
    pub fn record(&mut self, x: f64) {
        if let LambdaSchedule::SnTuned {
            shadow_x,
            shadow_x2,
            ..
        } = self
        {
            shadow_x.add(x);
            shadow_x2.add(x * x);
        }
    }
}
