use crate::error::CsError;

/// Static parameters shared by every estimator in this crate.
///
/// `sigma2` is the variance bound used by the finite-variance methods
/// (`p == 2`, homoscedastic streams). `v` is the central `p`-th moment bound
/// used when `p < 2`. `alpha_split` is an optional `(alpha', alpha'')` pair
/// summing to `alpha`, consumed only by the self-normalized method when a
/// companion interval is used to remove spurious pieces of its set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsConfig {
    /// Error level in (0, 1); the sets cover the mean for all times
    /// simultaneously with probability at least `1 - alpha`.
    pub alpha: f64,
    /// Moment order in (1, 2]. At exactly 2 the variance bound applies.
    pub p: f64,
    /// Upper bound on the conditional variance of each observation.
    pub sigma2: f64,
    /// Upper bound on the conditional central p-th moment (used when p < 2).
    pub v: f64,
    /// Take per-observation variance bounds from the stream instead of
    /// `sigma2`.
    pub heteroscedastic: bool,
    /// Optional `(alpha', alpha'')` split for the self-normalized method.
    pub alpha_split: Option<(f64, f64)>,
    /// Emit the running intersection of all sets so far instead of the
    /// per-time set.
    pub intersect: bool,
}

impl CsConfig {
    /// A finite-variance configuration with the given level and unit
    /// variance bound; adjust fields as needed.
    pub fn new(alpha: f64) -> Self {
        CsConfig {
            alpha,
            p: 2.0,
            sigma2: 1.0,
            v: 1.0,
            heteroscedastic: false,
            alpha_split: None,
            intersect: false,
        }
    }

    pub fn with_sigma2(mut self, sigma2: f64) -> Self {
        self.sigma2 = sigma2;
        self
    }

    pub fn with_moment(mut self, p: f64, v: f64) -> Self {
        self.p = p;
        self.v = v;
        self
    }

    pub fn heteroscedastic(mut self) -> Self {
        self.heteroscedastic = true;
        self
    }

    pub fn validate(&self) -> Result<(), CsError> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(CsError::InvalidConfig(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if !(self.p > 1.0 && self.p <= 2.0) {
            return Err(CsError::InvalidConfig(format!(
                "moment order p must lie in (1, 2], got {}",
                self.p
            )));
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return Err(CsError::InvalidConfig(format!(
                "variance bound sigma2 must be positive and finite, got {}",
                self.sigma2
            )));
        }
        if !(self.v > 0.0 && self.v.is_finite()) {
            return Err(CsError::InvalidConfig(format!(
                "moment bound v must be positive and finite, got {}",
                self.v
            )));
        }
        if let Some((a1, a2)) = self.alpha_split {
            let ok = a1 > 0.0 && a2 > 0.0 && ((a1 + a2) - self.alpha).abs() <= 1e-12 * self.alpha;
            if !ok {
                return Err(CsError::InvalidConfig(format!(
                    "alpha_split ({a1}, {a2}) must be positive and sum to alpha={}",
                    self.alpha
                )));
            }
        }
        Ok(())
    }
}

/// One stream element. Indices are 1-based and must arrive in order.
///
/// `sigma_t` is a per-step conditional standard deviation bound and `v_t` a
/// per-step p-th moment bound; both must be determined before `x` is
/// realized (they play the role of predictable processes).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub t: u64,
    pub x: f64,
    pub sigma_t: Option<f64>,
    pub v_t: Option<f64>,
}

impl Observation {
    pub fn new(t: u64, x: f64) -> Self {
        Observation {
            t,
            x,
            sigma_t: None,
            v_t: None,
        }
    }

    pub fn with_sigma(mut self, sigma_t: f64) -> Self {
        self.sigma_t = Some(sigma_t);
        self
    }

    pub fn with_v(mut self, v_t: f64) -> Self {
        self.v_t = Some(v_t);
        self
    }
}
