//! One streaming interface over every estimator and reference method.
//!
//! `CsRunner` erases the differences between the four native estimators and
//! the closed-form references so the experiment harness and the command line
//! can drive any method id through the same loop: `advance` per observation,
//! `set` for the current confidence set, and O(1) membership probes for
//! candidates registered up front with `track`.

use crate::baselines;
use crate::catoni::CatoniEstimator;
use crate::config::{CsConfig, Observation};
use crate::ds::DsEstimator;
use crate::error::CsError;
use crate::kahan::NeumaierSum;
use crate::schedules::LambdaSchedule;
use crate::set::ConfidenceSet;
use crate::sn::SnEstimator;
use crate::stitch::{StitchPlan, StitchedEstimator};
use crate::stream::StreamState;

/// Method identifiers, spelled exactly as on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Ds,
    Sn,
    Catoni,
    CatoniStitched,
    CatoniOneSided,
    PCatoni,
    Chebyshev,
    Chernoff,
    NormalMixture,
    PmHoeffding,
    StitchedSubg,
    TrivialCatoni,
    CatoniCi,
}

impl Method {
    pub const ALL: [Method; 13] = [
        Method::Ds,
        Method::Sn,
        Method::Catoni,
        Method::CatoniStitched,
        Method::CatoniOneSided,
        Method::PCatoni,
        Method::Chebyshev,
        Method::Chernoff,
        Method::NormalMixture,
        Method::PmHoeffding,
        Method::StitchedSubg,
        Method::TrivialCatoni,
        Method::CatoniCi,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Ds => "ds",
            Method::Sn => "sn",
            Method::Catoni => "catoni",
            Method::CatoniStitched => "catoni-stitched",
            Method::CatoniOneSided => "catoni-onesided",
            Method::PCatoni => "p-catoni",
            Method::Chebyshev => "chebyshev",
            Method::Chernoff => "chernoff",
            Method::NormalMixture => "nmix",
            Method::PmHoeffding => "pm-hoeffding",
            Method::StitchedSubg => "stitched-subg",
            Method::TrivialCatoni => "trivial-catoni",
            Method::CatoniCi => "catoni-ci",
        }
    }

    pub fn parse(s: &str) -> Result<Method, CsError> {
        Method::ALL
            .iter()
            .copied()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                CsError::InvalidConfig(format!(
                    "unknown method '{s}'; expected one of {}",
                    Method::ALL.map(|m| m.name()).join(", ")
                ))
            })
    }

    /// Whether the method's guarantee is time-uniform (a confidence
    /// sequence) rather than per-time (a confidence interval). The two
    /// fixed-sample intervals are the deliberate negative controls.
    pub fn is_anytime(&self) -> bool {
        !matches!(self, Method::Chebyshev | Method::Chernoff | Method::CatoniCi)
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Construction knobs that are not part of `CsConfig`.
#[derive(Debug, Clone)]
pub struct MethodOptions {
    /// Coefficient schedule; `None` selects the method's own tuning.
    pub schedule: Option<LambdaSchedule>,
    /// Index floor for the variance-tuned coefficient.
    pub floor_index: u64,
    /// Last planned epoch of the stitched method (`2^(max_epoch+1) - 1` is
    /// the largest usable horizon).
    pub max_epoch: u32,
}

impl Default for MethodOptions {
    fn default() -> Self {
        MethodOptions {
            schedule: None,
            floor_index: 9,
            max_epoch: 60,
        }
    }
}

fn default_schedule(
    method: Method,
    config: &CsConfig,
    floor_index: u64,
) -> Result<LambdaSchedule, CsError> {
    match method {
        Method::Ds => LambdaSchedule::ds_tuned(config.alpha, config.sigma2),
        Method::Sn => {
            let quad_alpha = config
                .alpha_split
                .map(|(a1, _)| a1)
                .unwrap_or(0.9 * config.alpha);
            LambdaSchedule::sn_tuned(quad_alpha, config.sigma2)
        }
        Method::Catoni | Method::CatoniOneSided | Method::PmHoeffding => {
            LambdaSchedule::catoni_tuned(config.alpha, config.sigma2, floor_index)
        }
        Method::PCatoni => LambdaSchedule::p_catoni_tuned(config.alpha, config.p, config.v),
        other => Err(CsError::InvalidConfig(format!(
            "method '{other}' does not take a coefficient schedule"
        ))),
    }
}

/// A closed-form reference method behind the runner interface.
#[derive(Debug, Clone)]
pub struct BaselineRunner {
    kind: Method,
    config: CsConfig,
    t: u64,
    sum_x: NeumaierSum,
    /// Retained only for the two history-driven kinds.
    xs: Vec<f64>,
    /// Weighted sums for the predictably-mixed method.
    weighted: Option<(StreamState, LambdaSchedule)>,
    probes: Vec<f64>,
    ever_out: Vec<bool>,
    running: Option<ConfidenceSet>,
}

impl BaselineRunner {
    fn new(kind: Method, config: CsConfig, schedule: Option<LambdaSchedule>) -> Result<Self, CsError> {
        config.validate()?;
        if config.heteroscedastic {
            return Err(CsError::InvalidConfig(format!(
                "method '{kind}' does not support per-observation variances"
            )));
        }
        let weighted = if kind == Method::PmHoeffding {
            let schedule = match schedule {
                Some(s) => s,
                None => default_schedule(kind, &config, 9)?,
            };
            schedule.validate()?;
            Some((StreamState::new(config.p, false), schedule))
        } else {
            if schedule.is_some() {
                return Err(CsError::InvalidConfig(format!(
                    "method '{kind}' does not take a coefficient schedule"
                )));
            }
            None
        };
        Ok(BaselineRunner {
            kind,
            config,
            t: 0,
            sum_x: NeumaierSum::new(),
            xs: Vec::new(),
            weighted,
            probes: Vec::new(),
            ever_out: Vec::new(),
            running: config.intersect.then(ConfidenceSet::all),
        })
    }

    fn retains_history(&self) -> bool {
        matches!(self.kind, Method::TrivialCatoni | Method::CatoniCi)
    }

    fn mean(&self) -> f64 {
        self.sum_x.value() / self.t as f64
    }

    /// The per-time set, before any running intersection.
    fn fresh_set(&self) -> Result<ConfidenceSet, CsError> {
        if self.t == 0 {
            return Ok(ConfidenceSet::all());
        }
        let (t, a, s2) = (self.t, self.config.alpha, self.config.sigma2);
        let iv = match self.kind {
            Method::Chebyshev => baselines::chebyshev_ci(t, self.mean(), s2, a),
            Method::Chernoff => baselines::chernoff_ci(t, self.mean(), s2, a),
            Method::NormalMixture => baselines::normal_mixture_cs(t, self.mean(), s2, a),
            Method::PmHoeffding => {
                let (state, _) = self.weighted.as_ref().expect("initialized for this kind");
                baselines::pm_hoeffding_cs(state, s2, a)
            }
            Method::StitchedSubg => {
                // The envelope is stated for unit variance: standardize the
                // mean estimate, then scale the set back.
                let sigma = s2.sqrt();
                let iv = baselines::stitched_subgaussian_cs(t, self.mean() / sigma, a);
                return Ok(ConfidenceSet::interval(sigma * iv.lo, sigma * iv.hi));
            }
            Method::TrivialCatoni => baselines::trivial_catoni_cs(&self.xs, t, s2, a)?,
            Method::CatoniCi => baselines::catoni_ci(&self.xs, t, s2, a)?,
            other => unreachable!("'{other}' is not a reference method"),
        };
        Ok(ConfidenceSet::interval(iv.lo, iv.hi))
    }

    fn membership_now(&self, m: f64) -> bool {
        if self.t == 0 {
            return true;
        }
        let (t, a, s2) = (self.t, self.config.alpha, self.config.sigma2);
        match self.kind {
            Method::TrivialCatoni => baselines::trivial_catoni_contains(&self.xs, t, s2, a, m),
            Method::CatoniCi => baselines::catoni_ci_contains(&self.xs, t, s2, a, m),
            _ => self
                .fresh_set()
                .expect("closed-form sets cannot fail")
                .contains(m),
        }
    }

    fn below_now(&self, m: f64) -> bool {
        if self.t == 0 {
            return false;
        }
        let (t, a, s2) = (self.t, self.config.alpha, self.config.sigma2);
        match self.kind {
            Method::TrivialCatoni => {
                baselines::trivial_catoni_lower_exceeds(&self.xs, t, s2, a, m)
            }
            Method::CatoniCi => baselines::catoni_ci_lower_exceeds(&self.xs, t, s2, a, m),
            _ => {
                let set = self.fresh_set().expect("closed-form sets cannot fail");
                match set.intervals().first() {
                    Some(iv) => m < iv.lo,
                    None => true,
                }
            }
        }
    }

    fn advance(&mut self, obs: &Observation) -> Result<(), CsError> {
        if obs.t != self.t + 1 {
            return Err(CsError::Sequencing {
                expected: self.t + 1,
                got: obs.t,
            });
        }
        if !obs.x.is_finite() {
            return Err(CsError::InvalidConfig(format!(
                "observation at t={} is not finite",
                obs.t
            )));
        }
        if let Some((state, schedule)) = &mut self.weighted {
            let lambda = schedule.next(obs.t)?;
            state.update(lambda, obs, self.config.sigma2, self.config.v)?;
            schedule.record(obs.x);
        }
        self.t = obs.t;
        self.sum_x.add(obs.x);
        if self.retains_history() {
            self.xs.push(obs.x);
        }
        // Exclusion flags only feed intersected membership; skip the
        // per-step (possibly O(t)) evaluations otherwise.
        if self.config.intersect {
            for i in 0..self.probes.len() {
                if !self.ever_out[i] && !self.membership_now(self.probes[i]) {
                    self.ever_out[i] = true;
                }
            }
        }
        if self.running.is_some() {
            // A not-yet-defined fixed-sample interval claims nothing, so it
            // intersects as the whole line.
            let fresh = match self.fresh_set() {
                Ok(s) => s,
                Err(CsError::LevelTooSmall { .. }) => ConfidenceSet::all(),
                Err(e) => return Err(e),
            };
            let running = self.running.take().expect("checked above");
            self.running = Some(running.intersect(&fresh));
        }
        Ok(())
    }

    fn set(&self) -> Result<ConfidenceSet, CsError> {
        match &self.running {
            Some(r) => Ok(r.clone()),
            None => self.fresh_set(),
        }
    }

    fn track(&mut self, m: f64) -> usize {
        assert_eq!(self.t, 0, "track probes before streaming");
        self.probes.push(m);
        self.ever_out.push(false);
        self.probes.len() - 1
    }

    fn tracked_contains(&self, idx: usize) -> bool {
        if self.config.intersect {
            !self.ever_out[idx]
        } else {
            self.membership_now(self.probes[idx])
        }
    }

    fn tracked_below(&self, idx: usize) -> bool {
        self.below_now(self.probes[idx])
    }
}

/// Any method, behind one streaming interface.
///
/// Membership probes must be registered with [`CsRunner::track`] before the
/// first observation. `tracked_below` reports on the per-time set; its first
/// true time coincides with the running-intersection crossing time, which is
/// what the crossing experiments record.
#[derive(Debug, Clone)]
pub enum CsRunner {
    Ds { est: DsEstimator, probes: Vec<f64> },
    Sn { est: SnEstimator, probes: Vec<f64> },
    Catoni { est: CatoniEstimator },
    Stitched { est: StitchedEstimator, intersect: bool },
    Baseline(BaselineRunner),
}

impl CsRunner {
    pub fn new(method: Method, config: CsConfig, opts: MethodOptions) -> Result<Self, CsError> {
        config.validate()?;
        if config.heteroscedastic
            && !matches!(
                method,
                Method::Ds | Method::Sn | Method::Catoni | Method::CatoniOneSided
            )
        {
            return Err(CsError::InvalidConfig(format!(
                "method '{method}' does not support per-observation variances"
            )));
        }
        match method {
            Method::Ds => {
                let schedule = match opts.schedule {
                    Some(s) => s,
                    None => default_schedule(method, &config, opts.floor_index)?,
                };
                Ok(CsRunner::Ds {
                    est: DsEstimator::new(config, schedule)?,
                    probes: Vec::new(),
                })
            }
            Method::Sn => {
                let mut config = config;
                if config.alpha_split.is_none() {
                    config.alpha_split =
                        Some((0.9 * config.alpha, 0.1 * config.alpha));
                }
                let schedule = match opts.schedule {
                    Some(s) => s,
                    None => default_schedule(method, &config, opts.floor_index)?,
                };
                Ok(CsRunner::Sn {
                    est: SnEstimator::new(config, schedule)?,
                    probes: Vec::new(),
                })
            }
            Method::Catoni | Method::CatoniOneSided | Method::PCatoni => {
                let schedule = match opts.schedule {
                    Some(s) => s,
                    None => default_schedule(method, &config, opts.floor_index)?,
                };
                let mut est = CatoniEstimator::new(config, schedule)?;
                if method == Method::CatoniOneSided {
                    est = est.one_sided();
                }
                Ok(CsRunner::Catoni { est })
            }
            Method::CatoniStitched => {
                if opts.schedule.is_some() {
                    return Err(CsError::InvalidConfig(
                        "the stitched method derives its coefficients from the epoch plan"
                            .to_string(),
                    ));
                }
                let plan = StitchPlan::new(config.alpha, opts.max_epoch)?;
                Ok(CsRunner::Stitched {
                    est: StitchedEstimator::new(plan, config.sigma2)?,
                    intersect: config.intersect,
                })
            }
            _ => Ok(CsRunner::Baseline(BaselineRunner::new(
                method,
                config,
                opts.schedule,
            )?)),
        }
    }

    pub fn method(&self) -> Method {
        match self {
            CsRunner::Ds { .. } => Method::Ds,
            CsRunner::Sn { .. } => Method::Sn,
            CsRunner::Catoni { est } => {
                if est.config().p < 2.0 {
                    Method::PCatoni
                } else {
                    Method::Catoni
                }
            }
            CsRunner::Stitched { .. } => Method::CatoniStitched,
            CsRunner::Baseline(b) => b.kind,
        }
    }

    pub fn t(&self) -> u64 {
        match self {
            CsRunner::Ds { est, .. } => est.t(),
            CsRunner::Sn { est, .. } => est.t(),
            CsRunner::Catoni { est } => est.t(),
            CsRunner::Stitched { est, .. } => est.t(),
            CsRunner::Baseline(b) => b.t,
        }
    }

    pub fn advance(&mut self, obs: &Observation) -> Result<(), CsError> {
        match self {
            CsRunner::Ds { est, .. } => est.advance(obs),
            CsRunner::Sn { est, .. } => est.advance(obs),
            CsRunner::Catoni { est } => est.advance(obs),
            CsRunner::Stitched { est, .. } => est.advance(obs.t, obs.x),
            CsRunner::Baseline(b) => b.advance(obs),
        }
    }

    pub fn set(&self) -> Result<ConfidenceSet, CsError> {
        match self {
            CsRunner::Ds { est, .. } => Ok(est.set()),
            CsRunner::Sn { est, .. } => Ok(est.set()),
            CsRunner::Catoni { est } => est.set(),
            CsRunner::Stitched { est, .. } => Ok(est.evaluate()?.set),
            CsRunner::Baseline(b) => b.set(),
        }
    }

    /// Registers a candidate mean for cheap membership tracking. Must be
    /// called before the first observation.
    pub fn track(&mut self, m: f64) -> usize {
        match self {
            CsRunner::Ds { est, probes } => {
                assert_eq!(est.t(), 0, "track probes before streaming");
                probes.push(m);
                probes.len() - 1
            }
            CsRunner::Sn { est, probes } => {
                assert_eq!(est.t(), 0, "track probes before streaming");
                probes.push(m);
                probes.len() - 1
            }
            CsRunner::Catoni { est } => est.track(m),
            CsRunner::Stitched { est, .. } => est.track(m),
            CsRunner::Baseline(b) => b.track(m),
        }
    }

    /// Membership of the tracked candidate in the current set (running
    /// intersection when the intersect flag is on).
    pub fn tracked_contains(&self, idx: usize) -> bool {
        match self {
            CsRunner::Ds { est, probes } => est.set().contains(probes[idx]),
            CsRunner::Sn { est, probes } => est.set().contains(probes[idx]),
            CsRunner::Catoni { est } => est.tracked_contains(idx),
            CsRunner::Stitched { est, intersect } => {
                if *intersect {
                    !est.tracked_ever_excluded(idx)
                } else {
                    est.tracked_contains(idx)
                }
            }
            CsRunner::Baseline(b) => b.tracked_contains(idx),
        }
    }

    /// Whether the tracked candidate lies strictly below the per-time set.
    pub fn tracked_below(&self, idx: usize) -> bool {
        match self {
            CsRunner::Ds { est, probes } => below_set(&est.set(), probes[idx]),
            CsRunner::Sn { est, probes } => below_set(&est.set(), probes[idx]),
            CsRunner::Catoni { est } => est.tracked_below(idx),
            CsRunner::Stitched { est, .. } => est.tracked_below(idx),
            CsRunner::Baseline(b) => b.tracked_below(idx),
        }
    }
}

/// `m` strictly below every point of the set; vacuously true for the empty
/// set (its lower bound is plus infinity by convention).
fn below_set(set: &ConfidenceSet, m: f64) -> bool {
    match set.intervals().first() {
        Some(iv) => m < iv.lo,
        None => true,
    }
}
