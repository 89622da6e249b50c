//! Influence-function confidence sequences for heavy-tailed streams.
//!
//! Instead of weighting observations linearly, this family passes each
//! centered, scaled observation through a bounded-growth influence function
//! `phi` and keeps, at every time, the interval of candidate means where
//! the accumulated influence stays inside a threshold band:
//!
//! ```text
//! f_t(m) = sum_i phi(lam_i (X_i - m)),   band |f_t(m)| <= c_t
//! c_t = sum_i lam_i^2 sig_i^2 / 2 + log(2/alpha)        (variance route)
//! c_t = sum_i v_i lam_i^p / p  + log(2/alpha)            (p-th moment route)
//! ```
//!
//! `f_t` is strictly decreasing in `m`, so the band is the interval between
//! the roots of `f_t(m) = +c_t` and `f_t(m) = -c_t`, found by bracketed
//! bisection. The two-sided band keeps time-uniform coverage `1 - alpha`
//! under nothing more than the per-step conditional moment bounds; no
//! light-tail assumption enters.

use crate::config::{CsConfig, Observation};
use crate::error::CsError;
use crate::kahan::NeumaierSum;
use crate::schedules::LambdaSchedule;
use crate::set::ConfidenceSet;
use crate::stream::StreamState;

/// The influence function `phi` of order `p` in (1, 2]:
///
/// ```text
/// phi(x) =  log(1 + x + |x|^p / p)   for x >= 0
/// phi(x) = -log(1 - x + |x|^p / p)   for x < 0
/// ```
///
/// It is increasing, vanishes at 0, is odd, and is sandwiched between
/// `-log(1 - x + |x|^p/p)` and `log(1 + x + |x|^p/p)` everywhere, which is
/// exactly what the supermartingale construction needs.
#[derive(Debug, Clone, Copy)]
pub struct InfluenceFn {
    p: f64,
}

impl InfluenceFn {
    pub fn new(p: f64) -> Result<Self, CsError> {
        if !(p > 1.0 && p <= 2.0) {
            return Err(CsError::InvalidConfig(format!(
                "influence order p must lie in (1, 2], got {p}"
            )));
        }
        Ok(InfluenceFn { p })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn phi(&self, x: f64) -> f64 {
        let a = x.abs();
        // |x|^p via multiplication at p = 2 keeps the p-family bit-identical
        // to the variance family when they coincide.
        let ap = if self.p == 2.0 { a * a } else { a.powf(self.p) };
        let inner = a + ap / self.p;
        if x >= 0.0 {
            inner.ln_1p()
        } else {
            -inner.ln_1p()
        }
    }
}

/// Two-sided threshold at the running state: moment route for `p < 2`,
/// variance route at `p = 2`. `log_level` is `log(2/alpha)` two-sided or
/// `log(1/alpha)` one-sided.
fn threshold(state: &StreamState, p: f64, log_level: f64) -> f64 {
    if p == 2.0 {
        state.sum_lam2_sig2() / 2.0 + log_level
    } else {
        state.sum_v_lamp() / p + log_level
    }
}

/// A tracked candidate mean with incrementally maintained functionals, so
/// membership queries cost O(1) per step instead of a root-find.
#[derive(Debug, Clone)]
struct Probe {
    m: f64,
    /// Running `f_t(m)`.
    f: NeumaierSum,
    /// Running `sum log(1 + z + z^2/2)` with `z = lam(x - m)`.
    log_up: NeumaierSum,
    /// Running `sum log(1 - z + z^2/2)`.
    log_dn: NeumaierSum,
    /// Whether any past set has excluded `m` (for running intersection).
    ever_out: bool,
}

#[derive(Debug, Clone)]
pub struct CatoniEstimator {
    config: CsConfig,
    schedule: LambdaSchedule,
    influence: InfluenceFn,
    state: StreamState,
    one_sided: bool,
    tighter: bool,
    probes: Vec<Probe>,
}

impl CatoniEstimator {
    pub fn new(config: CsConfig, schedule: LambdaSchedule) -> Result<Self, CsError> {
        config.validate()?;
        schedule.validate()?;
        Ok(CatoniEstimator {
            influence: InfluenceFn::new(config.p)?,
            state: StreamState::new(config.p, true),
            config,
            schedule,
            one_sided: false,
            tighter: false,
            probes: Vec::new(),
        })
    }

    /// Keep only the lower bound, with the one-sided threshold
    /// `log(1/alpha)` in place of `log(2/alpha)`; the set becomes
    /// `[m_lower, +inf)`.
    pub fn one_sided(mut self) -> Self {
        self.one_sided = true;
        self
    }

    /// Switch tracked-membership tests to the sharper paired products
    /// `prod (1 +- lam_i (X_i - m) + lam_i^2 (X_i - m)^2 / 2) e^{-lam_i^2 sig_i^2/2}`,
    /// both required `<= 2/alpha`. The resulting set is contained in the
    /// influence band but is not an interval in general, so only membership
    /// is exposed, never endpoints.
    pub fn tighter(mut self) -> Self {
        self.tighter = true;
        self
    }

    pub fn config(&self) -> &CsConfig {
        &self.config
    }

    pub fn influence(&self) -> &InfluenceFn {
        &self.influence
    }

    pub fn state(&self) -> &StreamState {
        &self.state
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

    fn effective_v(&self, obs: &Observation) -> f64 {
        obs.v_t.unwrap_or(self.config.v)
    }

    pub fn advance(&mut self, obs: &Observation) -> Result<(), CsError> {
        let lambda = self.schedule.next(obs.t)?;
        let sig2 = self.effective_sig2(obs)?;
        let v = self.effective_v(obs);
        self.state.update(lambda, obs, sig2, v)?;
        self.schedule.record(obs.x);
        let tighter = self.tighter;
        let influence = self.influence;
        for probe in &mut self.probes {
            let z = lambda * (obs.x - probe.m);
            probe.f.add(influence.phi(z));
            if tighter {
                let up = z + z * z / 2.0;
                let dn = -z + z * z / 2.0;
                // 1 + z + z^2/2 has minimum 1/2 over the reals; the product
                // factors can never be nonpositive.
                assert!(up > -1.0 && dn > -1.0, "product factor not positive");
                probe.log_up.add(up.ln_1p());
                probe.log_dn.add(dn.ln_1p());
            }
        }
        // Flag probes the fresh set excludes, so running-intersection
        // membership stays O(1) per step.
        if !self.probes.is_empty() {
            let log2a = (2.0 / self.config.alpha).ln();
            let c_two = threshold(&self.state, self.config.p, log2a);
            let c_one = threshold(&self.state, self.config.p, (1.0 / self.config.alpha).ln());
            let sig_half = self.state.sum_lam2_sig2() / 2.0;
            for probe in &mut self.probes {
                let inside = if tighter {
                    probe.log_up.value() - sig_half <= log2a
                        && probe.log_dn.value() - sig_half <= log2a
                } else if self.one_sided {
                    probe.f.value() <= c_one
                } else {
                    probe.f.value().abs() <= c_two
                };
                probe.ever_out |= !inside;
            }
        }
        Ok(())
    }

    /// Register a candidate mean for O(1) membership tracking; returns its
    /// index. Must be called before the first observation so the running
    /// functionals see the whole stream.
    pub fn track(&mut self, m: f64) -> usize {
        assert_eq!(self.state.t(), 0, "track probes before streaming");
        self.probes.push(Probe {
            m,
            f: NeumaierSum::new(),
            log_up: NeumaierSum::new(),
            log_dn: NeumaierSum::new(),
            ever_out: false,
        });
        self.probes.len() - 1
    }

    /// Membership of the tracked candidate in the current set (the running
    /// intersection of all sets when the intersect flag is on).
    pub fn tracked_contains(&self, idx: usize) -> bool {
        let probe = &self.probes[idx];
        if self.config.intersect {
            return !probe.ever_out;
        }
        if self.tighter {
            let sig_half = self.state.sum_lam2_sig2() / 2.0;
            let log2a = (2.0 / self.config.alpha).ln();
            return probe.log_up.value() - sig_half <= log2a
                && probe.log_dn.value() - sig_half <= log2a;
        }
        if self.one_sided {
            let c = threshold(&self.state, self.config.p, (1.0 / self.config.alpha).ln());
            probe.f.value() <= c
        } else {
            let c = threshold(&self.state, self.config.p, (2.0 / self.config.alpha).ln());
            probe.f.value().abs() <= c
        }
    }

    /// True iff the tracked candidate lies strictly below the current set,
    /// read off the running probe functional in O(1): the lower endpoint
    /// solves `f_t = +c_t` and `f_t` is decreasing, so the candidate is
    /// below exactly when `f_t(m) > c_t`.
    pub fn tracked_below(&self, idx: usize) -> bool {
        if self.state.t() == 0 {
            return false;
        }
        let log_level = if self.one_sided {
            (1.0 / self.config.alpha).ln()
        } else {
            (2.0 / self.config.alpha).ln()
        };
        let c = threshold(&self.state, self.config.p, log_level);
        self.probes[idx].f.value() > c
    }

    /// `f_t` evaluated from retained history; O(t).
    pub fn influence_sum(&self, m: f64) -> f64 {
        let history = self.state.history().expect("history is always retained here");
        history
            .iter()
            .map(|&(lam, x)| self.influence.phi(lam * (x - m)))
            .collect::<NeumaierSum>()
            .value()
    }

    /// True iff the lower endpoint of the current set exceeds `thr`,
    /// decided without root-finding: the lower root solves `f_t = +c_t`,
    /// and `f_t` is decreasing, so `m_lower > thr  iff  f_t(thr) > c_t`.
    pub fn lower_exceeds(&self, thr: f64) -> bool {
        if self.state.t() == 0 {
            return false;
        }
        let log_level = if self.one_sided {
            (1.0 / self.config.alpha).ln()
        } else {
            (2.0 / self.config.alpha).ln()
        };
        let c = threshold(&self.state, self.config.p, log_level);
        self.influence_sum(thr) > c
    }

    /// The confidence set at the current time, by bracketed bisection on
    /// the strictly decreasing influence sum. The whole line before any
    /// data.
    pub fn set(&self) -> Result<ConfidenceSet, CsError> {
        if self.state.t() == 0 {
            return Ok(ConfidenceSet::all());
        }
        let center = self.state.sum_lam_x() / self.state.sum_lam();
        let history = self.state.history().expect("history is always retained here");
        let f = |m: f64| {
            history
                .iter()
                .map(|&(lam, x)| self.influence.phi(lam * (x - m)))
                .collect::<NeumaierSum>()
                .value()
        };
        if self.one_sided {
            let c = threshold(&self.state, self.config.p, (1.0 / self.config.alpha).ln());
            let lower = solve_decreasing(&f, c, center, self.state.t())?;
            Ok(ConfidenceSet::interval(lower, f64::INFINITY))
        } else {
            let c = threshold(&self.state, self.config.p, (2.0 / self.config.alpha).ln());
            let lower = solve_decreasing(&f, c, center, self.state.t())?;
            let upper = solve_decreasing(&f, -c, center, self.state.t())?;
            Ok(ConfidenceSet::interval(lower, upper))
        }
    }

    pub fn step(&mut self, obs: &Observation) -> Result<ConfidenceSet, CsError> {
        self.advance(obs)?;
        self.set()
    }

    /// The sharper paired-product membership test for an arbitrary `m`,
    /// evaluated in log space over the retained history.
    pub fn tighter_membership(&self, m: f64) -> bool {
        let history = self.state.history().expect("history is always retained here");
        let mut log_up = NeumaierSum::new();
        let mut log_dn = NeumaierSum::new();
        for &(lam, x) in history {
            let z = lam * (x - m);
            let up = z + z * z / 2.0;
            let dn = -z + z * z / 2.0;
            assert!(up > -1.0 && dn > -1.0, "product factor not positive");
            log_up.add(up.ln_1p());
            log_dn.add(dn.ln_1p());
        }
        let sig_half = self.state.sum_lam2_sig2() / 2.0;
        let log2a = (2.0 / self.config.alpha).ln();
        log_up.value() - sig_half <= log2a && log_dn.value() - sig_half <= log2a
    }
}

/// Solves `f(m) = target` for a strictly decreasing `f`, bracketing by
/// geometric expansion around `center` and bisecting to absolute tolerance
/// `1e-9 * (1 + |m|)`.
pub(crate) fn solve_decreasing<F: Fn(f64) -> f64>(
    f: &F,
    target: f64,
    center: f64,
    t: u64,
) -> Result<f64, CsError> {
    let g = |m: f64| f(m) - target;
    let mut w = 1.0;
    let (mut lo, mut hi) = (center - w, center + w);
    let (mut glo, mut ghi) = (g(lo), g(hi));
    let mut doublings = 0u32;
    // Decreasing g: we need g(lo) >= 0 >= g(hi).
    while glo < 0.0 || ghi > 0.0 {
        doublings += 1;
        if doublings > 64 {
            return Err(CsError::RootFinding(format!(
                "no sign change after 64 doublings at t={t}: target={target}, \
                 g({lo})={glo}, g({hi})={ghi}"
            )));
        }
        w *= 2.0;
        if glo < 0.0 {
            lo = center - w;
            glo = g(lo);
        }
        if ghi > 0.0 {
            hi = center + w;
            ghi = g(hi);
        }
    }
    if glo == 0.0 {
        return Ok(lo);
    }
    if ghi == 0.0 {
        return Ok(hi);
    }
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..200 {
        mid = 0.5 * (lo + hi);
        if hi - lo <= 1e-9 * (1.0 + mid.abs()) {
            return Ok(mid);
        }
        let gm = g(mid);
        if gm >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(mid)
}

/// Deterministic width certificate for a nonrandom coefficient prefix: when
///
/// ```text
/// (sum lam_i)^2 - 2 (sum lam_i^2) (sigma2 sum lam_i^2 + log(2/eps) + log(2/alpha)) >= 0
/// ```
///
/// the set width at that time is, with probability at least `1 - eps`, at
/// most
///
/// ```text
/// 4 (sigma2 sum lam_i^2 + log(2/eps) + log(2/alpha)) / sum lam_i .
/// ```
///
/// Returns `None` when the condition fails. For a constant coefficient
/// `Lambda` and `sigma2 = 1` the condition reads
/// `(1/2 - Lambda^2) t >= log(2/eps) + log(2/alpha)`.
pub fn width_bound(lambdas: &[f64], sigma2: f64, alpha: f64, eps: f64) -> Option<f64> {
    let sum_l: NeumaierSum = lambdas.iter().copied().collect();
    let sum_l2: NeumaierSum = lambdas.iter().map(|l| l * l).collect();
    let sum_l = sum_l.value();
    let sum_l2 = sum_l2.value();
    let load = sigma2 * sum_l2 + (2.0 / eps).ln() + (2.0 / alpha).ln();
    let condition = sum_l * sum_l - 2.0 * sum_l2 * load;
    (condition >= 0.0).then(|| 4.0 * load / sum_l)
}
