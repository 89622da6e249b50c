//! Streaming confidence sequences for means of heavy-tailed data.
//!
//! A confidence sequence is a sequence of sets that contains the true mean
//! at every time simultaneously with probability at least `1 - alpha`, so it
//! stays valid under continuous monitoring and optional stopping, where
//! classical fixed-sample intervals silently fail. Everything here assumes
//! only a conditional variance bound (or, in the `p < 2` extension, a
//! central `p`-th moment bound) on a real-valued stream; no boundedness, no
//! sub-Gaussianity, no parametric model.
//!
//! Three families are implemented, in increasing sharpness:
//!
//! - [`ds`]: a closed-form interval around a weighted running mean, whose
//!   width is deterministic given the coefficient schedule.
//! - [`sn`]: a self-normalized construction that excludes two quadratic
//!   "anticonfidence" regions; its complement can be a union of up to three
//!   pieces, optionally cleaned up by a companion interval at a split level.
//! - [`catoni`]: an influence-function estimator whose set is cut from a
//!   strictly decreasing score by bisection; variants include a one-sided
//!   ray, an implicit sharper membership test, a `p`-th moment mode for
//!   infinite variance, per-observation variance bounds, and, in
//!   [`stitch`], an epoch-stitched version tracking the iterated-logarithm
//!   envelope.
//!
//! [`baselines`] provides the classical references (Chebyshev and
//! exponential-bound fixed-sample intervals, the two-sided normal mixture,
//! a predictably-mixed sub-Gaussian sequence, a closed-form stitched
//! envelope, and a union-bound sequence of per-time intervals), and
//! [`method`] puts every method behind one streaming interface keyed by the
//! command-line method ids.
//!
//! Coefficients ("schedules") are predictable: each `lambda_t` is computed
//! before observation `t` arrives, which is what makes the underlying
//! supermartingale arguments sound. [`schedules`] implements the tuned
//! rules for each family plus generic constant, capped, power-decay, and
//! table schedules.
//!
//! # Example
//!
//! ```
//! use heavycs::{CsConfig, CsRunner, Method, MethodOptions, Observation};
//!
//! let config = CsConfig::new(0.05).with_sigma2(1.0);
//! let mut runner = CsRunner::new(Method::Catoni, config, MethodOptions::default())?;
//! for (i, x) in [0.4, -1.3, 0.9, 0.1, -0.6].into_iter().enumerate() {
//!     runner.advance(&Observation::new(i as u64 + 1, x))?;
//! }
//! let set = runner.set()?;
//! assert!(set.contains(0.0));
//! # Ok::<(), heavycs::CsError>(())
//! ```

pub mod baselines;
pub mod catoni;
pub mod config;
pub mod ds;
pub mod error;
pub mod kahan;
pub mod method;
pub mod schedules;
pub mod set;
pub mod sn;
pub mod stitch;
pub mod stream;

pub use config::{CsConfig, Observation};
pub use error::CsError;
pub use method::{CsRunner, Method, MethodOptions};
pub use schedules::LambdaSchedule;
pub use set::{ConfidenceSet, Interval};
