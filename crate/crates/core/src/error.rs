use thiserror::Error;

/// Errors shared by the estimators, schedules, and streaming state.
#[derive(Debug, Error)]
pub enum CsError {
    /// An observation arrived with an index other than `state.t + 1`.
    #[error("out-of-order observation: expected index {expected}, got {got}")]
    Sequencing { expected: u64, got: u64 },

    /// A schedule could not produce a usable coefficient at this index.
    #[error("schedule failure at index {index}: {reason}")]
    Schedule { index: u64, reason: String },

    /// Bracketing or bisection failed; carries a diagnostic of the state.
    #[error("root finding failed: {0}")]
    RootFinding(String),

    /// A fixed-sample interval was requested at a level its tuning cannot
    /// support for the given sample size.
    #[error("level alpha={alpha} too small for sample size t={t}; need t > 2*ln(2/alpha)")]
    LevelTooSmall { alpha: f64, t: u64 },

    /// Parameters outside their documented domains.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// A required per-observation field was absent.
    #[error("observation {t} is missing a required field: {field}")]
    MissingField { t: u64, field: &'static str },
}
