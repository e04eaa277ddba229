use alloc::string::String;

/// Errors produced by the estimators and the market model.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A distribution was requested from data with no positive quantity.
    #[error("empty distribution: {0}")]
    EmptyDistribution(String),

    /// Input violates a probability-mass-function invariant.
    #[error("invalid distribution: {0}")]
    InvalidPmf(String),

    /// A record failed validation.
    #[error("invalid record: {0}")]
    InvalidRecord(String),

    /// Exact subset enumeration was requested on too many support points.
    #[error("support too large for exact enumeration: {size} points (limit {limit})")]
    SupportTooLarge {
        /// Combined support size of the instance.
        size: usize,
        /// Largest size accepted.
        limit: usize,
    },

    /// No bandwidth on the grid met the placebo threshold.
    #[error(
        "no bandwidth satisfies the placebo threshold {threshold}; \
         smallest placebo statistic on the grid was {min_placebo} at d = {at_d}"
    )]
    SelectionFailed {
        /// Threshold that was applied.
        threshold: f64,
        /// Smallest placebo statistic seen across the grid.
        min_placebo: f64,
        /// Bandwidth at which it occurred.
        at_d: u64,
    },

    /// No row of a scan is admissible.
    #[error("no admissible bandwidth: {0}")]
    EmptyAdmissibleSet(String),

    /// The composition weights do not identify the two distributions.
    #[error("not identified: {0}")]
    NotIdentified(String),

    /// Invalid configuration value.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// The requested trade share exceeds what the market can support.
    #[error("infeasible trade share {s}: the market supports at most {s_max} (this is s_notc when z = 0)")]
    Infeasible {
        /// Requested share of the quota.
        s: f64,
        /// Largest feasible share.
        s_max: f64,
    },

    /// Argument outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    /// A derivative does not exist at the requested point.
    #[error("derivative undefined: {0}")]
    DerivativeUndefined(String),

    /// Regression design is singular.
    #[error("singular design: {0}")]
    Singular(String),

    /// Willingness-to-pay knots are not a valid curve.
    #[error("invalid willingness-to-pay curve: {0}")]
    InvalidCurve(String),
}

/// Result alias for this crate.
pub type Result<T> = core::result::Result<T, Error>;
