use chrono::NaiveDate;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("date index is not strictly increasing at {0}")]
    UnorderedIndex(NaiveDate),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("degenerate training set: {0}")]
    DegenerateTrainingSet(String),

    #[error("tweet {id} has no label and no classifier was supplied")]
    UnlabeledTweet { id: String },

    #[error("OHLC invariant violated on {date}: {reason}")]
    OhlcViolation { date: NaiveDate, reason: String },

    #[error("non-positive price on {0}")]
    NonPositivePrice(NaiveDate),

    #[error("zero variance: {0}")]
    ZeroVariance(String),

    #[error("insufficient data: need {needed} complete rows, have {available}")]
    InsufficientData { needed: usize, available: usize },

    #[error("rank-deficient design: column(s) {columns:?} are collinear with earlier columns")]
    RankDeficient { columns: Vec<String> },

    #[error("over-parameterized diagnostic: {lags} lags with {params} fitted parameters")]
    OverParameterized { lags: usize, params: usize },

    #[error("invalid degrees of freedom: {0}")]
    InvalidDof(String),

    #[error("optimizer did not converge after {iterations} iterations (best objective {best_objective})")]
    NonConvergence { iterations: usize, best_objective: f64 },

    #[error("degenerate variance: {0}")]
    DegenerateVariance(String),

    #[error("all candidate models failed: {0:?}")]
    AllCandidatesFailed(Vec<String>),

    #[error("MAPE undefined: target is zero at test position {0}; consider a level series rather than returns")]
    ZeroTarget(usize),

    #[error("non-finite feature in row {0}")]
    NonFiniteFeature(usize),

    #[error("single-class data: {0}")]
    SingleClass(String),

    #[error("missing exogenous value at step {0}")]
    MissingExogenous(usize),

    #[error("negative volatility {0}")]
    NegativeVolatility(f64),
}

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid_input",
            Error::Precondition(_) => "precondition",
            Error::UnorderedIndex(_) => "unordered_index",
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::DegenerateTrainingSet(_) => "degenerate_training_set",
            Error::UnlabeledTweet { .. } => "unlabeled_tweet",
            Error::OhlcViolation { .. } => "ohlc_violation",
            Error::NonPositivePrice(_) => "non_positive_price",
            Error::ZeroVariance(_) => "zero_variance",
            Error::InsufficientData { .. } => "insufficient_data",
            Error::RankDeficient { .. } => "rank_deficient",
            Error::OverParameterized { .. } => "over_parameterized",
            Error::InvalidDof(_) => "invalid_dof",
            Error::NonConvergence { .. } => "non_convergence",
            Error::DegenerateVariance(_) => "degenerate_variance",
            Error::AllCandidatesFailed(_) => "all_candidates_failed",
            Error::ZeroTarget(_) => "zero_target",
            Error::NonFiniteFeature(_) => "non_finite_feature",
            Error::SingleClass(_) => "single_class",
            Error::MissingExogenous(_) => "missing_exogenous",
            Error::NegativeVolatility(_) => "negative_volatility",
        }
    }
}
