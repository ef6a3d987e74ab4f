use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    // ingest
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("line {line}: expected {expected} cells, found {found}")]
    ArityMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}, column {column}: cannot parse {token:?} as a number")]
    NonNumericCell {
        line: usize,
        column: usize,
        token: String,
    },
    #[error("line {line}: unsupported attribute type {kind:?} for {name:?}")]
    UnsupportedAttributeType {
        line: usize,
        name: String,
        kind: String,
    },
    #[error("duplicate column name {0:?}")]
    DuplicateColumn(String),
    #[error("column {0:?} has no observed values to impute from")]
    AllMissingColumn(String),
    #[error("dropping rows with missing cells removed every row")]
    EmptyResult,

    // preprocess
    #[error("column {0} has zero variance")]
    ZeroVarianceColumn(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("class {class} has {count} members, fewer than k = {k}")]
    TooFewClassMembers { class: u8, count: usize, k: usize },
    #[error("unknown feature id {0:?}")]
    UnknownFeature(String),
    #[error("invalid model spec: {0}")]
    InvalidModelSpec(String),
    #[error("non-finite value at row {row}, column {column}")]
    NonFiniteValue { row: usize, column: usize },
    #[error("label at row {row} is {value}, expected 0 or 1")]
    InvalidLabel { row: usize, value: f64 },

    // glm / nuts
    #[error("invalid prior: {0}")]
    InvalidPrior(String),
    #[error("invalid sampler config: {0}")]
    InvalidConfig(String),
    #[error("non-finite gradient")]
    NonFiniteGradient,
    #[error("chain {chain}: step size collapsed to {step_size:e}")]
    StepSizeCollapse { chain: usize, step_size: f64 },
    #[error("chain {chain} failed: {reason}")]
    ChainFailed { chain: usize, reason: String },

    // diagnostics
    #[error("draws are degenerate (zero variance)")]
    DegenerateDraws,
    #[error("no draws to summarize")]
    EmptyDraws,
    #[error("invalid draws layout: {0}")]
    InvalidDraws(String),

    // evaluate
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("fold {fold} fit failed: {reason}")]
    FoldFitFailed { fold: usize, reason: String },
    #[error("pointwise ELPD vectors are not aligned: {0}")]
    MisalignedFolds(String),
    #[error("missing ratio {0} for the Altman Z-score")]
    MissingRatio(String),
    #[error("IRLS normal equations are singular")]
    SingularSystem,

    #[error("serialization: {0}")]
    Serde(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}
