use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Coarse classification used by front ends to pick exit codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Oracle,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("schema: {0}")]
    Schema(String),
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("unexpected column `{0}` not declared in schema")]
    UnexpectedColumn(String),
    #[error("row {row}, column `{column}`: {message}")]
    Cell {
        row: usize,
        column: String,
        message: String,
    },
    #[error("row {row}: expected {expected} values, found {found}")]
    RowArity {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("{0} group empty")]
    EmptyGroup(&'static str),
    #[error("empty dataset")]
    EmptyDataset,
    #[error("target: {0}")]
    Target(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid partition: {0}")]
    Partition(String),
    #[error("value {0} outside partition range")]
    OutOfRange(String),
    #[error("examined feature `{0}` is the protected attribute")]
    FeatureIsProtected(String),
    #[error("no auditable bins: every bin lacks one of the two groups")]
    NoAuditableBins,
    #[error("all bins are empty")]
    AllBinsEmpty,
    #[error("unfairness measure undefined: {0}")]
    UndefinedMeasure(String),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Schema(_)
            | Error::Config(_)
            | Error::Partition(_)
            | Error::FeatureIsProtected(_) => ErrorKind::Config,
            Error::Oracle(_) => ErrorKind::Oracle,
            _ => ErrorKind::Data,
        }
    }
}

/// Failures raised while obtaining scores from a [`PredictionOracle`](crate::PredictionOracle).
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error("failed to spawn oracle: {0}")]
    Spawn(String),
    #[error("oracle did not respond within {seconds} s during {stage}")]
    Timeout { stage: String, seconds: f64 },
    #[error("oracle protocol violation: {0}")]
    Protocol(String),
    #[error("oracle transport failed: {message}; stderr: {diagnostics}")]
    Transport {
        message: String,
        diagnostics: String,
    },
    #[error("oracle returned {actual} scores for {expected} instances")]
    ScoreCount { expected: usize, actual: usize },
    #[error("instance has {actual} values but the oracle is bound to {expected}")]
    InstanceArity { expected: usize, actual: usize },
    #[error("oracle cannot score instance: {0}")]
    Input(String),
}
