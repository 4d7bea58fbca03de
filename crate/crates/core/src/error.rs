use thiserror::Error;

/// Errors raised across ingestion, fitting, effect composition and simulation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("schedule must be non-empty, start at 0 and be strictly increasing with finite times")]
    InvalidSchedule,
    #[error("time {0} is negative or not finite")]
    InvalidTime(f64),
    #[error("malformed row {line} in {table}: {reason}")]
    MalformedRow {
        table: &'static str,
        line: usize,
        reason: String,
    },
    #[error("unknown subject id `{0}` in mediators table")]
    UnknownSubject(String),
    #[error("duplicate subject id `{0}`")]
    DuplicateSubject(String),
    #[error("duplicate mediator measurement for subject `{id}` at time {time}")]
    DuplicateMeasurement { id: String, time: f64 },
    #[error("mediator for subject `{id}` at time {time} is not on the schedule")]
    OffSchedule { id: String, time: f64 },
    #[error("mediator for subject `{id}` at time {time} lies after follow-up {followup}")]
    MediatorAfterFollowup {
        id: String,
        time: f64,
        followup: f64,
    },
    #[error("missing mediator for subject `{id}` at schedule time {time}")]
    MissingMediator { id: String, time: f64 },
    #[error("subject `{id}`: {reason}")]
    InvalidSubject { id: String, reason: String },
    #[error("covariate dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("dataset has no subjects")]
    EmptyDataset,
    #[error("dataset has no observed events")]
    NoEvents,
    #[error("every event time has fewer at-risk subjects than the {columns} design columns")]
    InsufficientRiskSet { columns: usize },
    #[error("subject filter selected no subjects")]
    EmptySubset,
    #[error("mediator regression at schedule index {0} is unavailable")]
    MediatorIndexUnavailable(usize),
    #[error("additive fit lacks the {0} term required for effect decomposition")]
    MissingTerm(&'static str),
    #[error("contrast requires a != a_star")]
    DegenerateContrast,
    #[error("reliability kappa must lie in {range}, got {value}")]
    InvalidKappa { value: f64, range: &'static str },
    #[error(
        "matrix must be square, strictly lower triangular and match the {expected} coefficients"
    )]
    NotStrictlyLowerTriangular { expected: usize },
    #[error("invalid simulation parameters: {0}")]
    InvalidParams(String),
    #[error("negative hazard clamped in {clamped} of {intervals} intervals (limit 0.1%)")]
    NegativeHazard { clamped: usize, intervals: usize },
    #[error("schedule index {0} has zero mediator variance")]
    ZeroVariance(usize),
    #[error("invalid bootstrap configuration: {0}")]
    InvalidBootstrap(String),
    #[error("all {0} bootstrap replicates failed")]
    AllReplicatesFailed(usize),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("config parse error: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
