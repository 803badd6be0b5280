use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid user model: {0}")]
    InvalidModel(String),

    #[error("coincident points: similarity is undefined at distance {0}")]
    CoincidentPoints(f64),

    #[error("invalid query: {0}")]
    InvalidQuery(String),

    #[error("target {target} is part of the query; the search should have terminated")]
    TargetInQuery { target: usize },

    #[error("posterior assigns mass {mass} to queried points")]
    MassOnQueriedPoints { mass: f64 },

    #[error("all posterior mass sits on queried points; the search should have terminated")]
    NoMassOutsideQuery,

    #[error("response {response} out of range for a query of size {k}")]
    InvalidResponse { response: usize, k: usize },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("support violation at index {index}: {p} > 0 but reference is 0")]
    SupportViolation { index: usize, p: f64 },

    #[error("probability level {0} outside (0, 1]")]
    InvalidLevel(f64),

    #[error("point {index} overflows; at most {max_n} points are representable for theta = {theta}")]
    Overflow { index: usize, max_n: usize, theta: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported schema version {found}, expected {expected}")]
    SchemaVersion { found: u32, expected: u32 },

    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
