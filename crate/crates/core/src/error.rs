use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("spaces are defined on different meshes")]
    MeshMismatch,

    #[error("cell index {index} out of range (mesh has {count} cells)")]
    CellOutOfRange { index: usize, count: usize },

    #[error("time interval length {length} is not an integer multiple of the step {step}")]
    NonIntegralSteps { length: f64, step: f64 },

    #[error("singular matrix{}", pivot.map(|p| format!(" (no pivot found in column {p})")).unwrap_or_default())]
    SingularMatrix { pivot: Option<usize> },

    #[error("linear solver failure: {0}")]
    Solver(String),

    #[error("slab {slab}: {source}")]
    Slab {
        slab: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("level {level}: {source}")]
    Level {
        level: u32,
        #[source]
        source: Box<Error>,
    },

    #[error("non-positive error value {value} at level {level}")]
    NonPositiveError { level: usize, value: f64 },

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
