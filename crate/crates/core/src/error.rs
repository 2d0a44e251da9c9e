use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("assumption violated: {0}")]
    Assumption(String),

    #[error("no root: {0}")]
    NoRoot(String),

    #[error("divergence: {0}")]
    Divergence(String),

    #[error("degenerate scale range: {0}")]
    DegenerateRange(String),

    #[error("zero oscillation: {0}")]
    ZeroOscillation(String),

    #[error("out of scope: {0}")]
    Scope(String),

    #[error("depth {requested} exceeds realization depth {available}")]
    DepthExceeded { requested: usize, available: usize },

    #[error("memory budget exceeded: {0}")]
    MemoryBudget(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable kind used in CLI error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::InvalidModel(_) => "invalid_model",
            Error::Config(_) => "config",
            Error::Assumption(_) => "assumption",
            Error::NoRoot(_) => "no_root",
            Error::Divergence(_) => "divergence",
            Error::DegenerateRange(_) => "degenerate_range",
            Error::ZeroOscillation(_) => "zero_oscillation",
            Error::Scope(_) => "scope",
            Error::DepthExceeded { .. } => "depth_exceeded",
            Error::MemoryBudget(_) => "memory_budget",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }

    /// Process exit code: 2 config, 3 assumption, 4 numeric, 5 resource.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::InvalidModel(_)
            | Error::Domain(_)
            | Error::Scope(_)
            | Error::DepthExceeded { .. }
            | Error::Json(_) => 2,
            Error::Assumption(_) => 3,
            Error::NoRoot(_)
            | Error::Divergence(_)
            | Error::DegenerateRange(_)
            | Error::ZeroOscillation(_) => 4,
            Error::MemoryBudget(_) | Error::Io(_) => 5,
        }
    }
}
