use thiserror::Error;

pub type Result<T, E = PrebError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum PrebError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("frequency {omega} is not a node of the tabulated grid and interpolation is disabled")]
    OffGrid { omega: f64 },

    #[error("frequency {omega} lies inside the cutoff but outside the tabulated range")]
    Extrapolation { omega: f64 },

    #[error("grid is not uniform (cell {index} differs by {deviation:e})")]
    NonUniformGrid { index: usize, deviation: f64 },

    #[error("chain decouples / recursion unstable at depth {depth} (g^2 = {value:e})")]
    ChainDecouples { depth: usize, value: f64 },

    #[error("Lanczos lost orthogonality at depth {depth} (overlap {overlap:e})")]
    Orthogonality { depth: usize, overlap: f64 },

    #[error("chain tail not converged: {0}")]
    TailNotConverged(String),

    #[error("no unique NESS at this tau: spectral radius of G_S is {radius}")]
    NoUniqueNess { radius: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("validation failed: {0}")]
    Validation(String),
}

impl PrebError {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            PrebError::Config(_) | PrebError::InvalidArgument(_) => 2,
            PrebError::NoUniqueNess { .. } => 3,
            PrebError::Validation(_) => 5,
            PrebError::Io(_) | PrebError::Csv(_) => 2,
            _ => 4,
        }
    }
}
