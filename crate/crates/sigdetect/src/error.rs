//! Crate-wide error type.

/// Errors produced by construction, numerical, and experiment routines.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Two sampled functions (or a function and an operator) live on
    /// incompatible grids.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// A scalar or structural argument violates a precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A value that must be finite is NaN or infinite.
    #[error("non-finite value in {0}")]
    NonFinite(String),

    /// A Gram matrix required to be positive definite is numerically singular
    /// or indefinite. `name` identifies the offending matrix variant.
    #[error(
        "gram matrix {name} is not positive definite: min eigenvalue {min_eig:.6e} \
         <= 1e-10 * max eigenvalue {max_eig:.6e}"
    )]
    NotPositiveDefinite {
        name: String,
        min_eig: f64,
        max_eig: f64,
    },

    /// A wavelet scale cannot be resolved on the requested grid.
    #[error("under-resolved wavelet: {0}")]
    UnderResolved(String),

    /// An index-set builder produced no admissible indices.
    #[error("empty index set: {0}")]
    EmptyIndexSet(String),

    /// The requested wavelet family/parameters are not supported.
    #[error("unsupported wavelet family: {0}")]
    UnsupportedFamily(String),

    /// The operation requires data (vaguelettes, quasi-singular values, decay
    /// parameters, …) that the input does not carry.
    #[error("missing data: {0}")]
    MissingData(String),

    /// A numerical routine failed (non-convergence, degenerate input, …).
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A root-bracketing search could not enclose the target.
    #[error("bracket not found: {0}")]
    BracketNotFound(String),

    /// Configuration file parse or validation failure (message is
    /// line-anchored when the underlying parser provides spans).
    #[error("config error: {0}")]
    Config(String),

    /// I/O failure while reading configs or writing outputs.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code the command-line interface maps this error to:
    /// config problems exit 2, numerical failures exit 3, I/O and everything
    /// else exit 1.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::NotPositiveDefinite { .. } | Error::Numerical(_) => 3,
            _ => 1,
        }
    }
}
