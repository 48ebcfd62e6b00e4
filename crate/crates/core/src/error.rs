use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// An index window is empty, badly aligned or too small for the request.
    #[error("window error: {0}")]
    Window(String),

    /// An input object violates its defining invariant (unitarity, normalization, ...).
    #[error("validation error: {0}")]
    Validation(String),

    #[error("singular coin: transfer matrices need t > 0")]
    SingularCoin,

    #[error("spectral parameter too close to the unit circle: |z| = {modulus}")]
    Conditioning { modulus: f64 },

    #[error("near-eigenvalue: Wronskian {value:e} below tolerance")]
    NearEigenvalue { value: f64 },

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("degenerate witness: phases must differ")]
    DegenerateWitness,

    #[error("diffusion constant diverges for r = 0")]
    DivergentDiffusion,

    #[error("singular linear system at pivot {0}")]
    SingularSystem(usize),

    #[error("residual {residual:e} exceeds tolerance {tolerance:e}")]
    Residual { residual: f64, tolerance: f64 },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
