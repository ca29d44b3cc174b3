use crate::matcore::C64;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("outside the domain: {0}")]
    Domain(String),
    #[error("series diverges: spectral-radius product {0} >= 1")]
    Divergent(f64),
    #[error("linear system singular to working precision")]
    Singular,
    #[error("Lyapunov operator singular: eigenvalues {lambda} and {mu} satisfy lambda + conj(mu) = 0")]
    LyapunovSingular { lambda: C64, mu: C64 },
    #[error("eigensolver did not converge within {0} iterations")]
    NoConvergence(usize),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("work budget exceeded: {detail}")]
    Budget { detail: String, achieved_bound: Option<f64> },
    #[error("path error: {0}")]
    Path(String),
    #[error("map error: {0}")]
    Map(String),
}

impl Error {
    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn budget(detail: impl Into<String>, achieved_bound: Option<f64>) -> Self {
        Error::Budget { detail: detail.into(), achieved_bound }
    }
}
