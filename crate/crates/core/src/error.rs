use thiserror::Error;

/// Everything that can go wrong inside the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{name} = {value} is out of range: {constraint}")]
    Domain {
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },
    #[error("observation {0} lies outside the support of the noise law")]
    OutsideSupport(f64),
    #[error("empty input")]
    Empty,
    #[error("divergent integral: {0}")]
    Divergent(String),
    #[error("no limit found: {0}")]
    NoLimit(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("quadrature failed to converge on [{lo}, {hi}] (error estimate {err:e})")]
    Quadrature { lo: f64, hi: f64, err: f64 },
    #[error("io: {0}")]
    Io(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(name: &'static str, value: f64, constraint: &'static str) -> Self {
        Error::Domain {
            name,
            value,
            constraint,
        }
    }
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
