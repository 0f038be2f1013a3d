//! Sparse mixture detection: detection boundaries, Le Cam limit experiments
//! of the log-likelihood ratio, asymptotic relative efficiency of
//! misspecified likelihood ratio tests, and reproducible Monte Carlo power
//! studies for Higher Criticism and the likelihood ratio test.

pub mod acceptance;
pub mod detectability;
pub mod efficiency;
pub mod distributions;
pub mod error;
pub mod extended;
pub mod io;
pub mod limits;
pub mod montecarlo;
pub mod normal;
pub mod quadrature;
pub mod rng;
pub mod statistics;

pub use error::{Error, Result};
pub use extended::Extended;
