use thiserror::Error;

/// Failures raised by the solver library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("weighted norm [f] vanished at iteration {n}")]
    ZeroNorm { n: usize },

    #[error("Case-B positivity violation: f_{n} reaches {min_f:.3e} at r = {at:.6}")]
    CaseBPositivity { n: usize, min_f: f64, at: f64 },

    #[error("h is not monotone non-increasing: h({r0:.6}) = {h0:.6e} < h({r1:.6}) = {h1:.6e}")]
    NonMonotoneH { r0: f64, h0: f64, r1: f64, h1: f64 },

    #[error("h is negative at r = {r:.6}: {value:.6e}")]
    NegativeH { r: f64, value: f64 },

    #[error("no sign change of the crossing function on the grid")]
    NoCrossing,

    #[error("root bracket [{a}, {b}] does not change sign")]
    NoBracket { a: f64, b: f64 },

    #[error("lambda = {lambda} lies within {gap:.1e} of box eigenvalue {eigenvalue}")]
    NearEigenvalue { lambda: f64, eigenvalue: f64, gap: f64 },

    #[error("eigen solver failed: {0}")]
    Eigen(String),
}

pub type Result<T> = std::result::Result<T, Error>;
