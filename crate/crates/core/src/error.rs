use thiserror::Error;

/// Errors produced by the numerical engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operator has zero thermal norm (static operator)")]
    ZeroNorm,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("grid too narrow: state {state} has boundary amplitude {amplitude:e}")]
    BoundaryLeak { state: usize, amplitude: f64 },

    #[error("moment sequence lost positivity at step {step} (norm {value:e})")]
    LossOfPositivity { step: usize, value: f64 },

    #[error("fit window [{lo}, {hi}] is invalid for a sequence of length {len}")]
    InvalidWindow { lo: usize, hi: usize, len: usize },

    #[error("insufficient statistics: {0}")]
    InsufficientStatistics(String),

    #[error("quadrature cutoff {cutoff} too small: tail/peak ratio {ratio:e}")]
    CutoffInsufficient { cutoff: f64, ratio: f64 },

    #[error("quadrature disagrees with the closed form at n = {n}: relative error {relative:e}")]
    QuadratureMismatch { n: usize, relative: f64 },

    #[error("chain boundary reached: occupancy {occupancy:e} at site {site}")]
    BoundaryReflection { site: usize, occupancy: f64 },

    #[error("p = 2 lies on the pole of Gamma((p-2)/2p); the semiclassical estimate needs p >= 4")]
    SemiclassicalPole,

    #[error("eigensolver failure: {0}")]
    Eigensolver(String),

    #[error("empty magnetization sector (L = {sites}, S_z = {sz})")]
    EmptySector { sites: usize, sz: i64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
