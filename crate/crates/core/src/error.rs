use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter block violated one of its invariants.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid control: {0}")]
    InvalidControl(String),

    #[error("root search failed: {0}")]
    RootSearch(String),

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error("target average temperature {target} K unreachable; achieved range [{min}, {max}] K")]
    Unreachable { target: f64, min: f64, max: f64 },

    #[error("simulation failed on subinterval {index}: {source}")]
    Subinterval {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("non-finite cost: {0}")]
    NonFinite(String),

    #[error("mismatched sampling: {0}")]
    Sampling(String),

    #[error("no admissible horizon in the sweep range")]
    NoAdmissibleHorizon,
}
