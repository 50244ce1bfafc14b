use thiserror::Error;

/// Errors raised by the kernel-entropy toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid similarity matrix: {0}")]
    InvalidKernel(String),

    #[error("invalid probability vector: {0}")]
    InvalidPmf(String),

    #[error("invalid labels: {0}")]
    InvalidLabels(String),

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("observation {0} has zero marginal probability")]
    ZeroProbabilityObservation(usize),

    #[error("channel entry P[{row}][{col}] = {value} is not a multiple of 1/{resolution}")]
    NotResolvable {
        row: usize,
        col: usize,
        value: f64,
        resolution: usize,
    },

    #[error("pmf is not resolvable on any uniform grid of size <= {0}")]
    PmfNotResolvable(usize),

    #[error("typicality {value:e} at u = {at} is below the floor {floor:e}")]
    TypicalityTooSmall { at: f64, value: f64, floor: f64 },

    #[error("class {0} has no samples or an empty fiber")]
    EmptyClass(usize),

    #[error("minimum-envelope typicality vanishes on charged class {0}")]
    ZeroMinTypicality(usize),

    #[error("metric axiom violated: {0}")]
    MetricViolation(String),

    #[error("epsilon {eps} is not a lower bound on typicality (found {found})")]
    EpsilonNotLowerBound { eps: f64, found: f64 },

    #[error("sampler failed on dataset {dataset}: {message}")]
    Sampler { dataset: usize, message: String },

    #[error("invariant violated: {0}")]
    InvariantViolation(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { what, expected, found })
    }
}
