use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("joint dimension {requested} exceeds configured maximum {max}")]
    CapacityExceeded { requested: usize, max: usize },

    #[error("shape mismatch: {0}")]
    ShapeError(String),

    #[error("basis is not orthonormal (Gram deviation {deviation:.3e})")]
    BasisError { deviation: f64 },

    #[error("softening must be positive, got {0}")]
    SingularPotential(f64),

    #[error("state is not normalized (norm deviation {deviation:.3e})")]
    NormError { deviation: f64 },

    #[error("operator error: {0}")]
    OperatorError(String),

    #[error("integrator diverged: {0}")]
    IntegratorDiverged(String),

    #[error("lambda routes disagree: bath_route = {bath_route:.17e}, joint = {joint:.17e}")]
    GaugeInconsistency { bath_route: f64, joint: f64 },

    #[error("sample times are not strictly increasing at index {0}")]
    TimeOrderError(usize),

    #[error("negative weight {value} at index {index}")]
    WeightError { index: usize, value: f64 },

    #[error("branches out of sync: times differ by {spread:.3e}")]
    SyncError { spread: f64 },

    #[error("momentum expectation has imaginary residue {0:.3e}")]
    HermiticityError(f64),

    #[error("trajectory is missing the {0} series")]
    IncompleteTrajectory(&'static str),

    #[error("perturbation does not vanish at the endpoints (norm {0:.3e})")]
    BoundaryError(f64),

    #[error("translation requires a periodic grid")]
    TopologyError,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("branch {nu}: {source}")]
    Branch { nu: usize, source: Box<Error> },
}

impl Error {
    pub fn shape(msg: impl Into<String>) -> Self {
        Error::ShapeError(msg.into())
    }

    /// Strips branch tags to reach the underlying numerical error.
    pub fn root(&self) -> &Error {
        match self {
            Error::Branch { source, .. } => source.root(),
            e => e,
        }
    }
}
