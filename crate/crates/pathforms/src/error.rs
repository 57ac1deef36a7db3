use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point is off the manifold (defect {0:e})")]
    OffManifold(f64),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("geodesic step of length {0} reaches the cut locus")]
    CutLocus(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("operands live on different paths")]
    PathMismatch,
    #[error("grid resolution mismatch ({0} vs {1} steps)")]
    ResolutionMismatch(usize, usize),
    #[error("unsupported pairing: {0}")]
    UnsupportedPairing(String),
    #[error("finite difference step {0:e} is roundoff dominated")]
    RoundoffDominated(f64),
    #[error("too many non-finite samples: {0} of {1}")]
    NonFinite(usize, usize),
    #[error("unknown experiment id `{0}`")]
    UnknownExperiment(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
