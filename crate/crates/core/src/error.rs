use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unit system: {0}")]
    Units(String),

    #[error("field evaluated on a source singularity at ({x:.6e}, {y:.6e}, {z:.6e})")]
    SingularPoint { x: f64, y: f64, z: f64 },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("source violates charge conservation: max residual {residual:.3e} (scale {scale:.3e})")]
    NotConserved { residual: f64, scale: f64 },

    #[error("no Cherenkov emission: {0}")]
    BelowThreshold(String),

    #[error("kinematic cutoff: corrected cosine {0} outside [-1, 1]")]
    KinematicCutoff(f64),

    #[error("smeared variance is divergent for a pointwise kernel; use variance_pointwise")]
    Divergent,

    #[error("steady source has no light-cone front")]
    SteadySource,

    #[error("insufficient amplitude history: {0}")]
    InsufficientHistory(String),

    #[error("scenario: {0}")]
    Scenario(String),

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
