use crate::mesh::BoundaryTag;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("boundary tag `{0}` is not present in the mesh")]
    MissingTag(BoundaryTag),

    /// A deformation produced a triangle whose area fell below the floor.
    #[error("inverted element: triangle {triangle} has non-positive area after deformation")]
    InvertedElement { triangle: usize },

    #[error("invalid displacement field: {0}")]
    InvalidDisplacement(String),

    #[error("invalid configuration at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("linear solve missed its tolerance: relative residual {residual:e}")]
    SolveAccuracy { residual: f64 },

    /// Residual norms of every attempted Newton iterate, in order.
    #[error("Newton iteration failed to converge after {} residual evaluations (last {:e})", trace.len(), trace.last().copied().unwrap_or(f64::NAN))]
    NewtonDiverged { trace: Vec<f64> },

    #[error("field does not match mesh: {0}")]
    Mismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}
