use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unbound variable: index {0} has no value in the evaluation point")]
    UnboundVariable(usize),

    #[error("parse error at {position}: {message}")]
    Parse { position: String, message: String },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("underdetermined harmonic problem: vertex {0} is not connected to the boundary")]
    Underdetermined(usize),

    #[error("singular linear system")]
    SingularSystem,

    #[error("level {level} exceeds the configured bound {max}")]
    LevelTooLarge { level: usize, max: usize },

    #[error("ellipticity violated at node {node:?}: smallest eigenvalue {min_eigenvalue} < {bound}")]
    EllipticityViolated {
        node: Vec<f64>,
        min_eigenvalue: f64,
        bound: f64,
    },

    #[error("invalid coefficient field: {0}")]
    InvalidCoefficients(String),

    #[error("invalid coordinate model: {0}")]
    InvalidModel(String),

    #[error("fiber elements live over different base points ({0} and {1})")]
    MismatchedBase(usize, usize),

    #[error("generator formula requires Ly^i")]
    MissingLaplacians,

    #[error("coordinate source function {0} is identically zero")]
    ZeroFunction(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("internal inconsistency: {0}")]
    Internal(String),
}
