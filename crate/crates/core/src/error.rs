use thiserror::Error;

/// Errors produced by lattice construction, search, fitting, and solves.
#[derive(Error, Debug)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("integer overflow computing {0}")]
    Overflow(String),

    #[error("degree {n} exceeds the default cap of {cap}; raise the cap explicitly to proceed")]
    DegreeCap { n: usize, cap: usize },

    #[error("not a triangular lattice: {0}")]
    NotTriangularLattice(String),

    #[error("starting point is not a feasible node")]
    StartNotFeasible,

    #[error("no poised lattice found: {0}")]
    NoLatticeFound(String),

    #[error("rank-deficient least squares system: rank {rank} of {cols}")]
    RankDeficient { rank: usize, cols: usize },

    #[error("linear solver failed: {0}")]
    SolverFailure(String),

    #[error("projection onto the boundary did not converge at ({0:?})")]
    ProjectionFailure(Vec<f64>),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
