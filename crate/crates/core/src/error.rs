use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty sector: {0}")]
    EmptySector(String),
    #[error("configuration not found in basis")]
    NotFound,
    #[error("symmetry {0} does not commute with this Hamiltonian")]
    IncompatibleSymmetry(String),
    #[error("basis/parameter mismatch: {0}")]
    Mismatch(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("dimension {dim} exceeds dense cap {cap}; reduce by symmetry sector")]
    OverCap { dim: usize, cap: usize },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
