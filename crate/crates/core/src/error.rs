use thiserror::Error;

use crate::mesh::Field;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid stratification: {0}")]
    InvalidStratification(String),

    #[error("invalid dilation factor {0}: must be positive")]
    InvalidDilation(f64),

    #[error("{name} = {value} is out of range: {requirement}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        requirement: String,
    },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("eigenpair is undefined for the zero field")]
    ZeroField,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("iteration limit of {iterations} reached (relative gradient norm {grad_norm:.3e})")]
    IterationLimit {
        iterations: usize,
        grad_norm: f64,
        last_iterate: Box<Field>,
    },

    #[error("inner solve returned the zero field for a nonzero right-hand side")]
    DegenerateIterate,

    #[error("oracle grid has {nodes} interior nodes; the cap is {cap}")]
    OracleTooLarge { nodes: usize, cap: usize },

    #[error("internal consistency failure: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
