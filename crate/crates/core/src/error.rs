use thiserror::Error;

/// Errors raised while building or transforming distributions and channels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid product space: {0}")]
    InvalidSpace(String),

    #[error("space mismatch: {0}")]
    SpaceMismatch(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("invalid marginal spec: {0}")]
    InvalidSpec(String),

    #[error("input marginal vanishes at x = {x}")]
    DegenerateInput { x: usize },

    #[error("row {x} has zero mass and cannot be normalized")]
    DegenerateRow { x: usize },

    #[error("infeasible scaling: prescribed mass {prescribed} at reduced cell {cell} where the current marginal is zero")]
    InfeasibleScaling { cell: usize, prescribed: f64 },

    #[error("shape mismatch: {0}")]
    Shape(String),
}

pub type Result<T> = std::result::Result<T, Error>;
