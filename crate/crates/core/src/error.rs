use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong while building models, deriving limit
/// dynamics, or running simulations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("negative rate {value} at ({row}, {col})")]
    NegativeRate { row: usize, col: usize, value: f64 },

    #[error("non-finite rate at ({row}, {col})")]
    NonFiniteRate { row: usize, col: usize },

    #[error("nonzero diagonal entry {value} at state {state} (intensity matrices keep a zero diagonal)")]
    NonzeroDiagonal { state: usize, value: f64 },

    #[error("dimension error: {0}")]
    BadDimension(String),

    #[error("{block} is not irreducible")]
    NotIrreducible { block: String },

    #[error("state {state} is absorbing (zero exit rate)")]
    AbsorbingState { state: usize },

    #[error("event budget exhausted after {events} events")]
    EventBudgetExceeded { events: u64 },

    #[error("coupling entry ({from_x}, {from_z}) -> ({to_x}, {to_z}) with rate {rate} violates energy conservation")]
    EnergyNotConserved {
        from_x: usize,
        from_z: usize,
        to_x: usize,
        to_z: usize,
        rate: f64,
    },

    #[error("total energy {energy} is not admissible for this model")]
    InadmissibleEnergy { energy: f64 },

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("stationary solve left residual {residual:e} above tolerance")]
    SingularSystem { residual: f64 },

    #[error("invalid model definition: {0}")]
    InvalidModel(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
