use thiserror::Error;

/// Errors surfaced by every fallible operation in the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid lattice parameters: {0}")]
    InvalidLattice(String),
    #[error("ball would hold {count} vertices, above the cap of {cap}")]
    VertexCapExceeded { count: u128, cap: usize },
    #[error("radius {requested} out of range 1..={max}")]
    RadiusOutOfRange { requested: usize, max: usize },
    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),
    #[error("parameter vector has {got} entries, graph has {expected} edges")]
    LengthMismatch { expected: usize, got: usize },
    #[error("edge {edge} has parameter {value}, outside the conditioning domain [{lo}, {hi}]")]
    OutsideConditioningDomain {
        edge: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error(
        "enumeration over {size} edges exceeds the cap of {cap}; lower the radius or raise --cap"
    )]
    CapExceeded { size: usize, cap: usize },
    #[error("conditioning on an event of probability zero")]
    NullConditioning,
    #[error("event depends on edge {edge}, which is outside the enumeration support")]
    NotMeasurable { edge: usize },
    #[error("invalid history: {0}")]
    InvalidHistory(String),
    #[error("history already reveals every edge")]
    HistoryExhausted,
    #[error("degenerate conditional probability at step {step}")]
    DegenerateConditioning { step: usize },
    #[error("missing reference critical point")]
    MissingCriticalPoint,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
