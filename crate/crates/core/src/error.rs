use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    // geometry
    #[error("empty set")]
    EmptySet,
    #[error("grid too coarse: step {eta} exceeds span {span} in dimension {dim}")]
    GridTooCoarse { dim: usize, eta: f64, span: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid box: {0}")]
    InvalidBox(String),
    #[error("inflation radius must be non-negative, got {0}")]
    NegativeInflation(f64),

    // comparison functions
    #[error("argument must be non-negative, got {0}")]
    NegativeArgument(f64),
    #[error("not invertible: {0}")]
    NotInvertible(String),
    #[error("undecidable on samples: {0}")]
    Undecidable(String),

    // expressions and model files
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),
    #[error("function `{name}` expects {expected} argument(s), got {got}")]
    Arity { name: String, expected: usize, got: usize },
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("non-finite result")]
    NonFinite,
    #[error("{what} {value:?} is outside the declared {set}")]
    OutOfDomain { what: String, value: Vec<f64>, set: String },
    #[error("model error: {0}")]
    Model(String),
    #[error("certificate rejected: {0}")]
    Certificate(String),

    // design
    #[error("graph has a self-loop on subsystem {0}")]
    SelfLoop(usize),
    #[error("supply sigma functions: gain {0} is not linear")]
    NonLinearGain(String),
    #[error("small-gain condition violated on cycle {cycle:?} (gain product {product})")]
    SmallGainViolated { cycle: Vec<usize>, product: f64 },
    #[error("infeasible design at step {line}: {message}")]
    InfeasibleDesign { line: u32, message: String },
    #[error("infeasible precision split: {0}")]
    InfeasiblePrecision(String),
    #[error("internal consistency error: {0}")]
    Internal(String),

    // abstraction
    #[error("blocking abstraction: {0}")]
    Blocking(String),
    #[error("quantization parameters out of range: {0}")]
    Quantization(String),
    #[error("ill-posed interconnection: {0}")]
    IllPosed(String),
    #[error("state space too large: {0} states")]
    TooLarge(u128),

    // pipeline
    #[error("{stage} stage failed: {source}")]
    Stage { stage: String, source: Box<Error> },
}
