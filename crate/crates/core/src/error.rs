use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("function is defined on a different space")]
    DomainMismatch,
    #[error("measure must be positive (vertex {vertex:?}, value {value})")]
    InvalidMeasure { vertex: String, value: f64 },
    #[error("duplicate vertex id {0:?}")]
    DuplicateVertex(String),
    #[error("unknown vertex id {0:?}")]
    UnknownVertex(String),
    #[error("vertex index {index} out of range for a space with {len} vertices")]
    VertexOutOfRange { index: usize, len: usize },
    #[error("kernel is not Hermitian at pair ({x:?}, {y:?}): |a(x,y) - conj(a(y,x))| = {gap:e}")]
    NonHermitian { x: String, y: String, gap: f64 },
    #[error("conflicting duplicate entry for pair ({x:?}, {y:?})")]
    ConflictingEntry { x: String, y: String },
    #[error("edge weight must be positive (edge {x:?} - {y:?}, weight {weight})")]
    NonpositiveWeight { x: String, y: String, weight: f64 },
    #[error("self-loop at vertex {0:?}")]
    SelfLoop(String),
    #[error("weight {value} at vertex {vertex:?} is outside the admissible range")]
    InvalidWeight { vertex: String, value: f64 },
    #[error("weights violate the normalization sum of squares <= 1 (sum = {0})")]
    WeightNormalization(f64),
    #[error("eigensolver did not converge within {0} iterations")]
    NotConverged(usize),
    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("multiplier is not finite at spectral value {0}")]
    NonFiniteMultiplier(f64),
    #[error("radius must be nonnegative, got {0}")]
    NegativeRadius(f64),
    #[error("gasket level {level} exceeds the cap {cap}")]
    LevelOverCap { level: usize, cap: usize },
    #[error("graph is disconnected")]
    Disconnected,
    #[error("eigenpair does not persist under restriction to level {0}")]
    NonPersistent(usize),
    #[error("decompositions were built from different kernels")]
    KernelMismatch,
    #[error("singular matrix in dense solve")]
    Singular,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}
