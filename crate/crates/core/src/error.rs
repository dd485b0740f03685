use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Broad class of an error, used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Bad input values or a violated mathematical precondition.
    Domain,
    /// A size, step or memory budget was exceeded.
    Resource,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("negative conductance {conductance} on edge ({x}, {y})")]
    NegativeConductance { x: usize, y: usize, conductance: f64 },
    #[error("non-finite conductance on edge ({x}, {y})")]
    NonFiniteConductance { x: usize, y: usize },
    #[error("network is disconnected ({components} components)")]
    Disconnected { components: usize },
    #[error("edge ({x}, {y}) given more than once")]
    DuplicateEdge { x: usize, y: usize },
    #[error("node {0} has zero total conductance")]
    ZeroMassNode(usize),
    #[error("network has no nodes")]
    EmptyNetwork,
    #[error("node index {index} out of range for {len} nodes")]
    NodeOutOfRange { index: usize, len: usize },
    #[error("unknown node label `{0}`")]
    UnknownLabel(String),
    #[error("duplicate node label `{0}`")]
    DuplicateLabel(String),
    #[error("length mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("kernel row {row} is not a probability vector (sum {sum})")]
    NotStochastic { row: usize, sum: f64 },
    #[error("detailed balance fails at ({x}, {y}): relative violation {violation:e}")]
    NotReversible { x: usize, y: usize, violation: f64 },
    #[error("node set must be nonempty")]
    EmptySet,
    #[error("collapsing leaves no node outside the set, or the remainder is disconnected")]
    ComplementDisconnected,
    #[error("sets overlap at node {0}")]
    Overlap(usize),
    #[error("boundary set is empty")]
    EmptyBoundary,
    #[error("node {0} assigned twice in boundary data")]
    DuplicateBoundary(usize),
    #[error("linear solve did not reach tolerance (residual {residual:e})")]
    SolverFailure { residual: f64 },
    #[error("target set is empty or covers every node")]
    EmptyTarget,
    #[error("node {0} lies in one of the target sets")]
    XInTargets(usize),
    #[error("flow is not a flow from A to B: divergence {divergence:e} at node {node}")]
    NotAFlowFromAToB { node: usize, divergence: f64 },
    #[error("flow violates the cycle law: residual {residual:e} around cycle {cycle:?}")]
    CycleViolation { cycle: Vec<usize>, residual: f64 },
    #[error("flow is nonzero on non-edge ({x}, {y})")]
    InfiniteResistanceEdge { x: usize, y: usize },
    #[error("test function has value {value} at node {node}, expected {expected}")]
    BadBoundaryValues { node: usize, value: f64, expected: f64 },
    #[error("flow is not unitary: {reason}")]
    NotUnitary { reason: String },
    #[error("path {path} is broken at step {step}")]
    BrokenPath { path: usize, step: usize },
    #[error("path weights must be nonnegative and sum to 1 (sum {sum})")]
    WeightsNotNormalized { sum: f64 },
    #[error("{what}: size {size} exceeds limit {limit}")]
    SizeLimit { what: &'static str, size: usize, limit: usize },
    #[error("function is constant (zero variance)")]
    ConstantFunction,
    #[error("flow family has no flow for pair ({x}, {y})")]
    IncompleteFamily { x: usize, y: usize },
    #[error("weight scheme violates positivity or support condition on pair ({x}, {y})")]
    WeightViolation { x: usize, y: usize },
    #[error("dimension {0} not supported (expected 1, 2 or 3)")]
    BadDimension(usize),
    #[error("2J/h = {ratio} must be a non-integer greater than 1")]
    DegenerateRatio { ratio: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("gate mismatch: {0}")]
    GateMismatch(String),
    #[error("trajectory exceeded {max_steps} steps")]
    TimeoutExceeded { max_steps: u64 },
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::SizeLimit { .. } | Error::TimeoutExceeded { .. } => ErrorClass::Resource,
            _ => ErrorClass::Domain,
        }
    }
}
