use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong across the crate.
///
/// Variants are grouped by the subsystem that raises them; `exit_code`
/// gives the CLI classification (1 = domain/validation, 2 = I/O).
#[derive(Debug, Error)]
pub enum Error {
    #[error("ambient dimension {0} out of range (supported: 1..=8)")]
    DimensionOutOfRange(u8),

    #[error("ambient dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: u8, got: u8 },

    #[error("digit {digit} out of range for fanout {fanout}")]
    DigitOutOfRange { digit: u8, fanout: usize },

    #[error("level {level} exceeds the supported maximum {max}")]
    LevelOverflow { level: u64, max: u32 },

    #[error("cube coordinate {coord} on axis {axis} out of range for level {level}")]
    CubeCoordOutOfRange { axis: usize, coord: u64, level: u32 },

    #[error("expected {expected} weights, got {got}")]
    WeightCount { expected: usize, got: usize },

    #[error("weight {value} at index {index} is not a finite number in [0, 1]")]
    WeightOutOfRange { index: usize, value: f64 },

    #[error("weights sum to {sum}, more than 1e-9 away from 1")]
    WeightSumOffUnit { sum: f64 },

    #[error("node {path} lies beyond the stored depth and the continuation policy is `error`")]
    BeyondStoredDepth { path: String },

    #[error("level {level} + tail length {m} exceeds the depth budget {budget} (raise it explicitly if intended)")]
    DepthBudgetExceeded { level: u32, m: u32, budget: u32 },

    #[error("brute-force oracle would materialize 2^{log2_nodes} nodes, above the 2^{limit} cap")]
    OracleTooLarge { log2_nodes: u32, limit: u32 },

    #[error("empty sample")]
    EmptySample,

    #[error("samples are not sorted ascending (violation at index {index})")]
    UnsortedSample { index: usize },

    #[error("sample table is not monotone (x strictly increasing in (0,1), y positive nonincreasing): violation at index {index}")]
    NonMonotoneTable { index: usize },

    #[error("{0}")]
    Domain(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Shorthand for one-off domain violations.
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// CLI process exit code: 1 for domain/validation errors, 2 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io(_) => 2,
            _ => 1,
        }
    }
}
