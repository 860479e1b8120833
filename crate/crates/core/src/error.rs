use thiserror::Error;

/// Errors raised while building grids, states and environments.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum QreError {
    #[error("grid size {0} is not a power of two >= 8")]
    GridSize(usize),

    #[error("box length must be positive (x_min = {x_min}, x_max = {x_max})")]
    BoxLength { x_min: f64, x_max: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("wavepacket leaks out of the box: mass {outside:.3e} outside the central 80% of the grid")]
    PacketLeak { outside: f64 },

    #[error("shape mismatch: expected {expected} samples, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("representation mismatch: expected {expected:?}, got {got:?}")]
    Representation {
        expected: crate::Representation,
        got: crate::Representation,
    },

    #[error("phase integrand is singular at node {index}: numerator {numerator:.3e} with zero denominator")]
    SingularPhase { index: usize, numerator: f64 },

    #[error("bath decomposition does not close: residual {residual:.3e} at node {index}")]
    Decomposition { index: usize, residual: f64 },

    #[error("jet environment infeasible: {0}")]
    Infeasible(String),

    #[error("step size guard: {0}")]
    StepSize(String),

    #[error("numerical guard tripped at step {step}: {diagnostic}")]
    Guard { step: usize, diagnostic: String },

    #[error("grid too large for the dense oracle: n_points = {0} (max 64)")]
    OracleSize(usize),

    #[error("unknown comparator kind `{0}`")]
    UnknownComparator(String),

    #[error("too few records for Ehrenfest residuals: {0} (need at least 3)")]
    TooFewRecords(usize),

    #[error("records are not uniformly spaced in time")]
    NonUniformRecords,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("missing required configuration fields: {}", .0.join(", "))]
    MissingFields(Vec<String>),

    #[error("cannot write `{path}`: {reason}")]
    Io { path: String, reason: String },
}

impl QreError {
    /// Process exit code: 2 configuration, 3 feasibility, 4 numerical guard,
    /// 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_)
            | Self::MissingFields(_)
            | Self::UnknownComparator(_)
            | Self::InvalidParameter { .. }
            | Self::GridSize(_)
            | Self::BoxLength { .. }
            | Self::PacketLeak { .. }
            | Self::OracleSize(_) => 2,
            Self::Infeasible(_) | Self::SingularPhase { .. } | Self::Decomposition { .. } => 3,
            Self::Guard { .. } | Self::StepSize(_) => 4,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, QreError>;
