use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the coefficient engine, the path generators and the
/// evaluators. Every variant maps to a stable module-qualified code.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("cannot parse model spec {spec:?}: {reason}")]
    ModelSyntax { spec: String, reason: String },
    #[error("insufficient moments: need order {needed}, have {available}")]
    InsufficientMoments { needed: usize, available: usize },
    #[error("moment undefined: {0}")]
    MomentUndefined(String),
    #[error("moments already adjusted for the Brownian part")]
    AlreadyAdjusted,
    #[error("moments must be adjusted for the Brownian part before use as compensators")]
    NotAdjusted,
    #[error("order too large: {order} exceeds cap {cap}")]
    OrderTooLarge { order: usize, cap: usize },
    #[error("tuple {tuple} exceeds order {order}")]
    TupleExceedsOrder { tuple: String, order: usize },
    #[error("invalid index tuple: {0}")]
    InvalidTuple(String),
    #[error("degenerate measure: reduce order (requested {requested}, supported {supported})")]
    DegenerateMeasure { requested: usize, supported: usize },
    #[error("order mismatch: {0}")]
    OrderMismatch(String),
    #[error("basis mismatch: {0}")]
    BasisMismatch(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("t0 = {t0} is not on the grid (start {start}, dt {dt})")]
    OffGrid { t0: f64, start: f64, dt: f64 },
    #[error("invalid jump path: {0}")]
    InvalidJumpPath(String),
    #[error("invalid time window: {0}")]
    InvalidWindow(String),
    #[error("model cannot be simulated: {0}")]
    NotSimulable(String),
    #[error("invalid functional: {0}")]
    InvalidFunctional(String),
}

impl Error {
    /// Machine-readable code, `module.kind`.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidModel(_) => "models.invalid_model",
            Error::ModelSyntax { .. } => "models.syntax",
            Error::InsufficientMoments { .. } => "models.insufficient_moments",
            Error::MomentUndefined(_) => "models.moment_undefined",
            Error::AlreadyAdjusted => "models.already_adjusted",
            Error::NotAdjusted => "paths.not_adjusted",
            Error::OrderTooLarge { .. } => "combinatorics.order_too_large",
            Error::TupleExceedsOrder { .. } => "chaos.tuple_exceeds_order",
            Error::InvalidTuple(_) => "combinatorics.invalid_tuple",
            Error::DegenerateMeasure { .. } => "ortho.degenerate_measure",
            Error::OrderMismatch(_) => "ortho.order_mismatch",
            Error::BasisMismatch(_) => "chaos.basis_mismatch",
            Error::InvalidGrid(_) => "paths.invalid_grid",
            Error::OffGrid { .. } => "paths.off_grid",
            Error::InvalidJumpPath(_) => "paths.invalid_jump_path",
            Error::InvalidWindow(_) => "evaluate.invalid_window",
            Error::NotSimulable(_) => "paths.not_simulable",
            Error::InvalidFunctional(_) => "taylor.invalid_functional",
        }
    }
}
