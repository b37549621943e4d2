use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("cube outside domain")]
    CubeOutsideDomain,
    #[error("grids are not arithmetic-compatible")]
    IncompatibleGrids,
    #[error("sample {index} is not finite")]
    NonFiniteSample { index: usize },
    #[error("expected {expected} samples, got {got}")]
    SampleCount { expected: usize, got: usize },
    #[error("not a sample point: {0}")]
    NotASamplePoint(String),
    #[error("kernel evaluation produced NaN at offset {0:?}")]
    KernelNaN([i64; 2]),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("weight must be strictly positive (sample {index} = {value})")]
    NonPositiveWeight { index: usize, value: f64 },
    #[error("cube cannot be carved: {0}")]
    CarveFailure(String),
    #[error("representation not applicable: {0}")]
    RepresentationNotApplicable(String),
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("no admissible radius: {0}")]
    NoAdmissibleDelta(String),
    #[error("enlarge domain: {0}")]
    EnlargeDomain(String),
    #[error("certificate step `{step}` failed: {reason}")]
    Certificate { step: &'static str, reason: String },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
