use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("radius {requested} exceeds validity radius {valid}")]
    RadiusExceedsValidity { requested: u32, valid: u32 },
    #[error("walk or exploration reached the truncation boundary at vertex {vertex}")]
    TruncationEscape { vertex: usize },
    #[error("truncation radius {have} too small, need at least {need}")]
    TruncationTooSmall { have: u32, need: u32 },
    #[error("network has no vertices")]
    EmptyNetwork,
    #[error("vertex {0} out of range")]
    VertexOutOfRange(usize),
    #[error("network is disconnected")]
    Disconnected,
    #[error("vertex {0} is isolated")]
    IsolatedVertex(usize),
    #[error("network has {size} vertices, above the cap of {cap}")]
    SizeCapExceeded { size: usize, cap: usize },
    #[error("distance undetermined by the truncations: alpha >= {alpha_lower_bound}")]
    Indeterminate { alpha_lower_bound: u32 },
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("offspring distribution has unbounded support")]
    UnboundedSupport,
    #[error("bias {value} exceeds declared bound {bound}")]
    BiasOverflow { value: u64, bound: u64 },
    #[error("all weights are zero")]
    AllZeroWeights,
    #[error("invalid weight on edge {edge}: {reason}")]
    InvalidWeight { edge: usize, reason: String },
    #[error("coupling violated on edge {edge}: {lower} > {upper}")]
    CouplingViolation { edge: usize, lower: f64, upper: f64 },
    #[error("duplicate edge label {label}")]
    DuplicateLabel { label: u64 },
    #[error("spectral range: {0}")]
    SpectralRange(String),
    #[error("radius mismatch: {0} vs {1}")]
    RadiusMismatch(u32, u32),
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn param(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { field, reason: reason.into() }
    }
}
