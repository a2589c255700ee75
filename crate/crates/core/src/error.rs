use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("modality [{index}] at byte {pos} is outside 1..={arity}")]
    ModalityOutOfRange { pos: usize, index: u32, arity: u32 },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("modality {index} exceeds frame arity {arity}")]
    ModalityOutOfRange { index: u32, arity: usize },
    #[error("frame must have at least one world")]
    EmptyFrame,
    #[error("product needs at least one factor")]
    NoFactors,
    #[error("cannot restrict to an empty set of worlds")]
    EmptyRestriction,
    #[error("world {world} out of range (frame has {worlds} worlds)")]
    UnknownWorld { world: usize, worlds: usize },
    #[error("ladder length must be at least 1")]
    ZeroLadder,
    #[error("index {index} outside 1..={max}")]
    IndexOutOfRange { index: u32, max: u32 },
    #[error("source formula uses the reserved variable p")]
    ReservedVariable,
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("transfer verification failed: {0}")]
    TransferFailed(String),
    #[error("extraction verification failed: {0}")]
    ExtractionFailed(String),
    #[error("no variant passes every check; see the verdict table")]
    NoPassingVariant(Box<crate::calibrate::CalibrationReport>),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("unknown variant `{0}`")]
    UnknownVariant(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
