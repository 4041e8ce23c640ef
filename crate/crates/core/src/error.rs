use thiserror::Error;

#[derive(Debug, Error)]
pub enum QcrError {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("matrix is not square: {0}x{1}")]
    NotSquare(usize, usize),

    #[error("unknown subsystem label `{0}`")]
    UnknownLabel(String),

    #[error("subsystem label `{0}` appears more than once")]
    LabelCollision(String),

    #[error("state dimension {dim} exceeds the cap of {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("not a valid density matrix: {0}")]
    InvalidDensity(String),

    #[error("vector is not normalized (squared norm {0})")]
    NotNormalized(f64),

    #[error("matrix is not unitary (deviation {0:.3e})")]
    NotUnitary(f64),

    #[error("operation requires a density matrix; project the pure state first")]
    PureStateInput,

    #[error("invalid modulus {0}; need d >= 2")]
    InvalidModulus(usize),

    #[error("digit {digit} out of range for modulus {modulus}")]
    DigitOutOfRange { digit: usize, modulus: usize },

    #[error("invalid layout: {0}")]
    InvalidLayout(String),

    #[error("twisting family: {0}")]
    InvalidTwist(String),

    #[error("invalid player subset: {0}")]
    InvalidPlayerSubset(String),

    #[error("input is not a certified resource state: {0}")]
    NotCertified(String),

    #[error("information dimensions differ: {0} vs {1}")]
    ModulusMismatch(usize, usize),

    #[error("invalid cut: {0}")]
    InvalidCut(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("state file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, QcrError>;
