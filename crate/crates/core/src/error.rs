use thiserror::Error;

/// Errors raised by the gate model, the polynomial algebra and the analyses built on them.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("coordinate index {index} out of range for dimension {n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("rotation acts on a single coordinate ({0})")]
    DegenerateRotation(usize),

    #[error("constant gate value must be positive and finite, got {0}")]
    NonPositiveConstant(f64),

    #[error("dimension must be positive")]
    ZeroDimension,

    #[error("dimension {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("step {t} out of range for a program with {m} gates")]
    StepOutOfRange { t: usize, m: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("deg/val are undefined for the zero polynomial")]
    ZeroPolynomial,

    #[error("cannot evaluate a polynomial with negative exponents at zero")]
    EvaluationAtZero,

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("base {0} outside the open interval (0, 1)")]
    DeltaOutOfRange(f64),

    #[error("constant {value} is not an integral power of {delta} (log = {log})")]
    NonIntegralConstant { value: f64, delta: f64, log: f64 },

    #[error("certificate does not cover constant {0}")]
    CertificateMismatch(f64),

    #[error("singular matrix at step {t}")]
    Singular { t: usize },

    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("infeasible support window ({lo}, {hi}): need lo <= 0 <= hi")]
    InfeasibleWindow { lo: i64, hi: i64 },

    #[error("lifted final matrix does not evaluate to the target (residual {0:e})")]
    FinalMatrixMismatch(f64),

    #[error("lifted final matrix is not paraunitary (residual {0:e})")]
    NotParaunitary(f64),

    #[error("target matrix is not orthogonal (residual {0:e})")]
    NotOrthogonal(f64),

    #[error("condition bound {0} is below 1")]
    KappaBelowOne(f64),

    #[error("{samples} samples undersample a support of width {width}; need at least {required}")]
    Undersampled { samples: usize, width: usize, required: usize },

    #[error("schema error at line {line}: {message}")]
    Schema { line: usize, message: String },

    #[error("gate {index}: {message}")]
    InvalidGate { index: usize, message: String },

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
