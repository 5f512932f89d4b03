use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid structure: antisymmetry {antisymmetry_ok}, Jacobi residual {jacobi_residual:e}")]
    InvalidStructure {
        antisymmetry_ok: bool,
        jacobi_residual: f64,
    },
    #[error("declared differentials do not define a Lie algebra (Jacobi residual {0:e})")]
    JacobiViolation(f64),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not unitary (deviation {0:e})")]
    NotUnitary(f64),
    #[error("matrix {index} is not normal (residual {residual:e})")]
    NotNormal { index: usize, residual: f64 },
    #[error("matrices {first} and {second} do not commute (residual {residual:e})")]
    NotCommuting { first: usize, second: usize, residual: f64 },
    #[error("Lie algebra is not nilpotent")]
    NotNilpotent,
    #[error("unknown connection kind `{0}`")]
    UnknownKind(String),
    #[error("unknown family `{0}`")]
    UnknownFamily(String),
    #[error("parameter `{name}` out of range: {reason}")]
    ParamOutOfRange { name: String, reason: String },
    #[error("bad range: {0}")]
    BadRange(String),
    #[error("internal consistency failure: {0}")]
    TheoremViolation(String),
}
