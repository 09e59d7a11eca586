//! Exact and certified numerics over Q(i, √2).

pub mod field;
pub mod interval;
pub mod ival;
pub mod linalg;
pub mod matrix;
pub mod qsqrt2;
pub mod rational;
pub mod spectral;
pub mod transcendental;

pub use field::FieldScalar;
pub use interval::{IntervalReport, RatInterval};
pub use ival::{CIval, Ival};
pub use linalg::{count_eigs_above, is_positive_definite};
pub use matrix::{CMatrix, CVector};
pub use qsqrt2::QSqrt2;
pub use rational::Rational;
pub use spectral::{op_norm, op_norm_certificate, unitary_eigs, EigenCluster, OpNormCertificate};

#[derive(Debug, Clone, thiserror::Error)]
pub enum NumericError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("empty matrix")]
    Empty,
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("matrix is not square")]
    NotSquare,
    #[error("matrix is not unitary")]
    NotUnitary,
    #[error("parse error: {0}")]
    Parse(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("budget exhausted computing {what}; best enclosure {best}")]
    Budget { best: RatInterval, what: String },
}
