use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("denominator vanishes at s = j{omega} (entry {row},{col})")]
    PoleOnAxis { omega: f64, row: usize, col: usize },

    #[error("(jωI - A) is numerically singular at ω = {omega}")]
    Singular { omega: f64 },

    #[error("entry {row},{col} is improper (deg num {num_degree} > deg den {den_degree})")]
    ImproperEntry {
        row: usize,
        col: usize,
        num_degree: usize,
        den_degree: usize,
    },

    #[error("feedback interconnection is ill-posed: I + D1 D2 is singular")]
    IllPosed,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("bad frequency range: {0}")]
    BadRange(String),

    #[error("eigensolver failed: {0}")]
    EigFailure(String),

    #[error("matrix is not sectorial")]
    NotSectorial,

    #[error("supporting angles are not defined for a non-sectorial matrix")]
    NotDefined,

    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),

    #[error("dimension {0} too large for the dense oracle (max 4)")]
    DimensionTooLarge(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),
}
