use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("theta series did not converge within {max_index} terms")]
    TruncationNotConverged { max_index: usize },
    #[error("degenerate sample point: both sides vanish")]
    DegenerateSample,
    #[error("parameter on singular locus: {0}")]
    SingularLocus(String),
    #[error("tau lies on the torsion locus (1/n)Lambda; use the R_+ limit instead")]
    TauOnTorsion,
    #[error("ambiguous rank {rank}: singular value gap {gap:.3e} below required {min_gap:.1e}")]
    AmbiguousRank { rank: usize, gap: f64, min_gap: f64 },
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("enumeration cap exceeded: {0}")]
    Cap(String),
}

pub type Result<T> = std::result::Result<T, Error>;
