use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed letter {letter} for {n} generators")]
    MalformedLetter { letter: i32, n: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian (deviation {deviation:e})")]
    NotHermitian { deviation: f64 },
    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },
    #[error("polynomial is not symmetric (deviation {deviation:e})")]
    NotSymmetric { deviation: f64 },
    #[error("basis degree {degree} too small: word {word} is not reachable")]
    DegreeTooSmall { degree: usize, word: String },
    #[error("invalid SDP problem: {0}")]
    InvalidProblem(String),
    #[error("invalid moment certificate: {0}")]
    InvalidMoment(String),
    #[error("numerical contraction violation: sigma_max = {0}")]
    ContractionViolation(f64),
    #[error("degenerate numerics: {0}")]
    DegenerateNumerics(String),
    #[error("witness extraction failed: {0}")]
    WitnessFailed(String),
    #[error("grid oracle budget exceeded: {evaluations} evaluations > {budget}")]
    BudgetExceeded { evaluations: u128, budget: u128 },
    #[error("certificate rejected: {0}")]
    Rejected(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
