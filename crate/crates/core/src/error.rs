use thiserror::Error;

/// Errors raised by the analysis pipeline.
///
/// Structural findings (non-hyperbolic spectra, incompatible boundary data)
/// are reported as data in certificates and reports, not through this type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("division by the zero polynomial")]
    DivisionByZero,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("zero polynomial has no root isolation")]
    ZeroPolynomial,
    #[error("singular matrix: {0}")]
    Singular(String),
    #[error("invalid rational literal {0:?}")]
    RationalLiteral(String),
    #[error("problem schema violation: {0}")]
    Schema(String),
    #[error("boundary operators (M0 | M1) have rank {rank}, expected full row rank {k}")]
    BoundaryRank { rank: usize, k: usize },
    #[error("{name} is not symmetric")]
    NotSymmetric { name: &'static str },
    #[error("{name} is not positive semidefinite")]
    Indefinite { name: &'static str },
    #[error("horizon must be positive, got {0}")]
    Horizon(f64),
    #[error("pair (A, B) is not controllable: Kalman rank {rank} < {n}")]
    Uncontrollable { rank: usize, n: usize },
    #[error("input matrix B has column rank {rank} < {m}; prune redundant inputs")]
    RedundantInputs { rank: usize, m: usize },
    #[error("Euler-Lagrange operator has a zero invariant factor; no finite realization")]
    SingularFactor,
    #[error("eigenvalue {re:+.3e}{im:+.3e}i lies within {floor:e} of the imaginary axis")]
    NearImaginary { re: f64, im: f64, floor: f64 },
    #[error("root quartet symmetry violated at {re:+.6e}{im:+.6e}i")]
    QuartetViolation { re: f64, im: f64 },
    #[error("boundary operator is not admissible: {0}")]
    NotAdmissible(String),
    #[error("finite-horizon boundary map is numerically singular (condition {0:e})")]
    IllConditioned(f64),
    #[error("degenerate fitting window: trajectory is identically at the turnpike")]
    DegenerateWindow,
    #[error("oracle unavailable: {0}")]
    OracleUnavailable(String),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
