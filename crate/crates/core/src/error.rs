use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("FCIDUMP header is missing required key `{0}`")]
    MissingHeaderKey(&'static str),

    #[error("FCIDUMP header is malformed: {0}")]
    MalformedHeader(String),

    #[error("FCIDUMP line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("FCIDUMP line {line}: orbital index {index} exceeds NORB = {norb}")]
    IndexOutOfRange { line: usize, index: usize, norb: usize },

    #[error("FCIDUMP line {line}: entry {indices:?} = {value} conflicts with earlier value {previous}")]
    InconsistentEntry {
        line: usize,
        indices: [usize; 4],
        value: f64,
        previous: f64,
    },

    #[error("orbital index {index} out of range for {n_orbitals} spin-orbitals")]
    OrbitalOutOfRange { index: usize, n_orbitals: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("infeasible particle sector: {0}")]
    InfeasibleSector(String),

    #[error("matrix is rank deficient (smallest singular value {sigma_min:e})")]
    RankDeficient { sigma_min: f64 },

    #[error("matrix does not have orthonormal columns (deviation {deviation:e})")]
    NotOrthonormal { deviation: f64 },

    #[error("eigensolver did not converge after {iterations} iterations (residuals {residuals:?})")]
    NotConverged {
        iterations: usize,
        residuals: Vec<f64>,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
