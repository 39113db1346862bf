use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("matrix is not symplectic: defect {defect:e} exceeds tolerance {tol:e}")]
    NotSymplectic { defect: f64, tol: f64 },

    #[error("matrix is not symmetric positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("numerical degeneracy: {0}")]
    NumericalDegeneracy(String),

    #[error("unsupported region: {0}")]
    UnsupportedRegion(String),

    #[error("sandwich certificate violated at {witness:?}: {reason}")]
    CertificateInvalid { witness: Vec<f64>, reason: String },

    #[error("neck radius {neck} must lie strictly inside (0, {radius})")]
    InvalidNeck { radius: f64, neck: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("flow error: {0}")]
    Flow(String),

    #[error("flow diverged at t = {time}")]
    FlowDiverged { time: f64 },

    #[error("energy {energy} lies below the potential minimum {minimum}")]
    NoClassicalRegion { energy: f64, minimum: f64 },

    #[error("energy {energy} intersects more than one classically allowed interval")]
    MultiWell { energy: f64 },

    #[error("potential does not confine energy {energy} on the search bracket")]
    NotConfining { energy: f64 },

    #[error("action integral is not monotone in energy near E = {energy}")]
    NonMonotoneAction { energy: f64 },

    #[error("level n = {n} is not bound")]
    LevelNotBound { n: u32 },

    #[error("capacity is infinite, not a quantum blob")]
    NotABlob,

    #[error("closed form unavailable: {0}")]
    UnsupportedForClosedForm(String),
}

impl Error {
    /// Stable machine-readable name used in structured error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Dimension(_) => "DimensionError",
            Error::NotSymplectic { .. } => "NotSymplectic",
            Error::NotPositiveDefinite { .. } => "NotPositiveDefinite",
            Error::NumericalDegeneracy(_) => "NumericalDegeneracy",
            Error::UnsupportedRegion(_) => "UnsupportedRegion",
            Error::CertificateInvalid { .. } => "CertificateInvalid",
            Error::InvalidNeck { .. } => "InvalidNeck",
            Error::InvalidInput(_) => "InvalidInput",
            Error::Flow(_) => "FlowError",
            Error::FlowDiverged { .. } => "FlowDiverged",
            Error::NoClassicalRegion { .. } => "NoClassicalRegion",
            Error::MultiWell { .. } => "MultiWell",
            Error::NotConfining { .. } => "NotConfining",
            Error::NonMonotoneAction { .. } => "NonMonotoneAction",
            Error::LevelNotBound { .. } => "LevelNotBound",
            Error::NotABlob => "NotABlob",
            Error::UnsupportedForClosedForm(_) => "UnsupportedForClosedForm",
        }
    }

    /// Input-validation failures, as opposed to numerical failures.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Dimension(_)
                | Error::InvalidInput(_)
                | Error::InvalidNeck { .. }
                | Error::UnsupportedRegion(_)
                | Error::NotSymplectic { .. }
                | Error::NotPositiveDefinite { .. }
        )
    }
}
