use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, LabError>;

/// Failure modes shared by every numerical module.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LabError {
    #[error("point {z} lies within 1e-14 of the pole {pole}")]
    PoleHit { z: Complex64, pole: Complex64 },

    #[error("preimage polishing stalled at residual {residual:e} after {iterations} Newton steps")]
    RootFindFailure { residual: f64, iterations: usize },

    #[error("pullback iteration did not converge: gap {gap:e} after {steps} steps")]
    NoConvergence { gap: f64, steps: usize },

    #[error("cocycle is not admissible: no radius R in the search ladder gives r_T(R) < R (best bound {bound} at R = {radius})")]
    NotAdmissible { radius: f64, bound: f64 },

    #[error("fiber map is not expanding on the unit circle (min |T'| = {min_derivative})")]
    NotExpanding { min_derivative: f64 },

    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("base point outside the domain: {0}")]
    DomainError(String),

    #[error("|z| = {modulus} is within 1e-12 of the unit circle")]
    BoundaryBlowup { modulus: f64 },

    #[error("class mismatch: {0}")]
    ClassMismatch(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("invalid Blaschke product: {0}")]
    InvalidProduct(String),

    #[error("invalid coefficient field: {0}")]
    InvalidField(String),
}

impl LabError {
    /// Short stable name of the error class, used on diagnostic output.
    pub fn class(&self) -> &'static str {
        match self {
            LabError::PoleHit { .. } => "PoleHit",
            LabError::RootFindFailure { .. } => "RootFindFailure",
            LabError::NoConvergence { .. } => "NoConvergence",
            LabError::NotAdmissible { .. } => "NotAdmissible",
            LabError::NotExpanding { .. } => "NotExpanding",
            LabError::NumericalBreakdown(_) => "NumericalBreakdown",
            LabError::DimensionMismatch { .. } => "DimensionMismatch",
            LabError::DomainError(_) => "DomainError",
            LabError::BoundaryBlowup { .. } => "BoundaryBlowup",
            LabError::ClassMismatch(_) => "ClassMismatch",
            LabError::DegenerateFit(_) => "DegenerateFit",
            LabError::InvalidProduct(_) => "InvalidProduct",
            LabError::InvalidField(_) => "InvalidField",
        }
    }
}
