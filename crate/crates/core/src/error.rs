use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("QR iteration did not converge after {iterations} iterations")]
    NotConverged { iterations: usize },

    #[error("matrix is not Hermitian: max |A - A^dagger| = {defect:e} exceeds {tol:e}")]
    NotHermitian { defect: f64, tol: f64 },

    #[error("eigenvector residual {residual:e} exceeds bound {bound:e} (defective or ill-conditioned matrix)")]
    Residual { residual: f64, bound: f64 },

    #[error("integrator step underflow at t = {t} (step {step:e}); generator too stiff for tolerance")]
    StepUnderflow { t: f64, step: f64 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("integer range exceeded: {0}")]
    Overflow(String),

    #[error("skin parameter r = J_R/J_L is undefined for J_L = 0")]
    SkinParameterUndefined,

    #[error("exceptional point: eigenvector cluster at {eigenvalue} is defective (Gram condition {condition:e})")]
    ExceptionalPoint { eigenvalue: String, condition: f64 },

    #[error("stationary state is not unique: {zero_modes} zero modes")]
    NonUniqueSteadyState { zero_modes: usize },

    #[error("stationary state fails positivity: min eigenvalue {min_eigenvalue:e}")]
    Positivity { min_eigenvalue: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("edge weight undefined for the zero matrix")]
    ZeroMode,

    #[error("distance did not reach threshold within horizon {horizon}: final distance {final_distance:e}")]
    Horizon { horizon: f64, final_distance: f64 },

    #[error("series never settles below threshold {threshold}")]
    NotRelaxed { threshold: f64 },

    #[error("probability vector not normalized: sum = {sum}")]
    NotNormalized { sum: f64 },

    #[error("internal consistency check failed: {0}")]
    Consistency(String),
}
