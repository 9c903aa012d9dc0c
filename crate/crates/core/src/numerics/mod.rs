//! Dense complex linear algebra and time integration.

mod eigen;
mod hermitian;
mod integrate;
mod matrix;

pub use eigen::{eig_general, eigvals_general, EigenPair, DEGENERACY_TOL, RESIDUAL_TOL};
pub use hermitian::{eig_hermitian, eig_hermitian_with_tol, eigvals_hermitian, HermitianEigen, HERMITICITY_TOL};
pub use integrate::{integrate_fixed, integrate_linear, LinearGenerator, SparseMatrix, StepControl};
pub use matrix::{dot_conj, norm2, solve, ComplexMatrix, C64, ONE, ZERO};
