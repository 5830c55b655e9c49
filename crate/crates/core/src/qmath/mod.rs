//! Dense complex linear algebra used throughout the crate.
//!
//! Matrices are `nalgebra::DMatrix<Complex64>`. Everything here is a pure
//! function of its inputs; randomness only enters through [`RngStream`].

mod density;
mod linalg;
mod random;

pub use density::DensityMatrix;
pub use linalg::{
    basis_vector, frobenius_norm, hermitian_eigen, herm_expm, identity, is_hermitian, is_unitary,
    kron, kron_vec, partial_trace, projector, trace, HermitianEigen,
};
pub use random::{random_hermitian, random_mixed_qubit, random_unitary, RngStream};

pub use num_complex::Complex64;

pub type CMatrix = nalgebra::DMatrix<Complex64>;
pub type CVector = nalgebra::DVector<Complex64>;

/// Tolerance for Hermiticity checks on inputs.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Tolerance for unit trace of density matrices and POVM completeness.
pub const TRACE_TOL: f64 = 1e-10;
/// Most negative eigenvalue accepted for a positive operator.
pub const POSITIVITY_TOL: f64 = 1e-10;

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}
