//! Dense symmetric linear algebra shared by the rest of the crate.

mod basis;
mod cholesky;
mod eigen;
mod matrix;
mod tridiagonal;
pub mod testing;

pub use basis::orthonormal_completion;
pub use cholesky::{spd_solve, Cholesky};
pub use eigen::{
    fix_sign, nuclear_norm, sym_eig_jacobi, soft_threshold, svd_soft_threshold, sym_eig, top_eigvec, EigenDecomp,
    Thresholded, POWER_ITERATION_CAP,
};
pub use tridiagonal::sym_eig_tridiagonal;
pub use matrix::{axpy, dot, norm, Matrix, SymMatrix, SYMMETRY_TOL};
