//! Dense complex linear algebra: matrices, Kronecker products, partial
//! traces, Hermitian eigendecomposition and functions of Hermitian matrices.

mod density;
mod eigen;
mod matrix;

pub use density::DensityMatrix;
pub use eigen::{eig_hermitian, expm_hermitian, Eigensystem};
pub(crate) use eigen::hermitian_tolerance;
pub use matrix::{kron, kron_all, partial_trace, ComplexMatrix};
