//! Small dense and tridiagonal linear-algebra kernels.

pub mod tridiag;

pub use tridiag::{SymTridiag, TridiagEigen};
