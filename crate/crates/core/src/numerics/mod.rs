//! Dense complex linear algebra, linear ODE integration and Lindblad
//! superoperators shared by every physics module.
//!
//! All matrices are `ndarray::Array2<C64>` in row-major order. Nothing here
//! keeps global state; every call allocates its own workspace, so kernels can
//! be called from many threads at once.

pub mod eigen;
pub mod linalg;
pub mod ode;
pub mod superop;

pub use eigen::{eig_general, eig_pair, BiorthogonalEigen, Eigen};
pub use linalg::{
    conj_transpose, frobenius_norm, identity, inverse, kron, matvec, max_abs, LuDecomposition,
};
pub use ode::{integrate_linear, FnGenerator, IntegratorContract, LinearGenerator};
pub use superop::{vectorize_superoperator, JumpOperator};

pub type C64 = num_complex::Complex64;

/// Largest matrix dimension accepted by the dense kernels.
pub const DEFAULT_DIMENSION_CAP: usize = 512;

pub(crate) const I: C64 = C64::new(0.0, 1.0);
pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

#[cfg(test)]
pub(crate) fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}
