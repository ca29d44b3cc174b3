//! Feasibility tests for Nevanlinna-Pick interpolation problems.
//!
//! Each setting (disk, Drury-Arveson and free-semigroup ball, quiver Toeplitz
//! algebras, polydisk) is decided by building a Hermitian matrix whose
//! positive semidefiniteness is equivalent to solvability, or by a
//! semidefinite feasibility search when no single matrix suffices. The
//! [`oracle`] module samples Schur-class elements so the necessity direction
//! of every criterion can be exercised numerically.

pub mod agler_np;
pub mod ball_np;
pub mod cp_toolkit;
pub mod disk_np;
pub mod error;
pub mod matcore;
pub mod oracle;
pub mod quiver_np;
pub mod random;

pub use error::{Error, Result};
pub use matcore::{ComplexMatrix, HermitianMatrix, PsdVerdict, SumMethod, Tolerance, C64};
