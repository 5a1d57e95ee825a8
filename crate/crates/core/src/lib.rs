//! Minimal sufficient forms of finite-dimensional quantum statistical
//! experiments, and postprocessing order for discrete POVMs.
//!
//! A statistical experiment is a labeled family of density matrices on a
//! matrix algebra. This crate computes its canonical block decomposition
//! (the Koashi-Imoto normal form), the state-preserving conditional
//! expectation onto the associated block algebra, minimal forms, and
//! isomorphism/coarse-graining certificates between experiments. Discrete
//! POVMs are handled through their quantum-to-classical channels:
//! postprocessing order and kernel minimality are decided by exact linear
//! programming, and the fully quantum dilation of a POVM is constructed
//! explicitly.
//!
//! The numerical core is self-contained dense complex linear algebra
//! (cyclic Jacobi eigensolver), an exact phase-1/phase-2 simplex, and
//! Dykstra alternating projections onto affine-plus-PSD feasibility sets.

pub mod algebra;
pub mod experiment;
pub mod io;
pub mod numerics;
pub mod optim;
pub mod povm;
pub mod superop;

mod error;

pub use error::Error;
pub use numerics::{ComplexMatrix, Tolerances};

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
