//! Shared convex-feasibility engines: an exact phase-1/phase-2 simplex
//! for equality-form linear programs, and Dykstra alternating projections
//! onto the intersection of an affine subspace with the PSD cone.

mod dykstra;
mod simplex;

pub use dykstra::{
    dykstra_feasibility, AffinePsdProblem, ChoiPattern, DykstraSolver, SingleRunOutcome,
};
pub use simplex::{lp_solve, LinearProgram, LpOutcome};
