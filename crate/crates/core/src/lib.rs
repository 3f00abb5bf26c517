//! Self-similar profiles of Smoluchowski's coagulation equation for
//! homogeneous kernels `a(x, y) = x^α y^β + x^β y^α`, `-1 < α <= β < 1`,
//! `λ = α + β ∈ (-1, 1)`.
//!
//! Every numerical routine is generic over the scalar type (`f32` or `f64`);
//! the `*64` aliases below fix the common double-precision instantiation.
//!
//! Finite-part convolutions `{u} * {v} = u * v − M0[v] u − M0[u] v` are never
//! stored as objects. At a node `x` they are evaluated as
//! `∫_0^{x/2} u(z)[v(x−z) − v(x)] + v(z)[u(x−z) − u(x)] dz
//!  − v(x)∫_{x/2}^∞ u − u(x)∫_{x/2}^∞ v`,
//! which is finite even when `u` or `v` is not integrable at the origin.

pub mod analyzer;
pub mod coagop;
pub mod dynamics;
pub mod error;
pub mod fracalc;
pub mod grid;
pub mod kernel;
pub mod profiles;
pub mod real;
mod sampled;

pub use error::{Error, Result};
pub use grid::{Grid, GridFunction, GridKind, Moment};
pub use kernel::{KernelClass, KernelSpec, KernelTerm};
pub use real::Real;

pub type Grid64 = grid::Grid<f64>;
pub type Grid32 = grid::Grid<f32>;
pub type GridFunction64 = grid::GridFunction<f64>;
pub type GridFunction32 = grid::GridFunction<f32>;
pub type KernelSpec64 = kernel::KernelSpec<f64>;
pub type KernelSpec32 = kernel::KernelSpec<f32>;
pub type ProfileSolution64 = profiles::ProfileSolution<f64>;
pub type ProfileSolution32 = profiles::ProfileSolution<f32>;
pub type SolverOptions64 = profiles::SolverOptions<f64>;
pub type EvolutionState64 = dynamics::EvolutionState<f64>;
pub type VerificationReport64 = analyzer::VerificationReport<f64>;
