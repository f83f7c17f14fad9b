//! Least-energy bound states of coupled cubic Schrödinger systems.
//!
//! This crate discretizes systems of `d` coupled equations
//!
//! ```text
//!   -Δu_i + V_i(x) u_i = Σ_j β_ij(x) u_j² u_i      on Ω, Dirichlet boundary
//! ```
//!
//! on 1D intervals and radially symmetric balls, and minimizes the energy
//!
//! ```text
//!   J(u) = ½ Σ_i ∫ |∇u_i|² + V_i u_i²  −  ¼ Σ_ij ∫ β_ij u_i² u_j²
//! ```
//!
//! over a Nehari-type manifold adapted to a grouping of the components.
//! Components inside a group may cooperate (β_ij ≥ 0) while distinct groups
//! compete; the manifold constrains each group norm against the interaction
//! matrix `M(B,u)`, and minimization runs on states whose interaction matrix
//! is strictly diagonally dominant so the constraint is natural (constrained
//! critical points are free critical points).
//!
//! Module map:
//! - [`discretize`]: grids, quadrature, Dirichlet Laplacian, H¹ forms, a
//!   numerically computed Sobolev constant.
//! - [`problem`]: component grouping, coefficient data, hypothesis checks,
//!   and a structural detector for non-existence of positive solutions.
//! - [`nehari`]: interaction matrix, energy/gradient, the group-scaling
//!   polynomial Ψ, projection onto the manifold, tangent projection.
//! - [`solver`]: tangent-projected descent with Armijo backtracking and
//!   deterministic multi-start.
//! - [`analysis`]: bound reports, overlaps, segregation limits, and the
//!   second-variation test for semi-trivial states.
//! - [`oracle`]: slow, independent reference computations used to
//!   cross-validate the fast paths.
//!
//! The crate is `no_std` (with `alloc`); all float math goes through `libm`
//! so results are reproducible across platforms. Every type is plain data
//! (`Send + Sync`), every operation is a pure function of its inputs, and
//! all randomness is drawn from caller-seeded ChaCha streams.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod analysis;
pub mod discretize;
mod linalg;
pub mod nehari;
pub mod oracle;
pub mod problem;
pub mod solver;

pub use discretize::{Field, Grid, GridKind};
pub use nehari::{InteractionMatrix, PsiStatus, State};
pub use problem::{Decomposition, HypothesisReport, ProblemSpec};
pub use solver::{GuessStyle, SolverConfig, SolverResult};
