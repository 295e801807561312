//! Feedback synthesis for matrix dissipation.
//!
//! Given a square matrix `A` and a tall matrix `B` with `q < n` columns, the
//! toolkit decides whether the pair can be made dissipative — whether some
//! feedback `K` places the field of values of `A - BK` in the left half
//! plane — and computes such feedbacks, including approximations of the
//! minimal Frobenius norm one.
//!
//! Module map:
//! - [`numerics`]: deterministic dense eigenvalue/SVD/solve kernels.
//! - [`model`]: problem instances, feasibility, verification, inertia and
//!   rank diagnostics.
//! - [`constructors`]: direct feedback constructors (invariant subspace,
//!   classical parametrization, block parametrization, pencil search).
//! - [`gradient_flow`]: the two-phase minimal-norm method (inner constrained
//!   gradient flow on rank-m perturbations, outer Newton iteration).
//! - [`fov`]: field-of-values boundary sampling and flat-segment detection.
//! - [`bench`]: reproducible problem generators.

pub mod bench;
pub mod constructors;
pub mod error;
pub mod fov;
pub mod gradient_flow;
pub mod model;
pub mod numerics;
pub mod simplex;

pub use error::{Error, Result};
pub use model::{ControlPair, FeedbackResult};
