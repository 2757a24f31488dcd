//! Latent-variable Gaussian graphical model selection.
//!
//! Estimates a precision matrix as `S − L` with `S` sparse and `L` low rank
//! and positive semidefinite by solving
//!
//! ```text
//! min  ⟨R, Σ̂⟩ − log det R + α‖S‖₁ + β Tr(L)
//! s.t. R − S + L = 0,  L ⪰ 0
//! ```
//!
//! with one of three alternating-direction schemes built on closed-form
//! proximal mappings.

pub mod bench;
pub mod datagen;
pub mod error;
pub mod matrix;
pub mod prox;
pub mod solvers;

pub use error::{Error, Result};
pub use matrix::SymmetricMatrix;
pub use prox::ShrinkMode;
pub use solvers::{solve, Problem, SolveReport, SolverOptions, Variant};
