//! Coherence-based recovery toolkit.
//!
//! Three unconstrained sparse recovery models are solved to certified
//! optimality:
//!
//! - Lasso: `‖x‖₁ + (1/2λ)‖b − Ax‖₂²`
//! - DS-regularized ℓ1: `‖x‖₁ + (1/2λ)‖Aᵀ(b − Ax)‖∞²`
//! - group Lasso: `‖x‖₂,₁ + (1/2λ)‖b − Ax‖₂²`
//!
//! Alongside the solvers the crate computes mutual coherence, block coherence
//! and sub-coherence of a measurement matrix, the closed-form error bounds
//! that hold under `μ < 1/(2k−1)` (and its block analogue), and runs seeded
//! experiments that check recovery errors against those bounds.
//!
//! Module map:
//!
//! - [`matrixlab`]: measurement matrices, coherence quantities, brute-force
//!   eigenvalue check of k-column Gram submatrices.
//! - [`bounds`]: α/β factors, error-bound constants, recovery conditions.
//! - [`signals`]: ground-truth signals, noise models, k-term approximations.
//! - [`solvers`]: proximal maps, FISTA and ADMM solvers, KKT certificates.
//! - [`harness`]: experiment configs, runs, CSV/JSON emission.
//! - [`cli`]: the `coherence-cs` command line.

#![forbid(unsafe_code)]

pub mod bounds;
pub mod cli;
pub mod error;
pub mod harness;
pub mod matrixlab;
pub mod rng;
pub mod signals;
pub mod solvers;
mod textio;

pub use error::{Error, Result};

/// Dense column vector used throughout the crate.
pub type Vector = nalgebra::DVector<f64>;
/// Dense matrix used throughout the crate.
pub type Matrix = nalgebra::DMatrix<f64>;
