//! Fourier-space projection operators, matrix-free Krylov solvers and periodic homogenization
//! for linear field equations of the form `J = L(x) E − s(x)` with `Γ₁E = E`, `Γ₁J = 0`.
//!
//! The crate is `no_std` with `alloc`. Fourier transforms are supplied through
//! [`fourier::FourierBackend`]; [`fourier::SeparableDft`] is a slow reference implementation.
#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

pub mod error;
pub mod exact;
pub mod field;
pub mod fourier;
pub mod grid;
pub mod homogenize;
pub mod layout;
pub mod linalg;
pub mod operator;
pub mod physics;
pub mod projection;
pub mod solver;

pub use num_complex::Complex64 as C64;

pub use error::{Error, Result};
pub use field::{Field, Space};
pub use fourier::{Direction, FourierBackend, SeparableDft};
pub use grid::Grid;
pub use layout::{Block, BlockKind, Layout};
pub use operator::{LocalOperator, MatrixField, Penalty, PhaseMap};
pub use physics::{Convention, Problem, ProblemMeta};
pub use projection::{DSymbol, ProjectionSpec};
pub use solver::{Method, SolveOptions, SolveReport, Solution};
