//! Left-invariant Hermitian structures on Lie groups and their Kähler-like
//! connections.
//!
//! A structure is given by complex structure constants `C^j_{ik}`,
//! `D^j_{ik}` under a fixed unitary `(1,0)`-frame `e_1, …, e_n`:
//!
//! ```text
//! C^j_{ik} = <[e_i, e_k], ē_j>,     D^j_{ik} = <[ē_j, e_k], e_i>
//! ```
//!
//! From these the crate builds the Riemannian, Chern, Strominger (Bismut) and
//! 0-Gauduchon connections, their curvature on the real orthonormal frame
//! `ε_1, …, ε_{2n}` (`e_a = (ε_a − iε_{n+a})/√2`), exterior calculus on
//! invariant forms, and decision procedures for the Kähler-like conditions
//! on nilpotent groups.
//!
//! Public accessors use 1-based indices; internal arrays are 0-based.

pub mod algebra;
pub mod catalog;
pub mod classify;
pub mod connections;
pub mod exec;
pub mod forms;
pub mod linalg;
mod tensor;

mod error;

pub use error::{Error, Result};

pub use num_complex::Complex64;

/// Default residual tolerance for boolean decisions.
pub const DEFAULT_TOL: f64 = 1e-8;

/// Relative singular-value threshold for rank decisions.
pub const RANK_TOL: f64 = 1e-9;
