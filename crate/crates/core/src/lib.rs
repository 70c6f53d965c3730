//! Graph topology inference from smooth graph signals.
//!
//! Given nodal observations `X` (one signal per column), the crate learns a
//! nonnegative, symmetric, hollow adjacency matrix by minimizing
//!
//! ```text
//! 2 wᵀe + β‖w‖² − α 1ᵀ log(Sw)   subject to w ≥ 0
//! ```
//!
//! where `w` holds the upper-triangular edge weights, `e` the pairwise squared
//! distances between rows of `X`, and `S` the edge-to-degree operator. The
//! problem is solved in the dual with an accelerated proximal gradient method
//! (FDPG) or its plain variant (DPG).
//!
//! Modules:
//! - [`graph`]: edge-vector layout, the degree operator, distances and
//!   smoothness functionals.
//! - [`solver`]: FDPG/DPG iterations, dual objective, primal recovery, traces.
//! - [`datagen`]: Erdős–Rényi / SBM graphs and smooth signal sampling.
//! - [`evaluation`]: F-measure, grid search and convergence benchmarks.
//! - [`cli`]: command-line front end and file formats.

pub mod cli;
pub mod datagen;
pub mod error;
pub mod evaluation;
pub mod graph;
pub mod solver;

pub use error::{Error, Result};
pub use graph::{DualPoint, EdgeVector, SignalMatrix};
