//! Approximate fast graph Fourier transforms.
//!
//! A graph Laplacian `L` is approximately diagonalized by a short product of
//! Givens rotations found greedily (truncated Jacobi). The rotation chain is
//! then a fast stand-in for the Laplacian eigenvector basis: applying it costs
//! `O(J)` instead of `O(n^2)` for a dense basis change.

pub mod error;
pub mod experiments;
pub mod filtering;
pub mod givens;
pub mod graph;
pub mod jacobi;
pub mod matrix;
pub mod metrics;
pub mod transform;

pub use error::{FgftError, Result};
pub use givens::{GivensRotation, ParallelFactor, RotationChain};
pub use graph::{laplacian, Graph};
pub use jacobi::{ApproxDiagonalization, Engine};
pub use matrix::{SparseLaplacian, SymmetricMatrix};
pub use transform::{load_fgft, save_fgft, Fgft};
