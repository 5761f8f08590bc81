//! Exact computational toolkit for AH-algebra building blocks over finite graphs.
//!
//! The crate is organised bottom-up:
//!
//! - [`geometry`]: finite metric graphs, exact points, piecewise-linear maps,
//!   closed subsets and covering trees, all over exact rationals.
//! - [`blocks`]: homogeneous building blocks `⊕ C(Z_j) ⊗ M_{n_j}` and their
//!   piecewise-linear matrix-valued elements.
//! - [`diagmaps`]: homomorphisms given in eigenvalue (diagonal) form, maximal
//!   homogeneity, injectivity and conditional expectations.
//! - [`perturb`]: the perturbation pipeline turning a maximally homogeneous
//!   connecting map into an injective one with a certified distance bound.
//! - [`ahsys`]: inductive systems with generalized diagonal connecting maps,
//!   example families and the approximate-intertwining checker.
//! - [`groupoid`]: finite-depth truncations of the limit groupoid.

pub mod ahsys;
pub mod blocks;
pub mod diagmaps;
pub mod error;
pub mod fixtures;
pub mod geometry;
pub mod groupoid;
pub mod matrix;
pub mod perturb;
pub mod rational;

pub use error::{Error, Result};
pub use rational::Q;
