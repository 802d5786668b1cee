//! Numerical engine for multi-time quantum evolution.
//!
//! A system with one time variable per particle evolves under one
//! Hamiltonian per time axis, `i ∂φ/∂t_j = H_j φ`. The modules here compute
//! the path-ordered propagators of such systems, measure the curvature that
//! obstructs a joint solution, analyse which interaction potentials are
//! compatible with consistency, and build the consistent multi-time Dirac
//! evolution with a range-δ pair interaction on a 1D lattice.

pub mod delta;
pub mod error;
pub mod geometry;
pub mod holonomy;
pub mod lattice;
pub mod operator;
pub mod poly;
pub mod potential;

pub use error::{Error, Result};
pub use operator::{commutator, matrix_exp, Operator, Spectrum, C64};
