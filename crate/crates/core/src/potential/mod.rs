//! Which potentials are compatible with multi-time consistency.
//!
//! Numerical counterparts of the necessary relations on scalar and matrix
//! potentials, and the constructive gauge decomposition for potentials that
//! satisfy them.

pub mod field;
pub mod gauge;
pub mod matrix;
pub mod residuals;
pub mod sampling;

pub use field::{coulomb_split, gaussian_split, GaugePlusExternal, MatrixPotentialField, PotentialField};
pub use gauge::{gauge_decompose, GaugeDecomposition, GaugeOptions};
pub use matrix::{complete_hermitian_basis, matrix_relation_residuals, ConstantBasis, MatrixBasis};
pub use residuals::{relation_residuals, ResidualRow, ResidualTable};
