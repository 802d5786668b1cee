//! Hamiltonian fields over time tuples, their ordered exponentials and
//! curvature.

pub mod curvature;
pub mod field;
pub mod frobenius;
pub mod path;
pub mod stokes;
pub mod transport;

pub use curvature::{consistency_residual, CurvaturePair, CurvatureReport, DEFAULT_FD_STEP};
pub use field::{
    AffineField, ConstantField, FnField, GaugeRotatedField, GradientField, HamiltonianField, TabulatedField,
};
pub use frobenius::frobenius_residual;
pub use path::TimePath;
pub use stokes::{boundary_holonomy, surface_ordered_exp, SurfacePatch};
pub use transport::{
    dyson3, loop_holonomy, multitime_solve, path_independence_gap, path_ordered_exp, rectangle_holonomy,
    RectangleHolonomy,
};
