//! Lattice discretizations: partial Hamiltonians on grids, commutator and
//! evolution-order diagnostics, and the characteristic Dirac scheme with an
//! exact one-cell-per-step light cone.

pub mod commutator;
pub mod dirac;
pub mod grid;
pub mod hamiltonian;
pub mod order_gap;
pub mod pair;

pub use grid::{Boundary, Grid, GridFunction};
pub use hamiltonian::{
    apply_hamiltonian, apply_hamiltonian_at, FreeKind, LatticePotential, Layout, PartialHamiltonianSpec, PointFn,
};
pub use pair::{PairKind, PairPotential, RangeCutoff};
pub use commutator::{commutator_check, commutator_check_grid, CommutatorCheck, CommutatorRhs, SINGULARITY_MARGIN};
pub use order_gap::{order_gap, rk4_evolve, OrderGap, MAX_NORM_DRIFT};
pub use dirac::{
    dirac1d_evolve, gaussian_pulse, lightcone_report, nparticle_dirac_evolve, DiracLattice, ExternalFn, LightconeRow,
};
