//! Partial Hamiltonians `H_j = H_j^free + V_j` discretized with centered
//! finite differences on particle `j`'s coordinates.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::grid::{Boundary, GridFunction};
use super::pair::PairPotential;
use crate::error::{Error, Result};
use crate::operator::{pauli, Operator, C64, I};

const HERMITIAN_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum FreeKind {
    /// `−Δ_j / (2m)`.
    Schrodinger { mass: f64 },
    /// `−i α_j·∇_j + β_j m` with 4-spinors in the Dirac representation.
    Dirac { mass: f64 },
    /// `−i σ₁ ∂_j + σ₃ m` with 2-spinors.
    Dirac1d { mass: f64 },
}

impl FreeKind {
    pub fn mass(&self) -> f64 {
        match *self {
            FreeKind::Schrodinger { mass } | FreeKind::Dirac { mass } | FreeKind::Dirac1d { mass } => mass,
        }
    }
}

pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type MatrixFn = Arc<dyn Fn(&[f64]) -> Operator + Send + Sync>;

/// Multiplication operator `V_j`, a function of all particle positions
/// (flattened, particle-major).
#[derive(Clone)]
pub enum LatticePotential {
    /// `share · Σ_{k≠j} W(x_j − x_k)`.
    PairShare { pair: PairPotential, share: f64 },
    Scalar(ScalarFn),
    /// Hermitian matrix on the full spin space.
    Matrix(MatrixFn),
}

impl fmt::Debug for LatticePotential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LatticePotential::PairShare { pair, share } => {
                f.debug_struct("PairShare").field("pair", pair).field("share", share).finish()
            }
            LatticePotential::Scalar(_) => f.write_str("Scalar(<fn>)"),
            LatticePotential::Matrix(_) => f.write_str("Matrix(<fn>)"),
        }
    }
}

enum PotentialValue {
    Zero,
    Scalar(f64),
    Matrix(Operator),
}

#[derive(Clone, Debug)]
pub struct PartialHamiltonianSpec {
    /// Zero-based particle index.
    pub particle: usize,
    pub kind: FreeKind,
    pub potential: Option<LatticePotential>,
    pub stencil_order: usize,
}

/// Particle count, space dimension and spin dimensions of a wave function.
#[derive(Clone, Debug, PartialEq)]
pub struct Layout {
    pub n_particles: usize,
    pub space_dim: usize,
    pub spin_dims: Vec<usize>,
}

impl Layout {
    pub fn of(psi: &GridFunction) -> Self {
        Layout { n_particles: psi.n_particles, space_dim: psi.grid.space_dim, spin_dims: psi.spin_dims.clone() }
    }

    pub fn spin_total(&self) -> usize {
        self.spin_dims.iter().product()
    }

    /// Stride of particle `j`'s spin index within the spin multi-index.
    pub fn spin_stride(&self, j: usize) -> usize {
        self.spin_dims[j + 1..].iter().product()
    }
}

impl PartialHamiltonianSpec {
    pub fn new(particle: usize, kind: FreeKind, stencil_order: usize) -> Self {
        PartialHamiltonianSpec { particle, kind, potential: None, stencil_order }
    }

    pub fn with_potential(mut self, v: LatticePotential) -> Self {
        self.potential = Some(v);
        self
    }

    pub fn validate(&self, layout: &Layout) -> Result<()> {
        let j = self.particle;
        if j >= layout.n_particles {
            return Err(Error::invalid(format!("particle {} out of range for {} particles", j + 1, layout.n_particles)));
        }
        if self.stencil_order != 2 && self.stencil_order != 4 {
            return Err(Error::invalid(format!("stencil order must be 2 or 4, got {}", self.stencil_order)));
        }
        let m = self.kind.mass();
        if !(m >= 0.0 && m.is_finite()) {
            return Err(Error::invalid(format!("mass must be finite and non-negative, got {m}")));
        }
        let k = layout.spin_dims[j];
        match self.kind {
            FreeKind::Schrodinger { mass } if mass == 0.0 => {
                return Err(Error::invalid("Schrödinger kinetic term needs a positive mass"))
            }
            FreeKind::Dirac { .. } if layout.space_dim != 3 || k != 4 => {
                return Err(Error::shape(format!(
                    "3D Dirac Hamiltonian needs 4-spinors in 3 dimensions, particle {} has spin dimension {k} in {}D",
                    j + 1,
                    layout.space_dim
                )))
            }
            FreeKind::Dirac1d { .. } if layout.space_dim != 1 || k != 2 => {
                return Err(Error::shape(format!(
                    "1D Dirac Hamiltonian needs 2-spinors in 1 dimension, particle {} has spin dimension {k} in {}D",
                    j + 1,
                    layout.space_dim
                )))
            }
            _ => {}
        }
        if let Some(LatticePotential::PairShare { pair, share }) = &self.potential {
            pair.validate()?;
            if !share.is_finite() {
                return Err(Error::invalid("pair share must be finite"));
            }
        }
        Ok(())
    }

    fn potential_at(&self, layout: &Layout, q: &[f64]) -> Result<PotentialValue> {
        let d = layout.space_dim;
        Ok(match &self.potential {
            None => PotentialValue::Zero,
            Some(LatticePotential::PairShare { pair, share }) => {
                let j = self.particle;
                let xj = &q[j * d..(j + 1) * d];
                let mut v = 0.0;
                let mut r = vec![0.0; d];
                for k in (0..layout.n_particles).filter(|&k| k != j) {
                    for a in 0..d {
                        r[a] = xj[a] - q[k * d + a];
                    }
                    v += pair.value(&r);
                }
                PotentialValue::Scalar(share * v)
            }
            Some(LatticePotential::Scalar(f)) => PotentialValue::Scalar(f(q)),
            Some(LatticePotential::Matrix(f)) => {
                let m = f(q);
                if m.dim() != layout.spin_total() {
                    return Err(Error::shape(format!(
                        "matrix potential has dimension {}, spin space has {}",
                        m.dim(),
                        layout.spin_total()
                    )));
                }
                if !m.is_hermitian(HERMITIAN_TOL) {
                    return Err(Error::invalid(format!("matrix potential is not Hermitian at {q:?}")));
                }
                PotentialValue::Matrix(m)
            }
        })
    }
}

/// `(offset, weight)` pairs of the centered first-derivative stencil, in
/// units of `1/h`.
pub fn first_derivative_stencil(order: usize) -> &'static [(i64, f64)] {
    const O2: [(i64, f64); 2] = [(-1, -0.5), (1, 0.5)];
    const O4: [(i64, f64); 4] = [(-2, 1.0 / 12.0), (-1, -2.0 / 3.0), (1, 2.0 / 3.0), (2, -1.0 / 12.0)];
    if order == 4 {
        &O4
    } else {
        &O2
    }
}

/// Centered second-derivative stencil in units of `1/h²`.
pub fn second_derivative_stencil(order: usize) -> &'static [(i64, f64)] {
    const O2: [(i64, f64); 3] = [(-1, 1.0), (0, -2.0), (1, 1.0)];
    const O4: [(i64, f64); 5] =
        [(-2, -1.0 / 12.0), (-1, 4.0 / 3.0), (0, -5.0 / 2.0), (1, 4.0 / 3.0), (2, -1.0 / 12.0)];
    if order == 4 {
        &O4
    } else {
        &O2
    }
}

/// `α_1..α_d` and `β` for one particle.
pub(crate) fn dirac_matrices(kind: FreeKind) -> (Vec<DMatrix<C64>>, DMatrix<C64>) {
    match kind {
        FreeKind::Dirac1d { .. } => (vec![pauli::x().into_matrix()], pauli::z().into_matrix()),
        _ => {
            let sx = pauli::x();
            let alphas = [pauli::x(), pauli::y(), pauli::z()].iter().map(|s| sx.kron(s).into_matrix()).collect();
            (alphas, pauli::z().kron(&pauli::id()).into_matrix())
        }
    }
}

/// `out += scale · (A acting on particle j's spin index) · input`.
pub(crate) fn add_spin_factor(a: &DMatrix<C64>, k: usize, stride: usize, input: &[C64], out: &mut [C64], scale: C64) {
    for (s, &x) in input.iter().enumerate() {
        if x == C64::new(0.0, 0.0) {
            continue;
        }
        let sj = (s / stride) % k;
        let base = s - sj * stride;
        for r in 0..k {
            let m = a[(r, sj)];
            if m != C64::new(0.0, 0.0) {
                out[base + r * stride] += scale * m * x;
            }
        }
    }
}

fn add_potential(v: &PotentialValue, input: &[C64], out: &mut [C64]) {
    match v {
        PotentialValue::Zero => {}
        PotentialValue::Scalar(x) => {
            for (o, i) in out.iter_mut().zip(input) {
                *o += *x * i;
            }
        }
        PotentialValue::Matrix(m) => {
            let mm = m.matrix();
            for (r, o) in out.iter_mut().enumerate() {
                for (c, i) in input.iter().enumerate() {
                    *o += mm[(r, c)] * i;
                }
            }
        }
    }
}

/// Applies the free part given the stencil samples of the wave function.
///
/// `sample(axis, offset)` returns the spinor at the current point displaced
/// by `offset` lattice steps along axis `axis` of particle `j`.
fn apply_free(
    spec: &PartialHamiltonianSpec,
    layout: &Layout,
    h: f64,
    center: &[C64],
    mut sample: impl FnMut(usize, i64) -> Vec<C64>,
    out: &mut [C64],
) {
    let d = layout.space_dim;
    match spec.kind {
        FreeKind::Schrodinger { mass } => {
            let c = -1.0 / (2.0 * mass * h * h);
            for axis in 0..d {
                for &(k, w) in second_derivative_stencil(spec.stencil_order) {
                    if k == 0 {
                        for (o, x) in out.iter_mut().zip(center) {
                            *o += c * w * x;
                        }
                    } else {
                        for (o, x) in out.iter_mut().zip(sample(axis, k)) {
                            *o += c * w * x;
                        }
                    }
                }
            }
        }
        FreeKind::Dirac { mass } | FreeKind::Dirac1d { mass } => {
            let (alphas, beta) = dirac_matrices(spec.kind);
            let kdim = layout.spin_dims[spec.particle];
            let stride = layout.spin_stride(spec.particle);
            let mut deriv = vec![C64::new(0.0, 0.0); center.len()];
            for (axis, alpha) in alphas.iter().enumerate() {
                deriv.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
                for &(k, w) in first_derivative_stencil(spec.stencil_order) {
                    for (dv, x) in deriv.iter_mut().zip(sample(axis, k)) {
                        *dv += (w / h) * x;
                    }
                }
                add_spin_factor(alpha, kdim, stride, &deriv, out, -I);
            }
            if mass != 0.0 {
                add_spin_factor(&beta, kdim, stride, center, out, C64::new(mass, 0.0));
            }
        }
    }
}

/// `(H_j^free + V_j) ψ` on the lattice.
pub fn apply_hamiltonian(spec: &PartialHamiltonianSpec, psi: &GridFunction) -> Result<GridFunction> {
    let layout = Layout::of(psi);
    spec.validate(&layout)?;
    let grid = &psi.grid;
    let (n, d, h) = (grid.points_per_axis, grid.space_dim, grid.spacing);
    let spins = psi.spin_total();
    let n_coords = psi.n_particles * d;
    let mut out = psi.clone();
    let zero = C64::new(0.0, 0.0);
    out.values.iter_mut().for_each(|z| *z = zero);
    let mut idx = vec![0usize; n_coords];
    let mut pos = vec![0.0; n_coords];
    for site in 0..psi.spatial_len() {
        psi.site_indices(site, &mut idx);
        for (p, &i) in pos.iter_mut().zip(&idx) {
            *p = grid.coord(i);
        }
        let center = &psi.values[site * spins..(site + 1) * spins];
        let block = &mut out.values[site * spins..(site + 1) * spins];
        let sample = |axis: usize, k: i64| -> Vec<C64> {
            let c = spec.particle * d + axis;
            let stride = n.pow((n_coords - 1 - c) as u32);
            let target = idx[c] as i64 + k;
            let wrapped = match grid.boundary {
                Boundary::Periodic => Some(target.rem_euclid(n as i64) as usize),
                Boundary::ZeroPadded => (0..n as i64).contains(&target).then_some(target as usize),
            };
            match wrapped {
                Some(t) => {
                    let nb = site - idx[c] * stride + t * stride;
                    psi.values[nb * spins..(nb + 1) * spins].to_vec()
                }
                None => vec![zero; spins],
            }
        };
        apply_free(spec, &layout, h, center, sample, block);
        let v = spec.potential_at(&layout, &pos)?;
        add_potential(&v, center, block);
    }
    Ok(out)
}

/// A wave function given in closed form: flattened positions to spinor.
pub type PointFn<'a> = &'a (dyn Fn(&[f64]) -> Vec<C64> + Sync);

/// `(H_j^free + V_j) f` at the point `q`, with stencils of step `h` applied
/// to the closed-form `f`. Nesting calls yields products of Hamiltonians
/// evaluated with exactly the lattice stencils, without a stored grid.
pub fn apply_hamiltonian_at(
    spec: &PartialHamiltonianSpec,
    layout: &Layout,
    f: PointFn<'_>,
    q: &[f64],
    h: f64,
) -> Result<Vec<C64>> {
    spec.validate(layout)?;
    let d = layout.space_dim;
    if q.len() != layout.n_particles * d {
        return Err(Error::shape(format!("point has {} coordinates, expected {}", q.len(), layout.n_particles * d)));
    }
    let center = f(q);
    if center.len() != layout.spin_total() {
        return Err(Error::shape(format!(
            "closed-form spinor has {} components, expected {}",
            center.len(),
            layout.spin_total()
        )));
    }
    let mut out = vec![C64::new(0.0, 0.0); center.len()];
    let mut shifted = q.to_vec();
    let sample = |axis: usize, k: i64| -> Vec<C64> {
        let c = spec.particle * d + axis;
        shifted.copy_from_slice(q);
        shifted[c] += k as f64 * h;
        f(&shifted)
    };
    apply_free(spec, layout, h, &center, sample, &mut out);
    let v = spec.potential_at(layout, q)?;
    add_potential(&v, &center, &mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::grid::Grid;
    use crate::lattice::pair::PairPotential;
    use std::f64::consts::PI;

    #[test]
    fn plane_wave_dispersion_dirac1d() {
        let n = 64;
        let h = 0.05;
        let grid = Grid::new(1, n, h, 0.0, Boundary::Periodic).unwrap();
        let k = 2.0 * PI * 3.0 / (n as f64 * h);
        let m = 0.7;
        let spinor = [C64::new(0.6, 0.1), C64::new(-0.3, 0.7)];
        let psi = GridFunction::from_fn(grid, 1, vec![2], |x, s| spinor[s] * (I * k * x[0]).exp()).unwrap();
        for order in [2, 4] {
            let spec = PartialHamiltonianSpec::new(0, FreeKind::Dirac1d { mass: m }, order);
            let out = apply_hamiltonian(&spec, &psi).unwrap();
            let eig = [spinor[1] * k + spinor[0] * m, spinor[0] * k - spinor[1] * m];
            let err = (0..n)
                .flat_map(|i| (0..2).map(move |s| (i, s)))
                .map(|(i, s)| (out.values[2 * i + s] - eig[s] * psi.values[2 * i] / spinor[0]).norm())
                .fold(0.0, f64::max);
            let bound = if order == 2 { (k * h).powi(2) * k } else { (k * h).powi(4) * k };
            assert!(err < bound, "order {order}: {err} vs {bound}");
        }
    }

    #[test]
    fn constant_is_annihilated_by_periodic_laplacian() {
        let grid = Grid::new(3, 8, 0.2, 0.0, Boundary::Periodic).unwrap();
        let psi = GridFunction::from_fn(grid, 1, vec![1], |_, _| C64::new(1.3, -0.4)).unwrap();
        let spec = PartialHamiltonianSpec::new(0, FreeKind::Schrodinger { mass: 1.0 }, 4);
        let out = apply_hamiltonian(&spec, &psi).unwrap();
        assert!(out.values.iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn potential_is_pointwise() {
        let grid = Grid::new(1, 16, 0.25, -2.0, Boundary::ZeroPadded).unwrap();
        let w = PairPotential::gaussian(1.0, 0.5);
        let psi = GridFunction::from_fn(grid, 2, vec![2, 2], |x, s| C64::new(x[0] - x[1], s as f64)).unwrap();
        // Zero-mass Dirac has a nonzero derivative term, so isolate V by
        // subtracting the free action.
        let free = PartialHamiltonianSpec::new(1, FreeKind::Dirac1d { mass: 0.3 }, 2);
        let full = free.clone().with_potential(LatticePotential::PairShare { pair: w.clone(), share: 0.5 });
        let a = apply_hamiltonian(&full, &psi).unwrap();
        let b = apply_hamiltonian(&free, &psi).unwrap();
        let mut pos = [0.0; 2];
        for site in 0..psi.spatial_len() {
            psi.positions_into(site, &mut pos);
            let v = 0.5 * w.value(&[pos[1] - pos[0]]);
            for s in 0..4 {
                let i = site * 4 + s;
                assert!((a.values[i] - b.values[i] - v * psi.values[i]).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn point_form_matches_grid_form_in_the_interior() {
        let grid = Grid::new(1, 24, 0.1, -1.2, Boundary::ZeroPadded).unwrap();
        let f = |q: &[f64]| {
            vec![
                C64::new((-(q[0] * q[0]) - 0.5 * q[1] * q[1]).exp(), q[1]),
                C64::new(q[0] * q[1], (q[0] - q[1]).sin()),
                C64::new(0.2, q[0]),
                C64::new(q[1].cos(), 0.0),
            ]
        };
        let psi = GridFunction::from_fn(grid.clone(), 2, vec![2, 2], |q, s| f(q)[s]).unwrap();
        let spec = PartialHamiltonianSpec::new(0, FreeKind::Dirac1d { mass: 1.1 }, 4)
            .with_potential(LatticePotential::PairShare { pair: PairPotential::gaussian(0.8, 0.4), share: 0.5 });
        let on_grid = apply_hamiltonian(&spec, &psi).unwrap();
        let layout = Layout::of(&psi);
        for (i1, i2) in [(5, 7), (10, 3), (12, 12)] {
            let q = [grid.coord(i1), grid.coord(i2)];
            let at = apply_hamiltonian_at(&spec, &layout, &f, &q, grid.spacing).unwrap();
            let site = psi.site_of(&[i1, i2]);
            for s in 0..4 {
                assert!((at[s] - on_grid.values[site * 4 + s]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn spin_mismatch_is_a_shape_error() {
        let grid = Grid::new(1, 16, 0.1, 0.0, Boundary::Periodic).unwrap();
        let psi = GridFunction::zeros(grid, 1, vec![4]).unwrap();
        let spec = PartialHamiltonianSpec::new(0, FreeKind::Dirac1d { mass: 1.0 }, 2);
        assert!(matches!(apply_hamiltonian(&spec, &psi), Err(Error::Shape(_))));
    }
}
