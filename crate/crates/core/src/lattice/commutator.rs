//! Lattice commutators `[H_i, H_j]ψ` against closed-form right-hand sides.

use std::sync::Mutex;

use serde::Serialize;

use super::grid::{Boundary, GridFunction};
use super::hamiltonian::{
    add_spin_factor, apply_hamiltonian, apply_hamiltonian_at, dirac_matrices, first_derivative_stencil, FreeKind,
    LatticePotential, Layout, PartialHamiltonianSpec, PointFn,
};
use super::pair::PairPotential;
use crate::error::{Error, Result};
use crate::operator::{C64, I};

/// Singular pair potentials are only probed this many spacings away from
/// coincidence.
pub const SINGULARITY_MARGIN: f64 = 5.0;

/// Closed form of `[H_i, H_j]` when `V_i = V_j = share·W(x_i − x_j)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum CommutatorRhs {
    Zero,
    /// `−(share/m) ∇W · (∇_i + ∇_j)`.
    SchrodingerPair { pair: PairPotential, share: f64, mass: f64 },
    /// `−i share ∇W · (α_i + α_j)`.
    DiracPair { pair: PairPotential, share: f64, kind: FreeKind },
}

impl CommutatorRhs {
    /// Reads the closed form off two partial Hamiltonians that share a pair
    /// potential. Free parts of different particles commute, so absent
    /// potentials give `Zero`.
    pub fn for_specs(a: &PartialHamiltonianSpec, b: &PartialHamiltonianSpec) -> Result<Self> {
        if a.kind != b.kind {
            return Err(Error::invalid("closed-form commutator needs both particles of the same kind"));
        }
        match (&a.potential, &b.potential) {
            (None, None) => Ok(CommutatorRhs::Zero),
            (
                Some(LatticePotential::PairShare { pair: p, share: s }),
                Some(LatticePotential::PairShare { pair: q, share: t }),
            ) if p == q && s == t => Ok(match a.kind {
                FreeKind::Schrodinger { mass } => CommutatorRhs::SchrodingerPair { pair: p.clone(), share: *s, mass },
                kind => CommutatorRhs::DiracPair { pair: p.clone(), share: *s, kind },
            }),
            _ => Err(Error::invalid("no closed-form commutator for these potentials")),
        }
    }

    fn pair(&self) -> Option<&PairPotential> {
        match self {
            CommutatorRhs::Zero => None,
            CommutatorRhs::SchrodingerPair { pair, .. } | CommutatorRhs::DiracPair { pair, .. } => Some(pair),
        }
    }

    /// Evaluates the right-hand side at `q` given first derivatives of ψ.
    ///
    /// `grad(particle, axis)` returns the stencil derivative of the spinor.
    fn eval(
        &self,
        layout: &Layout,
        i: usize,
        j: usize,
        q: &[f64],
        psi: &[C64],
        mut grad: impl FnMut(usize, usize) -> Vec<C64>,
    ) -> Vec<C64> {
        let d = layout.space_dim;
        let mut out = vec![C64::new(0.0, 0.0); psi.len()];
        let r: Vec<f64> = (0..d).map(|a| q[i * d + a] - q[j * d + a]).collect();
        match self {
            CommutatorRhs::Zero => {}
            CommutatorRhs::SchrodingerPair { pair, share, mass } => {
                let g = pair.gradient(&r);
                for (a, ga) in g.iter().enumerate() {
                    let c = -share / mass * ga;
                    for p in [i, j] {
                        for (o, x) in out.iter_mut().zip(grad(p, a)) {
                            *o += c * x;
                        }
                    }
                }
            }
            CommutatorRhs::DiracPair { pair, share, kind } => {
                let g = pair.gradient(&r);
                let (alphas, _) = dirac_matrices(*kind);
                for (a, ga) in g.iter().enumerate() {
                    for p in [i, j] {
                        let (k, stride) = (layout.spin_dims[p], layout.spin_stride(p));
                        add_spin_factor(&alphas[a], k, stride, psi, &mut out, -I * share * *ga);
                    }
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CommutatorCheck {
    /// `‖[H_i,H_j]ψ − RHSψ‖ / ‖RHSψ‖`, or the absolute norm when the
    /// right-hand side vanishes.
    pub residual: f64,
    pub commutator_norm: f64,
    pub rhs_norm: f64,
    pub samples: usize,
}

fn finish(num: f64, diff: f64, rhs: f64, samples: usize) -> CommutatorCheck {
    let residual = if rhs > 0.0 { diff.sqrt() / rhs.sqrt() } else { diff.sqrt() };
    CommutatorCheck { residual, commutator_norm: num.sqrt(), rhs_norm: rhs.sqrt(), samples }
}

fn check_margin(rhs: &CommutatorRhs, layout: &Layout, i: usize, j: usize, samples: &[Vec<f64>], h: f64) -> Result<()> {
    if !rhs.pair().is_some_and(|p| p.is_singular()) {
        return Ok(());
    }
    let d = layout.space_dim;
    for (s, q) in samples.iter().enumerate() {
        let dist = (0..d).map(|a| (q[i * d + a] - q[j * d + a]).powi(2)).sum::<f64>().sqrt();
        if dist < SINGULARITY_MARGIN * h {
            return Err(Error::invalid(format!(
                "sample {s} at {q:?} lies within {SINGULARITY_MARGIN}·spacing of the pair singularity (distance {dist})"
            )));
        }
    }
    Ok(())
}

/// Measures `[H_i, H_j]ψ` against `rhs` at the sample points for a
/// closed-form ψ, applying every derivative with the stencil of step `h`.
pub fn commutator_check(
    spec_i: &PartialHamiltonianSpec,
    spec_j: &PartialHamiltonianSpec,
    layout: &Layout,
    psi: PointFn<'_>,
    samples: &[Vec<f64>],
    h: f64,
    rhs: &CommutatorRhs,
) -> Result<CommutatorCheck> {
    spec_i.validate(layout)?;
    spec_j.validate(layout)?;
    let (i, j) = (spec_i.particle, spec_j.particle);
    if i == j {
        return Err(Error::invalid("commutator of a partial Hamiltonian with itself"));
    }
    if !(h > 0.0) {
        return Err(Error::invalid("stencil step must be positive"));
    }
    check_margin(rhs, layout, i, j, samples, h)?;
    let d = layout.space_dim;
    let failure = Mutex::new(None);
    let nested = |outer: &PartialHamiltonianSpec, inner: &PartialHamiltonianSpec, q: &[f64]| {
        let g = |p: &[f64]| {
            apply_hamiltonian_at(inner, layout, psi, p, h).unwrap_or_else(|e| {
                failure.lock().unwrap().get_or_insert(e);
                vec![C64::new(f64::NAN, 0.0); layout.spin_total()]
            })
        };
        apply_hamiltonian_at(outer, layout, &g, q, h)
    };
    let (mut num, mut diff, mut den) = (0.0, 0.0, 0.0);
    let order = spec_i.stencil_order;
    for q in samples {
        let ab = nested(spec_i, spec_j, q)?;
        let ba = nested(spec_j, spec_i, q)?;
        if let Some(e) = failure.lock().unwrap().take() {
            return Err(e);
        }
        let center = psi(q);
        let mut shifted = q.clone();
        let grad = |p: usize, a: usize| {
            let mut g = vec![C64::new(0.0, 0.0); center.len()];
            for &(k, w) in first_derivative_stencil(order) {
                shifted.copy_from_slice(q);
                shifted[p * d + a] += k as f64 * h;
                for (gi, x) in g.iter_mut().zip(psi(&shifted)) {
                    *gi += (w / h) * x;
                }
            }
            g
        };
        let r = rhs.eval(layout, i, j, q, &center, grad);
        for ((x, y), z) in ab.iter().zip(&ba).zip(&r) {
            let c = x - y;
            num += c.norm_sqr();
            diff += (c - z).norm_sqr();
            den += z.norm_sqr();
        }
    }
    Ok(finish(num, diff, den, samples.len()))
}

/// Lattice version: both products and the right-hand side are computed on
/// the stored grid function, summed over every site.
pub fn commutator_check_grid(
    spec_i: &PartialHamiltonianSpec,
    spec_j: &PartialHamiltonianSpec,
    psi: &GridFunction,
    rhs: &CommutatorRhs,
) -> Result<CommutatorCheck> {
    let layout = Layout::of(psi);
    let (i, j) = (spec_i.particle, spec_j.particle);
    if i == j {
        return Err(Error::invalid("commutator of a partial Hamiltonian with itself"));
    }
    let ab = apply_hamiltonian(spec_i, &apply_hamiltonian(spec_j, psi)?)?;
    let ba = apply_hamiltonian(spec_j, &apply_hamiltonian(spec_i, psi)?)?;
    let grid = &psi.grid;
    let (n, d, h) = (grid.points_per_axis, grid.space_dim, grid.spacing);
    let spins = psi.spin_total();
    let n_coords = psi.n_particles * d;
    let mut idx = vec![0; n_coords];
    let mut pos = vec![0.0; n_coords];
    let mut positions = Vec::new();
    for site in 0..psi.spatial_len() {
        psi.positions_into(site, &mut pos);
        positions.push(pos.clone());
    }
    check_margin(rhs, &layout, i, j, &positions, h)?;
    let (mut num, mut diff, mut den) = (0.0, 0.0, 0.0);
    for (site, q) in positions.iter().enumerate() {
        psi.site_indices(site, &mut idx);
        let center = &psi.values[site * spins..(site + 1) * spins];
        let grad = |p: usize, a: usize| {
            let c = p * d + a;
            let stride = n.pow((n_coords - 1 - c) as u32);
            let mut g = vec![C64::new(0.0, 0.0); spins];
            for &(k, w) in first_derivative_stencil(spec_i.stencil_order) {
                let t = idx[c] as i64 + k;
                let t = match grid.boundary {
                    Boundary::Periodic => t.rem_euclid(n as i64),
                    Boundary::ZeroPadded if (0..n as i64).contains(&t) => t,
                    Boundary::ZeroPadded => continue,
                } as usize;
                let nb = site - idx[c] * stride + t * stride;
                for (gi, x) in g.iter_mut().zip(&psi.values[nb * spins..(nb + 1) * spins]) {
                    *gi += (w / h) * x;
                }
            }
            g
        };
        let r = rhs.eval(&layout, i, j, q, center, grad);
        for s in 0..spins {
            let c = ab.values[site * spins + s] - ba.values[site * spins + s];
            num += c.norm_sqr();
            diff += (c - r[s]).norm_sqr();
            den += r[s].norm_sqr();
        }
    }
    Ok(finish(num, diff, den, positions.len()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::grid::Grid;

    fn gauss2(q: &[f64]) -> Vec<C64> {
        let a = (-(q[0] + 1.0).powi(2) / 0.5).exp();
        let b = (-(q[1] - 1.0).powi(2) / 0.5).exp();
        vec![C64::new(a * b, 0.3 * a), C64::new(0.2 * b, a * b), C64::new(a, -b), C64::new(a * b * q[0], 0.0)]
    }

    #[test]
    fn free_dirac_partials_commute_on_periodic_grid() {
        let grid = Grid::new(1, 32, 0.2, -3.2, Boundary::Periodic).unwrap();
        let psi = GridFunction::from_fn(grid, 2, vec![2, 2], |q, s| gauss2(q)[s]).unwrap();
        let a = PartialHamiltonianSpec::new(0, FreeKind::Dirac1d { mass: 1.0 }, 4);
        let b = PartialHamiltonianSpec::new(1, FreeKind::Dirac1d { mass: 1.0 }, 4);
        let c = commutator_check_grid(&a, &b, &psi, &CommutatorRhs::Zero).unwrap();
        assert!(c.residual < 1e-10, "{}", c.residual);
    }

    #[test]
    fn dirac1d_pair_commutator_converges_at_stencil_order() {
        let layout = Layout { n_particles: 2, space_dim: 1, spin_dims: vec![2, 2] };
        let pair = PairPotential::gaussian(1.0, 0.6);
        let v = LatticePotential::PairShare { pair, share: 0.5 };
        let a = PartialHamiltonianSpec::new(0, FreeKind::Dirac1d { mass: 0.5 }, 4).with_potential(v.clone());
        let b = PartialHamiltonianSpec::new(1, FreeKind::Dirac1d { mass: 0.5 }, 4).with_potential(v);
        let rhs = CommutatorRhs::for_specs(&a, &b).unwrap();
        let samples: Vec<Vec<f64>> =
            (0..20).flat_map(|k| (0..20).map(move |l| vec![-2.0 + 0.1 * k as f64, -1.0 + 0.15 * l as f64])).collect();
        let r1 = commutator_check(&a, &b, &layout, &gauss2, &samples, 0.1, &rhs).unwrap().residual;
        let r2 = commutator_check(&a, &b, &layout, &gauss2, &samples, 0.05, &rhs).unwrap().residual;
        assert!(r1 < 1e-2, "{r1}");
        assert!((r1 / r2).log2() > 3.5, "{r1} {r2}");
    }

    #[test]
    fn coulomb_margin_is_enforced() {
        let layout = Layout { n_particles: 2, space_dim: 1, spin_dims: vec![1, 1] };
        let v = LatticePotential::PairShare { pair: PairPotential::coulomb(1.0), share: 0.5 };
        let a = PartialHamiltonianSpec::new(0, FreeKind::Schrodinger { mass: 1.0 }, 2).with_potential(v.clone());
        let b = PartialHamiltonianSpec::new(1, FreeKind::Schrodinger { mass: 1.0 }, 2).with_potential(v);
        let rhs = CommutatorRhs::for_specs(&a, &b).unwrap();
        let f = |q: &[f64]| vec![C64::new((-(q[0] * q[0]) - q[1] * q[1]).exp(), 0.0)];
        let err = commutator_check(&a, &b, &layout, &f, &[vec![0.0, 0.2]], 0.1, &rhs).unwrap_err();
        assert!(matches!(err, Error::InvalidInput(m) if m.contains("sample 0")));
    }
}
