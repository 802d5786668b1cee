//! Characteristic scheme for the 1D Dirac equation `i∂ψ/∂t = (−iσ₁∂_x + σ₃m + V)ψ`.
//!
//! In the eigenbasis of `σ₁`, `u = (ψ₀+ψ₁)/√2` moves right and
//! `v = (ψ₀−ψ₁)/√2` moves left at unit speed. With `dt = spacing` each step
//! shifts `u` and `v` by exactly one cell and applies the mass and potential
//! as a local unitary rotation, split symmetrically around the shift. The
//! support of the solution therefore grows by exactly one cell per step.

use std::sync::Arc;

use serde::Serialize;

use super::grid::{Boundary, Grid, GridFunction};
use super::pair::PairPotential;
use crate::error::{Error, Result};
use crate::operator::C64;

pub type ExternalFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Relative slack when converting a time to a whole number of steps.
const STEP_TOL: f64 = 1e-9;

/// N particles on a shared 1D zero-padded lattice, 2-spinor each, with an
/// optional pair interaction and an optional external potential.
#[derive(Clone)]
pub struct DiracLattice {
    grid: Grid,
    n_particles: usize,
    mass: f64,
    pair: Option<PairPotential>,
    /// `W((k − n + 1)·h)` for lattice offsets `k − n + 1`.
    pair_table: Vec<f64>,
    external_table: Vec<f64>,
}

impl std::fmt::Debug for DiracLattice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DiracLattice")
            .field("grid", &self.grid)
            .field("n_particles", &self.n_particles)
            .field("mass", &self.mass)
            .field("pair", &self.pair)
            .finish_non_exhaustive()
    }
}

/// A rectangular sub-box of the N-particle lattice, stored in the
/// characteristic basis while the scheme runs.
#[derive(Clone, Debug)]
pub(crate) struct Block {
    pub lo: Vec<usize>,
    pub dims: Vec<usize>,
    pub values: Vec<C64>,
}

impl Block {
    fn sites(&self) -> usize {
        self.dims.iter().product()
    }

    fn stride(&self, k: usize) -> usize {
        self.dims[k + 1..].iter().product()
    }
}

impl DiracLattice {
    pub fn new(grid: Grid, n_particles: usize, mass: f64) -> Result<Self> {
        if grid.space_dim != 1 {
            return Err(Error::invalid("the characteristic Dirac scheme runs on 1D lattices"));
        }
        if grid.boundary != Boundary::ZeroPadded {
            return Err(Error::invalid("the characteristic Dirac scheme needs a zero-padded lattice"));
        }
        if n_particles == 0 || n_particles > 8 {
            return Err(Error::invalid(format!("particle count must be in 1..=8, got {n_particles}")));
        }
        if !(mass >= 0.0 && mass.is_finite()) {
            return Err(Error::invalid(format!("mass must be finite and non-negative, got {mass}")));
        }
        let n = grid.points_per_axis;
        Ok(DiracLattice {
            grid,
            n_particles,
            mass,
            pair: None,
            pair_table: vec![0.0; 2 * n - 1],
            external_table: vec![0.0; n],
        })
    }

    pub fn with_pair(mut self, pair: PairPotential) -> Result<Self> {
        pair.validate()?;
        let (n, h) = (self.grid.points_per_axis as i64, self.grid.spacing);
        let table: Vec<f64> = (-(n - 1)..n).map(|k| pair.value(&[k as f64 * h])).collect();
        if let Some(k) = table.iter().position(|w| !w.is_finite()) {
            return Err(Error::invalid(format!(
                "pair potential is not finite at lattice offset {}",
                k as i64 - (n - 1)
            )));
        }
        self.pair_table = table;
        self.pair = Some(pair);
        Ok(self)
    }

    pub fn with_external(mut self, v: ExternalFn) -> Result<Self> {
        let table: Vec<f64> = (0..self.grid.points_per_axis).map(|i| v(self.grid.coord(i))).collect();
        if table.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("external potential is not finite on the lattice"));
        }
        self.external_table = table;
        Ok(self)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn n_particles(&self) -> usize {
        self.n_particles
    }

    pub fn pair(&self) -> Option<&PairPotential> {
        self.pair.as_ref()
    }

    /// `W` at a lattice offset.
    pub fn pair_at(&self, offset: i64) -> f64 {
        self.pair_table[(offset + self.grid.points_per_axis as i64 - 1) as usize]
    }

    /// Number of steps for time `t`; the scheme only runs at `dt = spacing`.
    pub fn steps_for(&self, t: f64) -> Result<i64> {
        let x = t / self.grid.spacing;
        let k = x.round();
        if !x.is_finite() || (x - k).abs() > STEP_TOL * x.abs().max(1.0) {
            return Err(Error::invalid(format!(
                "time {t} is not a whole number of lattice steps (dt = spacing = {})",
                self.grid.spacing
            )));
        }
        Ok(k as i64)
    }

    pub fn check_state(&self, psi: &GridFunction) -> Result<()> {
        if psi.grid != self.grid || psi.n_particles != self.n_particles || psi.spin_dims.iter().any(|&k| k != 2) {
            return Err(Error::shape(format!(
                "state must be {} two-spinor particles on the scheme's lattice",
                self.n_particles
            )));
        }
        Ok(())
    }

    pub fn check_family(&self, family: &[usize]) -> Result<()> {
        let mut seen = vec![false; self.n_particles];
        for &k in family {
            if k >= self.n_particles || std::mem::replace(&mut seen[k], true) {
                return Err(Error::invalid(format!("family {family:?} is not a set of particle indices")));
            }
        }
        Ok(())
    }

    pub(crate) fn full_block(&self, psi: &GridFunction) -> Block {
        Block {
            lo: vec![0; self.n_particles],
            dims: vec![self.grid.points_per_axis; self.n_particles],
            values: psi.values.clone(),
        }
    }

    /// Evolves `family` by `steps` (negative runs backward) with every
    /// other particle held as a parameter.
    pub fn evolve_steps(&self, psi: &GridFunction, family: &[usize], steps: i64) -> Result<GridFunction> {
        self.check_state(psi)?;
        self.check_family(family)?;
        let travel: Vec<usize> =
            (0..self.n_particles).map(|k| if family.contains(&k) { steps.unsigned_abs() as usize } else { 0 }).collect();
        self.check_boundary(psi, &travel)?;
        let mut block = self.full_block(psi);
        self.to_characteristic(&mut block);
        self.run(&mut block, family, steps);
        self.from_characteristic(&mut block);
        Ok(GridFunction { values: block.values, ..psi.clone() })
    }

    pub fn evolve(&self, psi: &GridFunction, family: &[usize], t: f64) -> Result<GridFunction> {
        self.evolve_steps(psi, family, self.steps_for(t)?)
    }

    /// Index interval per particle outside which `psi` vanishes exactly;
    /// `None` for the zero state.
    pub fn support(&self, psi: &GridFunction) -> Option<Vec<(usize, usize)>> {
        let n = self.n_particles;
        let spins = psi.spin_total();
        let mut bounds: Option<Vec<(usize, usize)>> = None;
        let mut idx = vec![0; n];
        for site in 0..psi.spatial_len() {
            if psi.values[site * spins..(site + 1) * spins].iter().all(|z| *z == C64::new(0.0, 0.0)) {
                continue;
            }
            psi.site_indices(site, &mut idx);
            let b = bounds.get_or_insert_with(|| idx.iter().map(|&i| (i, i)).collect());
            for (bi, &i) in b.iter_mut().zip(&idx) {
                bi.0 = bi.0.min(i);
                bi.1 = bi.1.max(i);
            }
        }
        bounds
    }

    /// Fails if particle `k`'s support, widened by `travel[k]` cells, would
    /// leave the lattice.
    pub fn check_boundary(&self, psi: &GridFunction, travel: &[usize]) -> Result<()> {
        let n = self.grid.points_per_axis;
        let Some(bounds) = self.support(psi) else { return Ok(()) };
        for (k, (&(a, b), &r)) in bounds.iter().zip(travel).enumerate() {
            if a < r || b + r > n - 1 {
                return Err(Error::BoundaryContact(format!(
                    "particle {} has support in cells {a}..={b} and moves {r} cells, leaving the {n}-cell lattice",
                    k + 1
                )));
            }
        }
        Ok(())
    }

    pub(crate) fn to_characteristic(&self, block: &mut Block) {
        hadamard_all(block, self.n_particles);
    }

    pub(crate) fn from_characteristic(&self, block: &mut Block) {
        hadamard_all(block, self.n_particles);
    }

    /// Runs `steps` characteristic steps of `family` on a block already in
    /// the characteristic basis. Values near the block faces are polluted by
    /// the implicit zero padding at one cell per step.
    pub(crate) fn run(&self, block: &mut Block, family: &[usize], steps: i64) {
        if family.is_empty() || steps == 0 {
            return;
        }
        let forward = steps > 0;
        let mut scratch = vec![C64::new(0.0, 0.0); block.values.len()];
        for _ in 0..steps.unsigned_abs() {
            self.rotate_half(block, family, forward);
            for &k in family {
                stream(block, &mut scratch, k, self.n_particles, forward);
            }
            self.rotate_half(block, family, forward);
        }
    }

    /// `exp(∓i dt/2 (Σ_{k∈F} m σ₁^{(k)} + V_F))` in the characteristic basis,
    /// with `V_F = Σ_{k∈F} V_ext(x_k) + Σ_{i≠j∈F} W(x_i − x_j)`.
    fn rotate_half(&self, block: &mut Block, family: &[usize], forward: bool) {
        let n = self.n_particles;
        let spins = 1usize << n;
        let half = 0.5 * self.grid.spacing;
        let sign = if forward { -1.0 } else { 1.0 };
        let (c, s) = ((self.mass * half).cos(), sign * (self.mass * half).sin());
        let interacting = self.pair.is_some() && family.len() > 1;
        let mut idx = vec![0usize; n];
        for site in 0..block.sites() {
            let mut rest = site;
            for k in (0..n).rev() {
                idx[k] = block.lo[k] + rest % block.dims[k];
                rest /= block.dims[k];
            }
            let mut v = 0.0;
            for &k in family {
                v += self.external_table[idx[k]];
            }
            if interacting {
                for &i in family {
                    for &j in family {
                        if i != j {
                            v += self.pair_at(idx[i] as i64 - idx[j] as i64);
                        }
                    }
                }
            }
            let cell = &mut block.values[site * spins..(site + 1) * spins];
            if s != 0.0 {
                for &k in family {
                    let bit = 1 << (n - 1 - k);
                    for a in (0..spins).filter(|a| a & bit == 0) {
                        let (x, y) = (cell[a], cell[a | bit]);
                        cell[a] = c * x + C64::new(0.0, s) * y;
                        cell[a | bit] = C64::new(0.0, s) * x + c * y;
                    }
                }
            }
            if v != 0.0 {
                let phase = C64::from_polar(1.0, sign * half * v);
                cell.iter_mut().for_each(|z| *z *= phase);
            }
        }
    }
}

fn hadamard_all(block: &mut Block, n: usize) {
    let spins = 1usize << n;
    let r = std::f64::consts::FRAC_1_SQRT_2;
    for cell in block.values.chunks_mut(spins) {
        for k in 0..n {
            let bit = 1 << (n - 1 - k);
            for a in (0..spins).filter(|a| a & bit == 0) {
                let (x, y) = (cell[a], cell[a | bit]);
                cell[a] = (x + y) * r;
                cell[a | bit] = (x - y) * r;
            }
        }
    }
}

/// Shifts right-movers of particle `k` one cell up its axis and left-movers
/// one cell down (reversed when running backward).
fn stream(block: &mut Block, scratch: &mut [C64], k: usize, n: usize, forward: bool) {
    let spins = 1usize << n;
    let bit = 1 << (n - 1 - k);
    let stride = block.stride(k);
    let dim = block.dims[k];
    scratch.copy_from_slice(&block.values);
    let zero = C64::new(0.0, 0.0);
    for site in 0..block.sites() {
        let i = (site / stride) % dim;
        for a in 0..spins {
            let right = (a & bit == 0) == forward;
            let src = if right {
                (i > 0).then(|| site - stride)
            } else {
                (i + 1 < dim).then(|| site + stride)
            };
            block.values[site * spins + a] = src.map_or(zero, |s| scratch[s * spins + a]);
        }
    }
}

/// One-particle evolution by time `t`, a whole number of lattice steps.
pub fn dirac1d_evolve(psi0: &GridFunction, mass: f64, external: Option<ExternalFn>, t: f64) -> Result<GridFunction> {
    let mut lattice = DiracLattice::new(psi0.grid.clone(), 1, mass)?;
    if let Some(v) = external {
        lattice = lattice.with_external(v)?;
    }
    lattice.evolve(psi0, &[0], t)
}

/// Evolves the particles in `family` jointly under their free Dirac
/// Hamiltonians and the pair interaction among them.
pub fn nparticle_dirac_evolve(
    psi0: &GridFunction,
    family: &[usize],
    t: f64,
    mass: f64,
    pair: Option<PairPotential>,
) -> Result<GridFunction> {
    let mut lattice = DiracLattice::new(psi0.grid.clone(), psi0.n_particles, mass)?;
    if let Some(w) = pair {
        lattice = lattice.with_pair(w)?;
    }
    lattice.evolve(psi0, family, t)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LightconeRow {
    pub step: usize,
    /// Largest spinor norm at any cell outside the initial support widened
    /// by `step` cells along every moving axis.
    pub max_amplitude_outside_cone: f64,
}

/// Steps `family` forward `steps` times, recording the amplitude that
/// escapes the one-cell-per-step cone after each step.
pub fn lightcone_report(
    lattice: &DiracLattice,
    psi0: &GridFunction,
    family: &[usize],
    steps: usize,
) -> Result<Vec<LightconeRow>> {
    lattice.check_state(psi0)?;
    lattice.check_family(family)?;
    let n = lattice.n_particles;
    let travel: Vec<usize> = (0..n).map(|k| if family.contains(&k) { steps } else { 0 }).collect();
    lattice.check_boundary(psi0, &travel)?;
    let Some(support) = lattice.support(psi0) else {
        return Ok((0..=steps).map(|step| LightconeRow { step, max_amplitude_outside_cone: 0.0 }).collect());
    };
    let mut block = lattice.full_block(psi0);
    lattice.to_characteristic(&mut block);
    let spins = 1usize << n;
    let mut rows = Vec::with_capacity(steps + 1);
    let mut idx = vec![0; n];
    for step in 0..=steps {
        if step > 0 {
            lattice.run(&mut block, family, 1);
        }
        let mut worst = 0.0f64;
        for site in 0..block.sites() {
            psi0.site_indices(site, &mut idx);
            let inside = idx.iter().zip(&support).zip(&travel).all(|((&i, &(a, b)), &r)| {
                let r = r.min(step);
                i + r >= a && i <= b + r
            });
            if !inside {
                let norm = block.values[site * spins..(site + 1) * spins].iter().map(|z| z.norm_sqr()).sum::<f64>();
                worst = worst.max(norm.sqrt());
            }
        }
        rows.push(LightconeRow { step, max_amplitude_outside_cone: worst });
    }
    Ok(rows)
}

/// `exp(−(x−c)²/(2w²))·spinor` truncated to zero beyond `cutoff·w`.
pub fn gaussian_pulse(grid: &Grid, center: f64, width: f64, cutoff: f64, spinor: [C64; 2]) -> Result<GridFunction> {
    if !(width > 0.0 && cutoff > 0.0) {
        return Err(Error::invalid("pulse width and cutoff must be positive"));
    }
    GridFunction::from_fn(grid.clone(), 1, vec![2], |x, s| {
        let d = x[0] - center;
        if d.abs() > cutoff * width {
            C64::new(0.0, 0.0)
        } else {
            spinor[s] * (-d * d / (2.0 * width * width)).exp()
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::pair::RangeCutoff;

    fn line(n: usize) -> Grid {
        Grid::line(n, 0.1).unwrap()
    }

    fn up() -> [C64; 2] {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        [C64::new(r, 0.0), C64::new(r, 0.0)]
    }

    #[test]
    fn massless_right_mover_translates() {
        let g = line(64);
        let psi = gaussian_pulse(&g, 2.5, 0.2, 4.0, up()).unwrap();
        let out = dirac1d_evolve(&psi, 0.0, None, 1.2).unwrap();
        for i in 0..64 {
            for s in 0..2 {
                let expect = if i >= 12 { psi.values[2 * (i - 12) + s] } else { C64::new(0.0, 0.0) };
                assert!((out.values[2 * i + s] - expect).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn backward_inverts_forward() {
        let g = line(120);
        let psi = gaussian_pulse(&g, 6.0, 0.3, 4.0, [C64::new(0.3, 0.2), C64::new(-0.5, 0.1)]).unwrap();
        let v: ExternalFn = Arc::new(|x| 0.4 * (x - 6.0).cos());
        let lat = DiracLattice::new(g, 1, 1.3).unwrap().with_external(v).unwrap();
        let fwd = lat.evolve_steps(&psi, &[0], 17).unwrap();
        let back = lat.evolve_steps(&fwd, &[0], -17).unwrap();
        assert!(back.max_deviation(&psi).unwrap() < 1e-14);
        assert!((fwd.norm() - psi.norm()).abs() < 1e-12);
    }

    #[test]
    fn off_lattice_time_is_rejected() {
        let g = line(32);
        let psi = gaussian_pulse(&g, 1.6, 0.2, 3.0, up()).unwrap();
        assert!(matches!(dirac1d_evolve(&psi, 1.0, None, 0.15), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn boundary_contact_is_detected() {
        let g = line(32);
        let psi = gaussian_pulse(&g, 0.5, 0.1, 3.0, up()).unwrap();
        assert!(matches!(dirac1d_evolve(&psi, 1.0, None, 0.5), Err(Error::BoundaryContact(_))));
    }

    #[test]
    fn lightcone_is_exact() {
        let g = line(200);
        let psi = gaussian_pulse(&g, 10.0, 0.2, 3.0, [C64::new(0.8, 0.0), C64::new(0.0, 0.6)]).unwrap();
        let v: ExternalFn = Arc::new(|x| (x - 10.0).sin());
        let lat = DiracLattice::new(g, 1, 1.0).unwrap().with_external(v).unwrap();
        let rows = lightcone_report(&lat, &psi, &[0], 80).unwrap();
        assert!(rows.iter().all(|r| r.max_amplitude_outside_cone == 0.0));
    }

    #[test]
    fn separated_pulses_do_not_feel_a_short_range_pair() {
        let g = line(96);
        let a = gaussian_pulse(&g, 2.0, 0.2, 3.0, up()).unwrap();
        let b = gaussian_pulse(&g, 7.5, 0.2, 3.0, [C64::new(0.6, 0.0), C64::new(0.0, 0.8)]).unwrap();
        let psi = GridFunction::product(&[a, b]).unwrap();
        let w = PairPotential::gaussian(2.0, 0.3).with_cutoff(RangeCutoff::for_grid(0.8, 0.1).unwrap());
        let free = nparticle_dirac_evolve(&psi, &[0, 1], 1.0, 1.0, None).unwrap();
        let inter = nparticle_dirac_evolve(&psi, &[0, 1], 1.0, 1.0, Some(w)).unwrap();
        assert_eq!(free.values, inter.values);
    }

    #[test]
    fn free_pair_factorizes() {
        let g = line(64);
        let a = gaussian_pulse(&g, 2.5, 0.25, 4.0, up()).unwrap();
        let b = gaussian_pulse(&g, 3.5, 0.3, 4.0, [C64::new(0.0, 1.0), C64::new(0.0, 0.0)]).unwrap();
        let joint = nparticle_dirac_evolve(&GridFunction::product(&[a.clone(), b.clone()]).unwrap(), &[0, 1], 0.8, 1.0, None)
            .unwrap();
        let fa = dirac1d_evolve(&a, 1.0, None, 0.8).unwrap();
        let fb = dirac1d_evolve(&b, 1.0, None, 0.8).unwrap();
        let prod = GridFunction::product(&[fa, fb]).unwrap();
        assert!(joint.max_deviation(&prod).unwrap() < 1e-12);
    }
}
