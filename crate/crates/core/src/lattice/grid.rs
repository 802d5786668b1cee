//! Uniform spatial lattices and spinor-valued functions on them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    Periodic,
    ZeroPadded,
}

/// `points_per_axis` sites per axis at `origin + i·spacing`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub space_dim: usize,
    pub points_per_axis: usize,
    pub spacing: f64,
    pub origin: f64,
    pub boundary: Boundary,
}

impl Grid {
    pub fn new(space_dim: usize, points_per_axis: usize, spacing: f64, origin: f64, boundary: Boundary) -> Result<Self> {
        if space_dim != 1 && space_dim != 3 {
            return Err(Error::invalid(format!("space dimension must be 1 or 3, got {space_dim}")));
        }
        if points_per_axis < 8 {
            return Err(Error::invalid(format!("need at least 8 points per axis, got {points_per_axis}")));
        }
        if !(spacing > 0.0 && spacing.is_finite()) || !origin.is_finite() {
            return Err(Error::invalid("grid spacing must be positive and origin finite"));
        }
        Ok(Grid { space_dim, points_per_axis, spacing, origin, boundary })
    }

    /// 1D zero-padded grid with sites `0, h, 2h, …`.
    pub fn line(points: usize, spacing: f64) -> Result<Self> {
        Self::new(1, points, spacing, 0.0, Boundary::ZeroPadded)
    }

    /// Sites per particle, `points_per_axis^space_dim`.
    pub fn sites(&self) -> usize {
        self.points_per_axis.pow(self.space_dim as u32)
    }

    pub fn coord(&self, i: usize) -> f64 {
        self.origin + i as f64 * self.spacing
    }

    /// Length of the covered interval along one axis.
    pub fn extent(&self) -> f64 {
        (self.points_per_axis - 1) as f64 * self.spacing
    }
}

/// `ψ_{s_1…s_N}(x_1, …, x_N)` sampled on the product lattice.
///
/// Layout: spatial multi-index (particle 1 most significant, and within a
/// particle the first axis most significant) times the spin multi-index
/// (particle 1 most significant).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    pub grid: Grid,
    pub n_particles: usize,
    pub spin_dims: Vec<usize>,
    pub values: Vec<C64>,
}

impl GridFunction {
    pub fn zeros(grid: Grid, n_particles: usize, spin_dims: Vec<usize>) -> Result<Self> {
        if n_particles == 0 || spin_dims.len() != n_particles || spin_dims.contains(&0) {
            return Err(Error::invalid("need one positive spin dimension per particle"));
        }
        let len = grid
            .sites()
            .checked_pow(n_particles as u32)
            .and_then(|s| s.checked_mul(spin_dims.iter().product()))
            .filter(|&l| l <= 1 << 28)
            .ok_or_else(|| Error::invalid("grid function too large"))?;
        Ok(GridFunction { grid, n_particles, spin_dims, values: vec![C64::new(0.0, 0.0); len] })
    }

    /// Fills values from `f(positions, spin_index)`, with `positions` the
    /// flattened coordinates of all particles.
    pub fn from_fn(
        grid: Grid,
        n_particles: usize,
        spin_dims: Vec<usize>,
        f: impl Fn(&[f64], usize) -> C64,
    ) -> Result<Self> {
        let mut g = Self::zeros(grid, n_particles, spin_dims)?;
        let spins = g.spin_total();
        let mut pos = vec![0.0; n_particles * g.grid.space_dim];
        for site in 0..g.spatial_len() {
            g.positions_into(site, &mut pos);
            for s in 0..spins {
                g.values[site * spins + s] = f(&pos, s);
            }
        }
        Ok(g)
    }

    /// Tensor product of one-particle functions on the same grid.
    pub fn product(factors: &[GridFunction]) -> Result<Self> {
        let first = factors.first().ok_or_else(|| Error::invalid("empty product"))?;
        if factors.iter().any(|f| f.n_particles != 1 || f.grid != first.grid) {
            return Err(Error::invalid("product factors must be one-particle functions on one grid"));
        }
        let spin_dims: Vec<usize> = factors.iter().map(|f| f.spin_dims[0]).collect();
        let sites = first.grid.sites();
        // (accumulated sites, accumulated spins) -> (sites, site, spins, spin)
        let (mut values, mut n_sites, mut n_spins) = (vec![C64::new(1.0, 0.0)], 1usize, 1usize);
        for f in factors {
            let k = f.spin_dims[0];
            let mut next = Vec::with_capacity(values.len() * f.values.len());
            for ps in 0..n_sites {
                for site in 0..sites {
                    for a in 0..n_spins {
                        for b in 0..k {
                            next.push(values[ps * n_spins + a] * f.values[site * k + b]);
                        }
                    }
                }
            }
            values = next;
            n_sites *= sites;
            n_spins *= k;
        }
        Ok(GridFunction { grid: first.grid.clone(), n_particles: factors.len(), spin_dims, values })
    }

    pub fn spin_total(&self) -> usize {
        self.spin_dims.iter().product()
    }

    pub fn spatial_len(&self) -> usize {
        self.values.len() / self.spin_total()
    }

    /// Lattice index along each spatial axis of every particle.
    pub fn site_indices(&self, mut site: usize, out: &mut [usize]) {
        let n = self.grid.points_per_axis;
        for slot in out.iter_mut().rev() {
            *slot = site % n;
            site /= n;
        }
    }

    pub fn site_of(&self, indices: &[usize]) -> usize {
        let n = self.grid.points_per_axis;
        indices.iter().fold(0, |acc, &i| acc * n + i)
    }

    pub fn positions_into(&self, site: usize, out: &mut [f64]) {
        let mut idx = vec![0; out.len()];
        self.site_indices(site, &mut idx);
        for (o, i) in out.iter_mut().zip(idx) {
            *o = self.grid.coord(i);
        }
    }

    /// `spacing^(d·N) Σ |ψ|²`, the squared L² norm.
    pub fn norm_sqr(&self) -> f64 {
        let w = self.grid.spacing.powi((self.grid.space_dim * self.n_particles) as i32);
        w * self.values.iter().map(|z| z.norm_sqr()).sum::<f64>()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn compatible(&self, other: &GridFunction) -> Result<()> {
        if self.grid != other.grid || self.spin_dims != other.spin_dims || self.values.len() != other.values.len() {
            return Err(Error::shape("grid functions live on different lattices"));
        }
        Ok(())
    }

    /// L² norm of `self − other`.
    pub fn distance(&self, other: &GridFunction) -> Result<f64> {
        self.compatible(other)?;
        let w = self.grid.spacing.powi((self.grid.space_dim * self.n_particles) as i32);
        Ok((w * self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>()).sqrt())
    }

    /// `max |self − other|` entrywise.
    pub fn max_deviation(&self, other: &GridFunction) -> Result<f64> {
        self.compatible(other)?;
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
    }

    /// Spinor at a lattice site given by per-axis indices.
    pub fn spinor_at(&self, indices: &[usize]) -> Vec<C64> {
        let s = self.spin_total();
        let site = self.site_of(indices);
        self.values[site * s..(site + 1) * s].to_vec()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_validation() {
        assert!(Grid::new(2, 16, 0.1, 0.0, Boundary::Periodic).is_err());
        assert!(Grid::new(1, 4, 0.1, 0.0, Boundary::Periodic).is_err());
        assert!(Grid::new(1, 16, 0.0, 0.0, Boundary::Periodic).is_err());
        assert_eq!(Grid::new(3, 8, 0.5, -1.0, Boundary::ZeroPadded).unwrap().sites(), 512);
    }

    #[test]
    fn product_layout() {
        let g = Grid::line(8, 1.0).unwrap();
        let a = GridFunction::from_fn(g.clone(), 1, vec![2], |x, s| C64::new(x[0] + 1.0, s as f64)).unwrap();
        let b = GridFunction::from_fn(g.clone(), 1, vec![2], |x, s| C64::new(10.0 * x[0], 1.0 + s as f64)).unwrap();
        let p = GridFunction::product(&[a.clone(), b.clone()]).unwrap();
        let direct = GridFunction::from_fn(g, 2, vec![2, 2], |x, s| {
            let (s1, s2) = (s / 2, s % 2);
            C64::new(x[0] + 1.0, s1 as f64) * C64::new(10.0 * x[1], 1.0 + s2 as f64)
        })
        .unwrap();
        assert_eq!(p, direct);
        assert!((p.norm_sqr() - a.norm_sqr() * b.norm_sqr()).abs() < 1e-9 * p.norm_sqr());
    }
}
