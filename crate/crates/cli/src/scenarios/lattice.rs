//! coulomb-commutator, order-gap and lightcone.

use std::sync::Arc;

use multitime::lattice::{
    commutator_check, lightcone_report, order_gap, CommutatorRhs, DiracLattice, ExternalFn, FreeKind,
    LatticePotential, Layout, PairKind, PairPotential, PartialHamiltonianSpec,
};
use multitime::poly::Polynomial;
use multitime::C64;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{loglog_slope, positive};
use crate::config::{defaults, pair_potential, product_state, GridSpec, StateSpec};
use crate::error::{CliError, Result};
use crate::Ctx;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kinetic3d {
    Schrodinger,
    Dirac,
}

fn default_centers() -> [[f64; 3]; 2] {
    [[-1.0, 0.0, 0.0], [1.0, 0.0, 0.0]]
}

fn default_width() -> f64 {
    0.3
}

fn default_lattice_points() -> usize {
    12
}

fn default_lattice_spacing() -> f64 {
    0.08
}

fn default_offsets() -> Vec<[f64; 3]> {
    vec![[0.0, 0.0, 0.0], [0.12, -0.08, 0.0]]
}

fn default_spacings() -> Vec<f64> {
    vec![0.08, 0.04]
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoulombCommutator {
    #[serde(default = "default_kinetic")]
    pub kind: Kinetic3d,
    #[serde(default = "defaults::one")]
    pub mass: f64,
    #[serde(default = "defaults::one")]
    pub charge: f64,
    #[serde(default = "defaults::half")]
    pub share: f64,
    #[serde(default = "defaults::stencil_order")]
    pub stencil_order: usize,
    /// Gaussian product state: one centre per particle.
    #[serde(default = "default_centers")]
    pub centers: [[f64; 3]; 2],
    #[serde(default = "default_width")]
    pub width: f64,
    /// Particle 1 is sampled on a cube of `lattice_points³` sites around
    /// its centre.
    #[serde(default = "default_lattice_points")]
    pub lattice_points: usize,
    #[serde(default = "default_lattice_spacing")]
    pub lattice_spacing: f64,
    /// Particle 2 positions relative to its centre.
    #[serde(default = "default_offsets")]
    pub partner_offsets: Vec<[f64; 3]>,
    /// Stencil step sizes to sweep.
    #[serde(default = "default_spacings")]
    pub spacings: Vec<f64>,
}

fn default_kinetic() -> Kinetic3d {
    Kinetic3d::Schrodinger
}

#[derive(Serialize)]
struct CommutatorRow {
    h: f64,
    residual: f64,
    commutator_norm: f64,
    rhs_norm: f64,
    samples: usize,
}

impl CoulombCommutator {
    pub fn validate(&self) -> Result<()> {
        positive("width", self.width)?;
        positive("lattice_spacing", self.lattice_spacing)?;
        if self.lattice_points == 0 || self.partner_offsets.is_empty() || self.spacings.is_empty() {
            return Err(CliError::config(
                "parameters.lattice_points, partner_offsets and spacings must be non-empty",
            ));
        }
        for &h in &self.spacings {
            positive("spacings", h)?;
        }
        Ok(())
    }

    pub fn run(&self, ctx: &mut Ctx) -> Result<serde_json::Value> {
        let (kind, spin) = match self.kind {
            Kinetic3d::Schrodinger => (FreeKind::Schrodinger { mass: self.mass }, 1),
            Kinetic3d::Dirac => (FreeKind::Dirac { mass: self.mass }, 4),
        };
        let v = LatticePotential::PairShare { pair: PairPotential::coulomb(self.charge), share: self.share };
        let h1 = PartialHamiltonianSpec::new(0, kind, self.stencil_order).with_potential(v.clone());
        let h2 = PartialHamiltonianSpec::new(1, kind, self.stencil_order).with_potential(v);
        let rhs = CommutatorRhs::for_specs(&h1, &h2)?;
        let layout = Layout { n_particles: 2, space_dim: 3, spin_dims: vec![spin, spin] };
        // Fixed non-trivial one-particle spinor, tensored for the pair.
        let chi: Vec<C64> = (0..spin).map(|s| C64::from_polar(1.0 / (1.0 + s as f64), 0.7 * s as f64)).collect();
        let [c1, c2] = self.centers;
        let w2 = 2.0 * self.width * self.width;
        let psi = move |q: &[f64]| {
            let r1: f64 = (0..3).map(|a| (q[a] - c1[a]).powi(2)).sum();
            let r2: f64 = (0..3).map(|a| (q[3 + a] - c2[a]).powi(2)).sum();
            let env = (-(r1 + r2) / w2).exp();
            let mut out = Vec::with_capacity(chi.len() * chi.len());
            for a in &chi {
                for b in &chi {
                    out.push(a * b * env);
                }
            }
            out
        };
        let m = self.lattice_points;
        let mid = (m as f64 - 1.0) / 2.0;
        let mut samples = Vec::with_capacity(m * m * m * self.partner_offsets.len());
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    let x1 = [i, j, k].map(|n| (n as f64 - mid) * self.lattice_spacing);
                    for d in &self.partner_offsets {
                        let mut q = Vec::with_capacity(6);
                        q.extend((0..3).map(|a| c1[a] + x1[a]));
                        q.extend((0..3).map(|a| c2[a] + d[a]));
                        samples.push(q);
                    }
                }
            }
        }
        let mut rows = Vec::new();
        for &h in &self.spacings {
            let c = commutator_check(&h1, &h2, &layout, &psi, &samples, h, &rhs)?;
            ctx.note(format!("h = {h}: residual {:.3e}", c.residual));
            rows.push(CommutatorRow {
                h,
                residual: c.residual,
                commutator_norm: c.commutator_norm,
                rhs_norm: c.rhs_norm,
                samples: c.samples,
            });
        }
        ctx.out.csv("commutator.csv", &rows)?;
        let slope = loglog_slope(&rows.iter().map(|r| (r.h, r.residual)).collect::<Vec<_>>());
        Ok(json!({
            "residuals": rows.iter().map(|r| r.residual).collect::<Vec<_>>(),
            "convergence_slope": slope,
        }))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kinetic1d {
    Schrodinger,
    Dirac1d,
}

fn default_kinetic1d() -> Kinetic1d {
    Kinetic1d::Schrodinger
}

fn default_dt() -> f64 {
    0.002
}

fn default_lambdas() -> Vec<f64> {
    vec![1.0]
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrderGap {
    pub grid: GridSpec,
    #[serde(default = "default_kinetic1d")]
    pub kind: Kinetic1d,
    #[serde(default = "defaults::one")]
    pub mass: f64,
    /// Omit for the non-interacting control.
    #[serde(default)]
    pub pair: Option<PairKind>,
    #[serde(default = "defaults::half")]
    pub share: f64,
    #[serde(default = "defaults::stencil_order")]
    pub stencil_order: usize,
    /// One state per particle.
    pub states: [StateSpec; 2],
    pub times: [f64; 2],
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Each run uses times `λ·times`.
    #[serde(default = "default_lambdas")]
    pub lambdas: Vec<f64>,
}

#[derive(Serialize)]
struct GapRow {
    lambda: f64,
    t1: f64,
    t2: f64,
    gap: f64,
    commutator_norm: f64,
    normalized: Option<f64>,
}

impl OrderGap {
    pub fn validate(&self) -> Result<()> {
        positive("dt", self.dt)?;
        if self.lambdas.is_empty() {
            return Err(CliError::config("parameters.lambdas must not be empty"));
        }
        Ok(())
    }

    pub fn run(&self, ctx: &mut Ctx) -> Result<serde_json::Value> {
        let grid = self.grid.build()?;
        let (kind, spin) = match self.kind {
            Kinetic1d::Schrodinger => (FreeKind::Schrodinger { mass: self.mass }, 1),
            Kinetic1d::Dirac1d => (FreeKind::Dirac1d { mass: self.mass }, 2),
        };
        let psi = product_state(&grid, &self.states, spin)?;
        let mut a = PartialHamiltonianSpec::new(0, kind, self.stencil_order);
        let mut b = PartialHamiltonianSpec::new(1, kind, self.stencil_order);
        if let Some(p) = &self.pair {
            let v = LatticePotential::PairShare { pair: pair_potential(p), share: self.share };
            a = a.with_potential(v.clone());
            b = b.with_potential(v);
        }
        let mut rows = Vec::new();
        for &lambda in &self.lambdas {
            let (t1, t2) = (lambda * self.times[0], lambda * self.times[1]);
            let g = order_gap(&a, &b, &psi, t1, t2, self.dt)?;
            ctx.note(format!("λ = {lambda}: gap {:.3e}", g.gap));
            rows.push(GapRow { lambda, t1, t2, gap: g.gap, commutator_norm: g.commutator_norm, normalized: g.normalized });
        }
        ctx.out.csv("order_gap.csv", &rows)?;
        let slope = loglog_slope(&rows.iter().map(|r| (r.lambda, r.gap)).collect::<Vec<_>>());
        Ok(json!({
            "gaps": rows.iter().map(|r| r.gap).collect::<Vec<_>>(),
            "normalized": rows.iter().map(|r| r.normalized).collect::<Vec<_>>(),
            "lambda_slope": slope,
        }))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lightcone {
    pub grid: GridSpec,
    #[serde(default)]
    pub mass: f64,
    /// External potential as a polynomial in `x`.
    #[serde(default)]
    pub external: Option<Polynomial>,
    pub state: StateSpec,
    pub steps: usize,
    /// Also write the final state as a binary slice.
    #[serde(default)]
    pub snapshot: bool,
}

impl Lightcone {
    pub fn validate(&self) -> Result<()> {
        if let Some(p) = &self.external {
            p.check_arity(1).map_err(|e| CliError::config(format!("parameters.external: {e}")))?;
        }
        Ok(())
    }

    pub fn run(&self, ctx: &mut Ctx) -> Result<serde_json::Value> {
        let grid = self.grid.build()?;
        let psi = self.state.build(&grid, 2)?;
        let mut lattice = DiracLattice::new(grid.clone(), 1, self.mass)?;
        if let Some(p) = &self.external {
            let p = p.clone();
            let v: ExternalFn = Arc::new(move |x| p.eval(&[x]));
            lattice = lattice.with_external(v)?;
        }
        let rows = lightcone_report(&lattice, &psi, &[0], self.steps)?;
        ctx.out.csv("lightcone.csv", &rows)?;
        if self.snapshot {
            let last = lattice.evolve_steps(&psi, &[0], self.steps as i64)?;
            ctx.out.slice("final.slice", &last, &[self.steps as f64 * grid.spacing])?;
        }
        let worst = rows.iter().map(|r| r.max_amplitude_outside_cone).fold(0.0, f64::max);
        Ok(json!({ "steps": self.steps, "max_amplitude_outside_cone": worst, "cone_exact": worst == 0.0 }))
    }
}
