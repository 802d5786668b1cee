//! Config file schema.
//!
//! A config is one TOML document with three top-level keys besides the
//! `[parameters]` table: `scenario`, `output_dir` and `seed`. Each scenario
//! parses its parameters into a typed struct with defaults filled in; the
//! filled-in struct is what the manifest records.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use multitime::geometry::SpacetimeConfig;
use multitime::holonomy::{AffineField, ConstantField, GaugeRotatedField, GradientField, HamiltonianField};
use multitime::lattice::{Boundary, Grid, GridFunction, PairKind, PairPotential};
use multitime::operator::{pauli, OperatorJson};
use multitime::poly::Polynomial;
use multitime::potential::{coulomb_split, gaussian_split, GaugePlusExternal, PotentialField};
use multitime::{Operator, C64};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scenario {
    ConsistencyCheck,
    HolonomyScan,
    Stokes,
    PotentialAnalyze,
    GaugeDecompose,
    CoulombCommutator,
    OrderGap,
    Lightcone,
    DeltaEvolve,
    OverlapTest,
}

impl Scenario {
    pub const ALL: [Scenario; 10] = [
        Scenario::ConsistencyCheck,
        Scenario::HolonomyScan,
        Scenario::Stokes,
        Scenario::PotentialAnalyze,
        Scenario::GaugeDecompose,
        Scenario::CoulombCommutator,
        Scenario::OrderGap,
        Scenario::Lightcone,
        Scenario::DeltaEvolve,
        Scenario::OverlapTest,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::ConsistencyCheck => "consistency-check",
            Scenario::HolonomyScan => "holonomy-scan",
            Scenario::Stokes => "stokes",
            Scenario::PotentialAnalyze => "potential-analyze",
            Scenario::GaugeDecompose => "gauge-decompose",
            Scenario::CoulombCommutator => "coulomb-commutator",
            Scenario::OrderGap => "order-gap",
            Scenario::Lightcone => "lightcone",
            Scenario::DeltaEvolve => "delta-evolve",
            Scenario::OverlapTest => "overlap-test",
        }
    }
}

impl FromStr for Scenario {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL.into_iter().find(|sc| sc.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Scenario::ALL.iter().map(|s| s.name()).collect();
            CliError::config(format!("unknown scenario `{s}` (key `scenario`); expected one of {}", names.join(", ")))
        })
    }
}

#[derive(Clone, Debug)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub output_dir: Option<PathBuf>,
    pub seed: u64,
    pub parameters: toml::Table,
    /// The document as read, echoed into the manifest.
    pub raw: toml::Table,
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let raw: toml::Table = text.parse().map_err(|e: toml::de::Error| CliError::config(e.to_string()))?;
        for key in raw.keys() {
            if !matches!(key.as_str(), "scenario" | "output_dir" | "seed" | "parameters") {
                return Err(CliError::config(format!("unknown top-level key `{key}`")));
            }
        }
        let scenario = match raw.get("scenario") {
            Some(toml::Value::String(s)) => s.parse()?,
            Some(_) => return Err(CliError::config("key `scenario` must be a string")),
            None => return Err(CliError::config("missing required key `scenario`")),
        };
        let output_dir = match raw.get("output_dir") {
            Some(toml::Value::String(s)) => Some(PathBuf::from(s)),
            Some(_) => return Err(CliError::config("key `output_dir` must be a string")),
            None => None,
        };
        let seed = match raw.get("seed") {
            Some(toml::Value::Integer(s)) if *s >= 0 => *s as u64,
            Some(_) => return Err(CliError::config("key `seed` must be a non-negative integer")),
            None => 0,
        };
        let parameters = match raw.get("parameters") {
            Some(toml::Value::Table(t)) => t.clone(),
            Some(_) => return Err(CliError::config("key `parameters` must be a table")),
            None => toml::Table::new(),
        };
        Ok(ScenarioConfig { scenario, output_dir, seed, parameters, raw })
    }
}

/// Deserializes a parameter table, naming the offending key on failure.
pub fn parse_params<T: DeserializeOwned>(table: &toml::Table) -> Result<T> {
    let value = toml::Value::Table(table.clone());
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if path == "." {
            CliError::config(format!("parameters: {inner}"))
        } else {
            CliError::config(format!("parameters.{path}: {inner}"))
        }
    })
}

pub(crate) mod defaults {
    pub fn one() -> f64 {
        1.0
    }
    pub fn half() -> f64 {
        0.5
    }
    pub fn stencil_order() -> usize {
        4
    }
    pub fn fd_step() -> f64 {
        multitime::holonomy::DEFAULT_FD_STEP
    }
    pub fn pulse_cutoff() -> f64 {
        4.0
    }
}

/// Hamiltonian field over the time manifold.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FieldSpec {
    /// `(scale·σx, scale·σz)`.
    PauliPair {
        #[serde(default = "defaults::one")]
        scale: f64,
    },
    Constant { operators: Vec<OperatorJson> },
    /// `H_j(t) = constant[j] + Σ_k slopes[j][k]·t_k`.
    Affine { constant: Vec<OperatorJson>, slopes: Vec<Vec<OperatorJson>> },
    /// `H_j = ∂g/∂t_j·A`.
    Gradient { n_times: usize, g: Polynomial, generator: OperatorJson },
    /// `H_j = e^{−igB}D_j e^{igB} + ∂g/∂t_j·B`.
    GaugeRotated { g: Polynomial, b: OperatorJson, d: Vec<OperatorJson> },
}

fn ops(list: &[OperatorJson]) -> Result<Vec<Operator>> {
    list.iter().map(|j| Operator::try_from(j.clone()).map_err(CliError::from)).collect()
}

impl FieldSpec {
    pub fn build(&self) -> Result<Box<dyn HamiltonianField>> {
        Ok(match self {
            FieldSpec::PauliPair { scale } => {
                Box::new(ConstantField::new(vec![pauli::x().scale_real(*scale), pauli::z().scale_real(*scale)])?)
            }
            FieldSpec::Constant { operators } => Box::new(ConstantField::new(ops(operators)?)?),
            FieldSpec::Affine { constant, slopes } => {
                let slopes = slopes.iter().map(|row| ops(row)).collect::<Result<Vec<_>>>()?;
                Box::new(AffineField::new(ops(constant)?, slopes)?)
            }
            FieldSpec::Gradient { n_times, g, generator } => {
                Box::new(GradientField::new(*n_times, g.clone(), Operator::try_from(generator.clone())?)?)
            }
            FieldSpec::GaugeRotated { g, b, d } => {
                Box::new(GaugeRotatedField::new(g.clone(), Operator::try_from(b.clone())?, ops(d)?)?)
            }
        })
    }
}

/// Scalar potential for the relation and gauge analysers.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PotentialSpec {
    CoulombSplit {
        charge: f64,
        #[serde(default = "defaults::half")]
        share: f64,
    },
    GaussianPair {
        amplitude: f64,
        width: f64,
        #[serde(default = "defaults::half")]
        share: f64,
    },
    /// Per-particle polynomials in `(t_j, x_j…)`.
    External { externals: Vec<Polynomial> },
    /// `∂g/∂t_j` plus per-particle externals.
    GradientGauge { g: Polynomial, externals: Vec<Polynomial> },
}

impl PotentialSpec {
    pub fn build(&self, n: usize, space_dim: usize) -> Result<Box<dyn PotentialField>> {
        let check_n = |m: usize| {
            if m == n {
                Ok(())
            } else {
                Err(CliError::config(format!("potential lists {m} externals for {n} particles")))
            }
        };
        Ok(match self {
            PotentialSpec::CoulombSplit { charge, share } => Box::new(coulomb_split(n, space_dim, *charge, *share)?),
            PotentialSpec::GaussianPair { amplitude, width, share } => {
                Box::new(gaussian_split(n, space_dim, *amplitude, *width, *share)?)
            }
            PotentialSpec::External { externals } => {
                check_n(externals.len())?;
                Box::new(GaugePlusExternal::external(space_dim, externals.clone())?)
            }
            PotentialSpec::GradientGauge { g, externals } => {
                check_n(externals.len())?;
                Box::new(GaugePlusExternal::new(space_dim, g.clone(), externals.clone())?)
            }
        })
    }
}

/// Uniform zero-padded 1D lattice.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub points: usize,
    pub spacing: f64,
    #[serde(default)]
    pub origin: f64,
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid> {
        Ok(Grid::new(1, self.points, self.spacing, self.origin, Boundary::ZeroPadded)?)
    }
}

pub fn pair_potential(kind: &PairKind) -> PairPotential {
    match *kind {
        PairKind::Coulomb { charge } => PairPotential::coulomb(charge),
        PairKind::Gaussian { amplitude, width } => PairPotential::gaussian(amplitude, width),
    }
}

/// One-particle initial state on a 1D grid. Spinors are lists of
/// `[re, im]` pairs, one per spin component.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StateSpec {
    /// `exp(−(x−c)²/(2w²) + ikx)·spinor`, zero beyond `cutoff·width`.
    Gaussian {
        center: f64,
        width: f64,
        #[serde(default)]
        momentum: f64,
        #[serde(default = "defaults::pulse_cutoff")]
        cutoff: f64,
        #[serde(default)]
        spinor: Option<Vec<[f64; 2]>>,
    },
    /// `exp(ikx)·spinor` on `window[0] ≤ x ≤ window[1]`, zero elsewhere.
    PlaneWave {
        wavenumber: f64,
        window: [f64; 2],
        #[serde(default)]
        spinor: Option<Vec<[f64; 2]>>,
    },
    /// `spinor` on a single cell (zero-based index).
    DeltaCell {
        cell: usize,
        #[serde(default)]
        spinor: Option<Vec<[f64; 2]>>,
    },
}

fn spinor(given: &Option<Vec<[f64; 2]>>, spin_dim: usize) -> Result<Vec<C64>> {
    match given {
        None => Ok((0..spin_dim).map(|s| C64::new(if s == 0 { 1.0 } else { 0.0 }, 0.0)).collect()),
        Some(v) if v.len() == spin_dim => Ok(v.iter().map(|&[re, im]| C64::new(re, im)).collect()),
        Some(v) => Err(CliError::config(format!("spinor has {} components, expected {spin_dim}", v.len()))),
    }
}

impl StateSpec {
    pub fn build(&self, grid: &Grid, spin_dim: usize) -> Result<GridFunction> {
        let zero = C64::new(0.0, 0.0);
        let psi = match self {
            StateSpec::Gaussian { center, width, momentum, cutoff, spinor: s } => {
                if !(*width > 0.0 && *cutoff > 0.0) {
                    return Err(CliError::config("gaussian state needs positive width and cutoff"));
                }
                let chi = spinor(s, spin_dim)?;
                GridFunction::from_fn(grid.clone(), 1, vec![spin_dim], |x, k| {
                    let d = x[0] - center;
                    if d.abs() > cutoff * width {
                        zero
                    } else {
                        chi[k] * C64::from_polar((-d * d / (2.0 * width * width)).exp(), momentum * x[0])
                    }
                })?
            }
            StateSpec::PlaneWave { wavenumber, window, spinor: s } => {
                let chi = spinor(s, spin_dim)?;
                GridFunction::from_fn(grid.clone(), 1, vec![spin_dim], |x, k| {
                    if x[0] < window[0] || x[0] > window[1] {
                        zero
                    } else {
                        chi[k] * C64::from_polar(1.0, wavenumber * x[0])
                    }
                })?
            }
            StateSpec::DeltaCell { cell, spinor: s } => {
                if *cell >= grid.points_per_axis {
                    return Err(CliError::config(format!("delta cell {cell} lies outside the grid")));
                }
                let chi = spinor(s, spin_dim)?;
                let mut psi = GridFunction::zeros(grid.clone(), 1, vec![spin_dim])?;
                psi.values[cell * spin_dim..(cell + 1) * spin_dim].copy_from_slice(&chi);
                psi
            }
        };
        Ok(psi)
    }
}

/// Product state from one spec per particle.
pub fn product_state(grid: &Grid, states: &[StateSpec], spin_dim: usize) -> Result<GridFunction> {
    let factors = states.iter().map(|s| s.build(grid, spin_dim)).collect::<Result<Vec<_>>>()?;
    Ok(GridFunction::product(&factors)?)
}

/// 1D target configuration given as `[t, x]` per particle.
pub fn line_config(points: &[[f64; 2]]) -> Result<SpacetimeConfig> {
    let pts: Vec<(f64, f64)> = points.iter().map(|&[t, x]| (t, x)).collect();
    Ok(SpacetimeConfig::line(&pts)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(points: usize) -> Grid {
        Grid::line(points, 0.1).unwrap()
    }

    #[test]
    fn seed_and_output_default() {
        let c = ScenarioConfig::parse("scenario = \"lightcone\"\n").unwrap();
        assert_eq!(c.scenario, Scenario::Lightcone);
        assert_eq!(c.seed, 0);
        assert!(c.output_dir.is_none());
        assert!(c.parameters.is_empty());
    }

    #[test]
    fn rejects_unknown_top_level_key_and_negative_seed() {
        let e = ScenarioConfig::parse("scenario = \"stokes\"\nsed = 3\n").unwrap_err();
        assert!(e.to_string().contains("`sed`"));
        let e = ScenarioConfig::parse("scenario = \"stokes\"\nseed = -1\n").unwrap_err();
        assert!(e.to_string().contains("`seed`"));
        let e = ScenarioConfig::parse("output_dir = \"x\"\n").unwrap_err();
        assert!(e.to_string().contains("`scenario`"));
    }

    #[test]
    fn delta_cell_state() {
        let s = StateSpec::DeltaCell { cell: 3, spinor: Some(vec![[0.0, 1.0], [2.0, 0.0]]) };
        let psi = s.build(&line(8), 2).unwrap();
        assert_eq!(psi.spinor_at(&[3]), vec![C64::new(0.0, 1.0), C64::new(2.0, 0.0)]);
        assert!((psi.norm_sqr() - 5.0 * 0.1).abs() < 1e-15);
        assert!(StateSpec::DeltaCell { cell: 8, spinor: None }.build(&line(8), 2).is_err());
    }

    #[test]
    fn spinor_length_must_match() {
        let s = StateSpec::PlaneWave { wavenumber: 1.0, window: [0.2, 0.5], spinor: Some(vec![[1.0, 0.0]]) };
        assert!(s.build(&line(8), 2).is_err());
        let psi = s.build(&line(8), 1).unwrap();
        // Cells 2..=5 lie in the window.
        assert_eq!(psi.values.iter().filter(|z| z.norm() > 0.0).count(), 4);
    }

    #[test]
    fn gaussian_state_carries_momentum_phase() {
        let s = StateSpec::Gaussian { center: 0.4, width: 0.2, momentum: 2.0, cutoff: 4.0, spinor: None };
        let psi = s.build(&line(9), 1).unwrap();
        let z = psi.values[4];
        assert!((z.norm() - 1.0).abs() < 1e-15);
        assert!((z.arg() - 0.8).abs() < 1e-12);
    }

    #[test]
    fn external_count_must_match_particles() {
        let p = PotentialSpec::External { externals: vec![Polynomial::constant(1.0)] };
        assert!(p.build(2, 1).is_err());
        assert!(p.build(1, 1).is_ok());
    }
}
