//! potential-analyze and gauge-decompose.

use multitime::potential::sampling::{sample_configurations, SampleBox, MIN_SEPARATION};
use multitime::potential::{gauge_decompose, relation_residuals, GaugeOptions};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::positive;
use crate::config::PotentialSpec;
use crate::error::{CliError, Result};
use crate::Ctx;

fn default_space_dim() -> usize {
    3
}

fn default_samples() -> usize {
    100
}

fn default_time_extent() -> f64 {
    1.0
}

fn default_space_extent() -> f64 {
    2.0
}

fn default_min_separation() -> f64 {
    MIN_SEPARATION
}

fn default_fd() -> f64 {
    1e-4
}

fn default_tol() -> f64 {
    1e-6
}

fn check_space_dim(d: usize) -> Result<()> {
    if d == 1 || d == 3 {
        Ok(())
    } else {
        Err(CliError::config(format!("parameters.space_dim must be 1 or 3, got {d}")))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialAnalyze {
    pub n_particles: usize,
    #[serde(default = "default_space_dim")]
    pub space_dim: usize,
    pub potential: PotentialSpec,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_time_extent")]
    pub time_extent: f64,
    #[serde(default = "default_space_extent")]
    pub space_extent: f64,
    #[serde(default = "default_min_separation")]
    pub min_separation: f64,
    #[serde(default = "default_fd")]
    pub fd_step: f64,
    /// Largest residual still reported as consistent.
    #[serde(default = "default_tol")]
    pub tol: f64,
}

#[derive(Serialize)]
struct Row {
    sample_id: usize,
    i: usize,
    j: usize,
    r1: f64,
    r2: f64,
}

impl PotentialAnalyze {
    pub fn validate(&self) -> Result<()> {
        check_space_dim(self.space_dim)?;
        positive("fd_step", self.fd_step)?;
        positive("tol", self.tol)?;
        positive("space_extent", self.space_extent)?;
        if self.n_particles < 2 {
            return Err(CliError::config("parameters.n_particles must be at least 2"));
        }
        if self.samples == 0 {
            return Err(CliError::config("parameters.samples must be positive"));
        }
        Ok(())
    }

    pub fn run(&self, ctx: &mut Ctx) -> Result<serde_json::Value> {
        let v = self.potential.build(self.n_particles, self.space_dim)?;
        let spec = SampleBox {
            n_particles: self.n_particles,
            space_dim: self.space_dim,
            time_extent: self.time_extent,
            space_extent: self.space_extent,
        };
        let drawn = sample_configurations(&spec, self.samples, ctx.seed, self.min_separation)?;
        if drawn.rejected > 0 {
            eprintln!(
                "warning: {} draws rejected for pair distance below {}",
                drawn.rejected, self.min_separation
            );
        }
        let table = relation_residuals(v.as_ref(), &drawn.configs, self.fd_step)?;
        let rows: Vec<Row> = table
            .rows
            .iter()
            .map(|r| Row { sample_id: r.sample_id, i: r.i + 1, j: r.j + 1, r1: r.r1, r2: r.r2 })
            .collect();
        ctx.out.csv("residuals.csv", &rows)?;
        ctx.out.json("samples.json", &drawn.configs)?;
        Ok(json!({
            "max_r1": table.max_r1,
            "max_r2": table.max_r2,
            "flagged_samples": table.flagged,
            "rejected_draws": drawn.rejected,
            "consistent": table.max() <= self.tol,
        }))
    }
}

fn default_gauge_dim() -> usize {
    1
}

fn default_nodes() -> usize {
    64
}

fn default_probes() -> usize {
    4
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaugeDecompose {
    #[serde(default = "default_gauge_dim")]
    pub space_dim: usize,
    pub potential: PotentialSpec,
    /// Box `[0, upper_1] × … × [0, upper_N]`; its length fixes N.
    pub upper: Vec<f64>,
    #[serde(default = "default_nodes")]
    pub nodes: usize,
    /// Explicit probe configurations, one position per particle. Drawn
    /// from the seed when absent.
    #[serde(default)]
    pub probes: Option<Vec<Vec<Vec<f64>>>>,
    #[serde(default = "default_probes")]
    pub n_probes: usize,
    #[serde(default = "default_space_extent")]
    pub probe_extent: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_fd")]
    pub fd_step: f64,
}

impl GaugeDecompose {
    pub fn validate(&self) -> Result<()> {
        check_space_dim(self.space_dim)?;
        positive("tol", self.tol)?;
        positive("fd_step", self.fd_step)?;
        positive("probe_extent", self.probe_extent)?;
        if self.upper.is_empty() {
            return Err(CliError::config("parameters.upper must name at least one time"));
        }
        if self.nodes < 2 {
            return Err(CliError::config("parameters.nodes must be at least 2"));
        }
        if self.probes.is_none() && self.n_probes == 0 {
            return Err(CliError::config("parameters.n_probes must be positive"));
        }
        Ok(())
    }

    pub fn run(&self, ctx: &mut Ctx) -> Result<serde_json::Value> {
        let n = self.upper.len();
        let v = self.potential.build(n, self.space_dim)?;
        let probes = match &self.probes {
            Some(p) => p.clone(),
            None => {
                let spec =
                    SampleBox { n_particles: n, space_dim: self.space_dim, time_extent: 0.0, space_extent: self.probe_extent };
                sample_configurations(&spec, self.n_probes, ctx.seed, MIN_SEPARATION)?
                    .configs
                    .into_iter()
                    .map(|q| q.into_iter().map(|e| e.x).collect())
                    .collect()
            }
        };
        let opts = GaugeOptions { tol: self.tol, fd_step: self.fd_step, probes: probes.clone() };
        let dec = gauge_decompose(v.as_ref(), &self.upper, self.nodes, &opts)?;
        ctx.note(format!("θ recovered, residual {:.3e}", dec.residual));
        let mut header: Vec<String> = (1..=n).map(|j| format!("t{j}")).collect();
        header.push("theta".into());
        let total = dec.theta.len();
        let mut rows = Vec::with_capacity(total);
        for (flat, theta) in dec.theta.iter().enumerate() {
            let mut rest = flat;
            let mut idx = vec![0; n];
            for a in (0..n).rev() {
                idx[a] = rest % self.nodes;
                rest /= self.nodes;
            }
            let mut row: Vec<String> = idx.iter().zip(&dec.axes).map(|(&i, ax)| ax[i].to_string()).collect();
            row.push(theta.to_string());
            rows.push(row);
        }
        ctx.out.csv_records("theta.csv", &header, &rows)?;
        ctx.out.json(
            "gauge.json",
            &json!({
                "probes": probes,
                "reference": dec.reference,
                "residual": dec.residual,
                "w_spread": dec.w_spread,
                "precheck": dec.precheck,
            }),
        )?;
        Ok(json!({ "residual": dec.residual, "w_spread": dec.w_spread, "precheck": dec.precheck, "nodes": total }))
    }
}
