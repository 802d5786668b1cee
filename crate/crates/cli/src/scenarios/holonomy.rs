//! consistency-check, holonomy-scan and stokes.

use multitime::holonomy::{
    boundary_holonomy, consistency_residual, path_independence_gap, rectangle_holonomy, surface_ordered_exp,
    SurfacePatch, TimePath,
};
use multitime::operator::OperatorJson;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{loglog_slope, positive};
use crate::config::{defaults, FieldSpec};
use crate::error::{CliError, Result};
use crate::Ctx;

fn axis_pair(axes: [usize; 2], n: usize) -> Result<(usize, usize)> {
    let [j, k] = axes;
    if j == 0 || k == 0 || j > n || k > n || j == k {
        return Err(CliError::config(format!("parameters.axes must be two distinct times in 1..={n}, got {axes:?}")));
    }
    Ok((j - 1, k - 1))
}

fn default_axes() -> [usize; 2] {
    [1, 2]
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathCheck {
    pub start: Vec<f64>,
    /// Each staircase is a list of `[time (1-based), amount]` moves; all
    /// must end at the same point.
    pub staircases: Vec<Vec<(usize, f64)>>,
    #[serde(default = "default_path_steps")]
    pub steps_per_segment: usize,
    #[serde(default = "default_path_tol")]
    pub tol: f64,
}

fn default_path_steps() -> usize {
    1000
}

fn default_path_tol() -> f64 {
    1e-6
}

fn default_curvature_tol() -> f64 {
    1e-8
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConsistencyCheck {
    pub field: FieldSpec,
    /// Time points at which the curvature is evaluated.
    pub points: Vec<Vec<f64>>,
    #[serde(default = "defaults::fd_step")]
    pub fd_step: f64,
    /// Largest curvature norm still reported as consistent.
    #[serde(default = "default_curvature_tol")]
    pub tol: f64,
    #[serde(default)]
    pub paths: Option<PathCheck>,
}

#[derive(Serialize)]
struct CurvatureRow {
    point_id: usize,
    j: usize,
    k: usize,
    norm: f64,
}

impl ConsistencyCheck {
    pub fn validate(&self) -> Result<()> {
        positive("fd_step", self.fd_step)?;
        positive("tol", self.tol)?;
        if self.points.is_empty() {
            return Err(CliError::config("parameters.points must list at least one time point"));
        }
        if let Some(p) = &self.paths {
            if p.staircases.len() < 2 {
                return Err(CliError::config("parameters.paths.staircases needs at least two paths"));
            }
            positive("paths.tol", p.tol)?;
        }
        Ok(())
    }

    pub fn run(&self, ctx: &mut Ctx) -> Result<serde_json::Value> {
        let field = self.field.build()?;
        let mut rows = Vec::new();
        let mut details = Vec::new();
        let mut worst = 0.0f64;
        for (id, point) in self.points.iter().enumerate() {
            let report = consistency_residual(field.as_ref(), point, self.fd_step)?;
            worst = worst.max(report.max_norm);
            for p in &report.pairs {
                rows.push(CurvatureRow { point_id: id, j: p.j + 1, k: p.k + 1, norm: p.norm });
                details.push(json!({
                    "point_id": id,
                    "point": point,
                    "j": p.j + 1,
                    "k": p.k + 1,
                    "norm": p.norm,
                    "curvature": OperatorJson::from(p.curvature.clone()),
                }));
            }
        }
        ctx.out.csv("curvature.csv", &rows)?;
        ctx.out.json("curvature.json", &details)?;
        let mut summary = json!({ "max_curvature_norm": worst, "consistent": worst <= self.tol });
        if let Some(pc) = &self.paths {
            let paths = pc
                .staircases
                .iter()
                .map(|moves| {
                    let moves = moves
                        .iter()
                        .map(|&(axis, amount)| {
                            if axis == 0 || axis > pc.start.len() {
                                Err(CliError::config(format!("staircase move along time {axis} is out of range")))
                            } else {
                                Ok((axis - 1, amount))
                            }
                        })
                        .collect::<Result<Vec<_>>>()?;
                    Ok(TimePath::staircase(&pc.start, &moves, pc.steps_per_segment)?)
                })
                .collect::<Result<Vec<_>>>()?;
            let end = paths[0].end().to_vec();
            let gap = path_independence_gap(field.as_ref(), &pc.start, &end, &paths)?;
            ctx.note(format!("path independence gap {gap:.3e}"));
            summary["path_gap"] = json!(gap);
            summary["paths_agree"] = json!(gap <= pc.tol);
        }
        Ok(summary)
    }
}

fn default_exponents() -> [i32; 2] {
    [4, 10]
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HolonomyScan {
    pub field: FieldSpec,
    #[serde(default)]
    pub corner: Option<Vec<f64>>,
    #[serde(default = "default_axes")]
    pub axes: [usize; 2],
    /// `dt = 2^-e` for `e` from the first to the second entry inclusive.
    #[serde(default = "default_exponents")]
    pub dt_exponents: [i32; 2],
    #[serde(default = "default_one_step")]
    pub steps_per_edge: usize,
    #[serde(default = "defaults::fd_step")]
    pub fd_step: f64,
}

fn default_one_step() -> usize {
    1
}

#[derive(Serialize)]
struct ScanRow {
    dt: f64,
    loop_deviation: f64,
    ratio: f64,
}

impl HolonomyScan {
    pub fn validate(&self) -> Result<()> {
        positive("fd_step", self.fd_step)?;
        if self.dt_exponents[0] > self.dt_exponents[1] {
            return Err(CliError::config("parameters.dt_exponents must be increasing"));
        }
        if self.steps_per_edge == 0 {
            return Err(CliError::config("parameters.steps_per_edge must be positive"));
        }
        Ok(())
    }

    pub fn run(&self, ctx: &mut Ctx) -> Result<serde_json::Value> {
        let field = self.field.build()?;
        let n = field.n_times();
        let (j, k) = axis_pair(self.axes, n)?;
        let corner = self.corner.clone().unwrap_or_else(|| vec![0.0; n]);
        let mut rows = Vec::new();
        for e in self.dt_exponents[0]..=self.dt_exponents[1] {
            let dt = 2f64.powi(-e);
            let rh = rectangle_holonomy(field.as_ref(), &corner, j, k, dt, self.steps_per_edge)?;
            let dev = rh.loop_deviation.op_norm();
            rows.push(ScanRow { dt, loop_deviation: dev, ratio: dev / (dt * dt) });
        }
        ctx.out.csv("holonomy_scan.csv", &rows)?;
        let curvature = consistency_residual(field.as_ref(), &corner, self.fd_step)?
            .pair(j, k)
            .map(|p| p.norm)
            .unwrap_or(0.0);
        let last = rows.last().map(|r| r.ratio).unwrap_or(f64::NAN);
        let slope = loglog_slope(&rows.iter().map(|r| (r.dt, r.loop_deviation)).collect::<Vec<_>>());
        Ok(json!({
            "curvature_norm": curvature,
            "final_ratio": last,
            "relative_deviation": if curvature > 0.0 { (last - curvature).abs() / curvature } else { last },
            "loglog_slope": slope,
        }))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PatchSpec {
    /// Axiparallel rectangle spanned by times `axes` from `corner`.
    Rectangle {
        corner: Vec<f64>,
        #[serde(default = "default_axes")]
        axes: [usize; 2],
        extent: [f64; 2],
    },
    /// Piecewise-bilinear sheet through `vertices[r][c]`.
    Bilinear { vertices: Vec<Vec<Vec<f64>>> },
}

fn default_meshes() -> Vec<usize> {
    vec![64, 128]
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stokes {
    pub field: FieldSpec,
    #[serde(default)]
    pub patch: Option<PatchSpec>,
    #[serde(default = "default_meshes")]
    pub meshes: Vec<usize>,
    #[serde(default = "defaults::fd_step")]
    pub fd_step: f64,
}

#[derive(Serialize)]
struct StokesRow {
    mesh: usize,
    error: f64,
}

impl Stokes {
    pub fn validate(&self) -> Result<()> {
        positive("fd_step", self.fd_step)?;
        if self.meshes.is_empty() || self.meshes.contains(&0) {
            return Err(CliError::config("parameters.meshes must list positive mesh sizes"));
        }
        Ok(())
    }

    fn patch(&self, spec: &PatchSpec, n: usize, mesh: usize) -> Result<SurfacePatch> {
        Ok(match spec {
            PatchSpec::Rectangle { corner, axes, extent } => {
                let (j, k) = axis_pair(*axes, n)?;
                SurfacePatch::rectangle(corner, j, k, extent[0], extent[1], mesh)?
            }
            PatchSpec::Bilinear { vertices } => SurfacePatch::bilinear(vertices.clone(), mesh, mesh)?,
        })
    }

    pub fn run(&self, ctx: &mut Ctx) -> Result<serde_json::Value> {
        let Some(spec) = &self.patch else {
            eprintln!("stokes: no patch supplied, nothing to compare");
            let summary = json!({ "status": "no patch supplied" });
            ctx.out.json("stokes.json", &summary)?;
            return Ok(summary);
        };
        let field = self.field.build()?;
        let n = field.n_times();
        let mut rows = Vec::new();
        let mut finest = None;
        for &mesh in &self.meshes {
            let patch = self.patch(spec, n, mesh)?;
            if patch.n_times() != n {
                return Err(CliError::config(format!("patch lives in {} times, field has {n}", patch.n_times())));
            }
            let boundary = boundary_holonomy(field.as_ref(), &patch, mesh)?;
            let surface = surface_ordered_exp(field.as_ref(), &patch, self.fd_step)?;
            let error = boundary.distance(&surface)?;
            ctx.note(format!("mesh {mesh}: error {error:.3e}"));
            rows.push(StokesRow { mesh, error });
            finest = Some((mesh, boundary, surface));
        }
        ctx.out.csv("stokes.csv", &rows)?;
        let ratios: Vec<f64> = rows.windows(2).map(|w| w[0].error / w[1].error).collect();
        if let Some((mesh, boundary, surface)) = finest {
            ctx.out.json(
                "stokes.json",
                &json!({
                    "mesh": mesh,
                    "boundary_holonomy": OperatorJson::from(boundary),
                    "surface_ordered_exp": OperatorJson::from(surface),
                }),
            )?;
        }
        Ok(json!({ "status": "ok", "errors": rows.iter().map(|r| r.error).collect::<Vec<_>>(), "refinement_ratios": ratios }))
    }
}
