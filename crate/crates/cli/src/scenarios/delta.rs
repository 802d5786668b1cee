//! delta-evolve and overlap-test.

use multitime::delta::{
    admissible_partitions, coarsest_partition, construct_phi, construct_slice, order_independence,
    overlap_welldefinedness, ConstructOptions, ConstructionOrder, DeltaModel, DeviationReport,
};
use multitime::geometry::SpacetimeConfig;
use multitime::lattice::{GridFunction, PairKind};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::positive;
use crate::config::{defaults, line_config, pair_potential, product_state, GridSpec, StateSpec};
use crate::error::{CliError, Result};
use crate::Ctx;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub grid: GridSpec,
    #[serde(default = "defaults::one")]
    pub mass: f64,
    /// Interaction range; the pair potential is cut off smoothly to vanish
    /// beyond it.
    pub delta: f64,
    #[serde(default)]
    pub pair: Option<PairKind>,
    /// One-particle factors of the initial product state; their count fixes
    /// the particle number.
    pub phi0: Vec<StateSpec>,
}

impl ModelSpec {
    fn validate(&self) -> Result<()> {
        positive("model.delta", self.delta)?;
        if self.phi0.is_empty() {
            return Err(CliError::config("parameters.model.phi0 must list one state per particle"));
        }
        Ok(())
    }

    fn build(&self) -> Result<(DeltaModel, GridFunction)> {
        let grid = self.grid.build()?;
        let model =
            DeltaModel::new(grid.clone(), self.phi0.len(), self.mass, self.pair.as_ref().map(pair_potential), self.delta)?;
        let phi0 = product_state(&grid, &self.phi0, 2)?;
        Ok((model, phi0))
    }
}

fn targets(raw: &[Vec<[f64; 2]>], n: usize) -> Result<Vec<SpacetimeConfig>> {
    raw.iter()
        .enumerate()
        .map(|(id, t)| {
            if t.len() != n {
                return Err(CliError::config(format!(
                    "parameters.targets[{id}] has {} events for {n} particles",
                    t.len()
                )));
            }
            line_config(t)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrderSpec {
    Forward,
    Backward,
}

fn default_order() -> OrderSpec {
    OrderSpec::Forward
}

fn default_tol() -> f64 {
    1e-8
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeltaEvolve {
    pub model: ModelSpec,
    /// Target configurations, `[t, x]` per particle.
    pub targets: Vec<Vec<[f64; 2]>>,
    #[serde(default = "default_order")]
    pub order: OrderSpec,
    /// Slack demanded of the membership predicates.
    #[serde(default)]
    pub margin: f64,
    /// Largest construction-order deviation still reported as consistent.
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Also write the full lattice slice at each target's family times.
    #[serde(default)]
    pub export_slices: bool,
}

impl DeltaEvolve {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        positive("tol", self.tol)?;
        if self.targets.is_empty() {
            return Err(CliError::config("parameters.targets must list at least one configuration"));
        }
        Ok(())
    }

    pub fn run(&self, ctx: &mut Ctx) -> Result<serde_json::Value> {
        let (model, phi0) = self.model.build()?;
        let order = match self.order {
            OrderSpec::Forward => ConstructionOrder::Forward,
            OrderSpec::Backward => ConstructionOrder::Backward,
        };
        let opts = ConstructOptions { partition: None, order, trim: true, margin: self.margin };
        let mut out = Vec::new();
        let mut worst = 0.0f64;
        for (id, q) in targets(&self.targets, phi0.n_particles)?.iter().enumerate() {
            let c = construct_phi(&model, &phi0, q, &opts)?;
            let overlap = overlap_welldefinedness(&model, &phi0, q, self.margin)?.max_deviation;
            let pivots = order_independence(&model, &phi0, q, None, self.margin)?.max_deviation;
            worst = worst.max(overlap).max(pivots);
            let cross = c.trace.iter().map(|l| l.max_cross_interaction).fold(0.0, f64::max);
            ctx.note(format!("target {id}: deviations {overlap:.2e} / {pivots:.2e}"));
            out.push(json!({
                "target_id": id,
                "config": self.targets[id],
                "coarsest_partition": coarsest_partition(q, model.delta())?.to_string(),
                "admissible_partitions": admissible_partitions(q, model.delta())?
                    .iter()
                    .map(|p| p.to_string())
                    .collect::<Vec<_>>(),
                "family_times": c.family_times,
                "value": c.value,
                "max_cross_interaction": cross,
                "deviations": { "overlap": overlap, "order": pivots },
            }));
            if self.export_slices {
                let s = construct_slice(&model, &phi0, q, &opts)?;
                ctx.out.slice(&format!("target_{id}.slice"), &s.data, &q.times())?;
            }
        }
        ctx.out.json("delta_evolve.json", &out)?;
        Ok(json!({ "targets": out.len(), "max_deviation": worst, "consistent": worst <= self.tol }))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverlapTest {
    pub model: ModelSpec,
    pub targets: Vec<Vec<[f64; 2]>>,
    #[serde(default)]
    pub margin: f64,
    /// Deviations above this fail the run.
    #[serde(default = "default_tol")]
    pub tol: f64,
}

#[derive(Serialize)]
struct OverlapRow {
    target_id: usize,
    check: &'static str,
    constructions: usize,
    max_deviation: f64,
}

fn report_json(r: &DeviationReport) -> serde_json::Value {
    json!({
        "max_deviation": r.max_deviation,
        "constructions": r.constructions.iter().map(|c| json!({
            "partition": c.partition.to_string(),
            "order": c.order,
            "value": c.value,
        })).collect::<Vec<_>>(),
    })
}

impl OverlapTest {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        positive("tol", self.tol)?;
        if self.targets.is_empty() {
            return Err(CliError::config("parameters.targets must list at least one configuration"));
        }
        Ok(())
    }

    pub fn run(&self, ctx: &mut Ctx) -> Result<serde_json::Value> {
        let (model, phi0) = self.model.build()?;
        let mut rows = Vec::new();
        let mut details = Vec::new();
        for (id, q) in targets(&self.targets, phi0.n_particles)?.iter().enumerate() {
            let overlap = overlap_welldefinedness(&model, &phi0, q, self.margin)?;
            let pivots = order_independence(&model, &phi0, q, None, self.margin)?;
            rows.push(OverlapRow {
                target_id: id,
                check: "overlap",
                constructions: overlap.constructions.len(),
                max_deviation: overlap.max_deviation,
            });
            rows.push(OverlapRow {
                target_id: id,
                check: "order",
                constructions: pivots.constructions.len(),
                max_deviation: pivots.max_deviation,
            });
            details.push(json!({
                "target_id": id,
                "config": self.targets[id],
                "overlap": report_json(&overlap),
                "order": report_json(&pivots),
            }));
        }
        ctx.out.csv("overlap.csv", &rows)?;
        ctx.out.json("overlap.json", &details)?;
        let worst = rows.iter().map(|r| r.max_deviation).fold(0.0, f64::max);
        if worst > self.tol {
            return Err(CliError::Numerical(multitime::Error::ConsistencyAssertion(format!(
                "constructions disagree by {worst:.3e}, above tolerance {:.1e}",
                self.tol
            ))));
        }
        Ok(json!({ "targets": details.len(), "max_deviation": worst }))
    }
}
