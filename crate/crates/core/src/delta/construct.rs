//! Inductive construction of the multi-time wave function of the δ-model.
//!
//! Families (blocks of a partition) carry one time each. A construction plan
//! is a list of legs, each evolving a set of active particles jointly under
//! their interacting Hamiltonian while the others stay frozen. The canonical
//! forward plan evolves everybody to the earliest family time, freezes that
//! family, evolves the rest to the next time, and so on. Cross-family pair
//! terms are left out of every leg; the run checks that they vanish exactly
//! on the region that can influence the target.

use serde::Serialize;

use super::partition::{coarsest_partition, in_s_delta_p_with_margin, is_delta_spacelike_with_margin, Partition};
use crate::error::{Error, Result};
use crate::geometry::SpacetimeConfig;
use crate::lattice::dirac::{Block, DiracLattice};
use crate::lattice::grid::{Grid, GridFunction};
use crate::lattice::pair::{PairPotential, RangeCutoff};
use crate::operator::C64;

/// Relative slack when snapping positions to lattice sites.
const SITE_TOL: f64 = 1e-9;

/// Lattice δ-model: N Dirac particles on one 1D lattice with a pair
/// potential that vanishes beyond distance δ.
#[derive(Clone, Debug)]
pub struct DeltaModel {
    lattice: DiracLattice,
    delta: f64,
}

impl DeltaModel {
    /// `pair` is multiplied by a C² bump that cuts it off at `delta` over a
    /// taper of two spacings.
    pub fn new(grid: Grid, n_particles: usize, mass: f64, pair: Option<PairPotential>, delta: f64) -> Result<Self> {
        let cutoff = RangeCutoff::for_grid(delta, grid.spacing)?;
        if delta >= grid.extent() {
            return Err(Error::invalid(format!("delta {delta} must be shorter than the lattice extent {}", grid.extent())));
        }
        let mut lattice = DiracLattice::new(grid, n_particles, mass)?;
        if let Some(w) = pair {
            lattice = lattice.with_pair(w.with_cutoff(cutoff))?;
        }
        Ok(DeltaModel { lattice, delta })
    }

    pub fn lattice(&self) -> &DiracLattice {
        &self.lattice
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Lattice sites and step counts of a target configuration.
    pub fn target_cells(&self, q: &SpacetimeConfig) -> Result<(Vec<usize>, Vec<i64>)> {
        let grid = self.lattice.grid();
        if q.n_particles() != self.lattice.n_particles() || q.space_dim() != 1 {
            return Err(Error::shape(format!(
                "target must have {} one-dimensional events",
                self.lattice.n_particles()
            )));
        }
        let mut cells = Vec::new();
        let mut steps = Vec::new();
        for (j, e) in q.points.iter().enumerate() {
            let x = (e.x[0] - grid.origin) / grid.spacing;
            let i = x.round();
            if (x - i).abs() > SITE_TOL * x.abs().max(1.0) || i < 0.0 || i >= grid.points_per_axis as f64 {
                return Err(Error::invalid(format!("particle {} position {} is not a lattice site", j + 1, e.x[0])));
            }
            cells.push(i as usize);
            steps.push(self.lattice.steps_for(e.t)?);
        }
        Ok((cells, steps))
    }
}

/// One joint evolution of `active` by `steps` lattice steps.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Leg {
    pub active: Vec<usize>,
    pub steps: i64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstructionOrder {
    /// Earliest family first.
    Forward,
    /// Everybody to the latest time, then families peel off backward.
    Backward,
    /// Everybody to the time of the `k`-th earliest family, then the earlier
    /// families backward and the later ones forward.
    Pivot(usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConstructionPlan {
    pub legs: Vec<Leg>,
}

impl ConstructionPlan {
    /// Builds a plan from families with their target step counts.
    pub fn new(families: &[(Vec<usize>, i64)], order: ConstructionOrder) -> Result<Self> {
        let l = families.len();
        if l == 0 {
            return Err(Error::invalid("need at least one family"));
        }
        let mut sorted: Vec<&(Vec<usize>, i64)> = families.iter().collect();
        sorted.sort_by_key(|f| f.1);
        let pivot = match order {
            ConstructionOrder::Forward => 0,
            ConstructionOrder::Backward => l - 1,
            ConstructionOrder::Pivot(k) if k < l => k,
            ConstructionOrder::Pivot(k) => {
                return Err(Error::invalid(format!("pivot {k} out of range for {l} families")))
            }
        };
        let mut legs = Vec::new();
        let mut push = |active: Vec<usize>, steps: i64| {
            if steps != 0 && !active.is_empty() {
                legs.push(Leg { active, steps });
            }
        };
        let members = |range: std::ops::Range<usize>| -> Vec<usize> {
            let mut v: Vec<usize> = sorted[range].iter().flat_map(|f| f.0.iter().copied()).collect();
            v.sort_unstable();
            v
        };
        let t_pivot = sorted[pivot].1;
        push(members(0..l), t_pivot);
        let mut now = t_pivot;
        for a in (0..pivot).rev() {
            push(members(0..a + 1), sorted[a].1 - now);
            now = sorted[a].1;
        }
        now = t_pivot;
        for a in pivot + 1..l {
            push(members(a..l), sorted[a].1 - now);
            now = sorted[a].1;
        }
        Ok(ConstructionPlan { legs })
    }

    /// Net displacement of each particle.
    pub fn net_steps(&self, n: usize) -> Vec<i64> {
        let mut net = vec![0; n];
        for leg in &self.legs {
            for &k in &leg.active {
                net[k] += leg.steps;
            }
        }
        net
    }

    /// Total cells each particle streams over the whole plan.
    pub fn travel(&self, n: usize) -> Vec<usize> {
        let mut t = vec![0; n];
        for leg in &self.legs {
            for &k in &leg.active {
                t[k] += leg.steps.unsigned_abs() as usize;
            }
        }
        t
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LegRecord {
    /// One-based particle labels.
    pub active: Vec<usize>,
    pub start_times: Vec<f64>,
    pub end_times: Vec<f64>,
    /// Largest `|W|` between an active and a frozen particle on the target's
    /// dependency cone; zero by construction.
    pub max_cross_interaction: f64,
    /// Relative norm change; only available for full-slice runs.
    pub norm_drift: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct ConstructOptions {
    /// Defaults to the coarsest admissible partition.
    pub partition: Option<Partition>,
    pub order: ConstructionOrder,
    /// Restrict the run to the target's product dependency cone.
    pub trim: bool,
    /// Extra slack required by the membership predicates.
    pub margin: f64,
}

impl Default for ConstructOptions {
    fn default() -> Self {
        ConstructOptions { partition: None, order: ConstructionOrder::Forward, trim: true, margin: 0.0 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Construction {
    pub partition: Partition,
    pub family_times: Vec<f64>,
    pub plan: ConstructionPlan,
    /// Spinor at the target, particle 1's spin index most significant.
    pub value: Vec<C64>,
    pub trace: Vec<LegRecord>,
}

/// Φ on a full lattice slice with one time per family.
#[derive(Clone, Debug, Serialize)]
pub struct MultiTimeSlice {
    pub partition: Partition,
    pub family_times: Vec<f64>,
    pub data: GridFunction,
    pub trace: Vec<LegRecord>,
}

struct Prepared {
    partition: Partition,
    family_times: Vec<f64>,
    plan: ConstructionPlan,
    cells: Vec<usize>,
}

fn prepare(model: &DeltaModel, phi0: &GridFunction, q: &SpacetimeConfig, opts: &ConstructOptions) -> Result<Prepared> {
    let lattice = model.lattice();
    lattice.check_state(phi0)?;
    if !is_delta_spacelike_with_margin(q, model.delta, opts.margin)? {
        return Err(Error::invalid(format!("target is not δ-spacelike for δ = {} (margin {})", model.delta, opts.margin)));
    }
    let partition = match &opts.partition {
        Some(p) => p.clone(),
        None => coarsest_partition(q, model.delta)?,
    };
    if !in_s_delta_p_with_margin(q, &partition, model.delta, opts.margin)? {
        return Err(Error::invalid(format!("target does not lie in the set of partition {partition}")));
    }
    let (cells, steps) = model.target_cells(q)?;
    let families: Vec<(Vec<usize>, i64)> = partition.blocks().iter().map(|b| (b.clone(), steps[b[0]])).collect();
    let family_times = partition.blocks().iter().map(|b| q.points[b[0]].t).collect();
    let plan = ConstructionPlan::new(&families, opts.order)?;
    if plan.net_steps(q.n_particles()) != steps {
        return Err(Error::ConsistencyAssertion("construction plan does not reach the target times".into()));
    }
    lattice.check_boundary(phi0, &plan.travel(q.n_particles()))?;
    Ok(Prepared { partition, family_times, plan, cells })
}

/// Largest `|W|` between active and frozen particles over the cone of the
/// target seen from the start of each leg.
fn cross_interactions(lattice: &DiracLattice, plan: &ConstructionPlan, cells: &[usize]) -> Vec<f64> {
    let n = cells.len();
    let span = lattice.grid().points_per_axis as i64 - 1;
    let mut remaining = plan.travel(n);
    let mut out = Vec::with_capacity(plan.legs.len());
    for leg in &plan.legs {
        let mut worst = 0.0f64;
        if lattice.pair().is_some() {
            for &a in &leg.active {
                for f in (0..n).filter(|f| !leg.active.contains(f)) {
                    let centre = cells[a] as i64 - cells[f] as i64;
                    let reach = (remaining[a] + remaining[f]) as i64;
                    for o in (centre - reach).max(-span)..=(centre + reach).min(span) {
                        worst = worst.max(lattice.pair_at(o).abs());
                    }
                }
            }
        }
        out.push(worst);
        for &k in &leg.active {
            remaining[k] -= leg.steps.unsigned_abs() as usize;
        }
    }
    out
}

fn run_plan(
    lattice: &DiracLattice,
    mut block: Block,
    prep: &Prepared,
    full: bool,
) -> Result<(Block, Vec<LegRecord>)> {
    let n = prep.cells.len();
    let h = lattice.grid().spacing;
    let cross = cross_interactions(lattice, &prep.plan, &prep.cells);
    if let Some((k, w)) = cross.iter().enumerate().find(|(_, w)| **w != 0.0) {
        return Err(Error::ConsistencyAssertion(format!(
            "leg {} would drop a cross-family interaction of size {w:e} inside the dependency cone",
            k + 1
        )));
    }
    let mut times = vec![0i64; n];
    let mut trace = Vec::with_capacity(prep.plan.legs.len());
    if prep.plan.legs.is_empty() {
        return Ok((block, trace));
    }
    lattice.to_characteristic(&mut block);
    let norm = |b: &Block| b.values.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for (leg, &cross) in prep.plan.legs.iter().zip(&cross) {
        let start: Vec<f64> = times.iter().map(|&t| t as f64 * h).collect();
        let before = full.then(|| norm(&block));
        lattice.run(&mut block, &leg.active, leg.steps);
        for &k in &leg.active {
            times[k] += leg.steps;
        }
        let drift = before.map(|b| if b > 0.0 { (norm(&block) - b).abs() / b } else { 0.0 });
        trace.push(LegRecord {
            active: leg.active.iter().map(|k| k + 1).collect(),
            start_times: start,
            end_times: times.iter().map(|&t| t as f64 * h).collect(),
            max_cross_interaction: cross,
            norm_drift: drift,
        });
    }
    lattice.from_characteristic(&mut block);
    Ok((block, trace))
}

/// Φ at the target configuration.
///
/// With `trim`, only the product of intervals around the target that the
/// plan can reach is evolved; the result is bit-identical to the full run.
pub fn construct_phi(
    model: &DeltaModel,
    phi0: &GridFunction,
    target: &SpacetimeConfig,
    opts: &ConstructOptions,
) -> Result<Construction> {
    let prep = prepare(model, phi0, target, opts)?;
    let lattice = model.lattice();
    let n = prep.cells.len();
    let size = lattice.grid().points_per_axis;
    let (lo, dims): (Vec<usize>, Vec<usize>) = if opts.trim {
        prep.plan
            .travel(n)
            .iter()
            .zip(&prep.cells)
            .map(|(&r, &c)| {
                let lo = c.saturating_sub(r);
                (lo, (c + r).min(size - 1) - lo + 1)
            })
            .unzip()
    } else {
        (vec![0; n], vec![size; n])
    };
    let block = extract(phi0, &lo, &dims);
    let (block, trace) = run_plan(lattice, block, &prep, !opts.trim)?;
    let spins = 1usize << n;
    let site = prep.cells.iter().zip(&lo).zip(&dims).fold(0, |acc, ((&c, &l), &d)| acc * d + (c - l));
    let value = block.values[site * spins..(site + 1) * spins].to_vec();
    Ok(Construction { partition: prep.partition, family_times: prep.family_times, plan: prep.plan, value, trace })
}

/// Φ on the full lattice slice at the family times of `target`.
///
/// Values away from the target are those produced by the plan's family
/// Hamiltonians; they equal the multi-time wave function wherever the
/// slice configuration itself lies in the partition's set.
pub fn construct_slice(
    model: &DeltaModel,
    phi0: &GridFunction,
    target: &SpacetimeConfig,
    opts: &ConstructOptions,
) -> Result<MultiTimeSlice> {
    let prep = prepare(model, phi0, target, opts)?;
    let lattice = model.lattice();
    let (block, trace) = run_plan(lattice, lattice.full_block(phi0), &prep, true)?;
    Ok(MultiTimeSlice {
        partition: prep.partition,
        family_times: prep.family_times,
        data: GridFunction { values: block.values, ..phi0.clone() },
        trace,
    })
}

fn extract(phi0: &GridFunction, lo: &[usize], dims: &[usize]) -> Block {
    let n = lo.len();
    let spins = phi0.spin_total();
    let sites: usize = dims.iter().product();
    let mut values = Vec::with_capacity(sites * spins);
    let mut idx = vec![0; n];
    for site in 0..sites {
        let mut rest = site;
        for k in (0..n).rev() {
            idx[k] = lo[k] + rest % dims[k];
            rest /= dims[k];
        }
        let g = phi0.site_of(&idx);
        values.extend_from_slice(&phi0.values[g * spins..(g + 1) * spins]);
    }
    Block { lo: lo.to_vec(), dims: dims.to_vec(), values }
}

/// `max_s |a_s − b_s|`.
pub fn spinor_deviation(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn max_pairwise(values: &[Vec<C64>]) -> f64 {
    let mut worst = 0.0f64;
    for (i, a) in values.iter().enumerate() {
        for b in &values[i + 1..] {
            worst = worst.max(spinor_deviation(a, b));
        }
    }
    worst
}

#[derive(Clone, Debug, Serialize)]
pub struct ConstructionComparison {
    pub partition: Partition,
    pub order: ConstructionOrder,
    pub value: Vec<C64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DeviationReport {
    pub constructions: Vec<ConstructionComparison>,
    pub max_deviation: f64,
}

/// Constructs Φ(q) with the family structure of every admissible partition,
/// each by the forward and the backward plan, and reports the largest
/// pairwise deviation.
pub fn overlap_welldefinedness(
    model: &DeltaModel,
    phi0: &GridFunction,
    q: &SpacetimeConfig,
    margin: f64,
) -> Result<DeviationReport> {
    let mut out = Vec::new();
    for p in super::partition::admissible_partitions(q, model.delta)? {
        if !in_s_delta_p_with_margin(q, &p, model.delta, margin)? {
            continue;
        }
        for order in [ConstructionOrder::Forward, ConstructionOrder::Backward] {
            let opts = ConstructOptions { partition: Some(p.clone()), order, trim: true, margin };
            let c = construct_phi(model, phi0, q, &opts)?;
            out.push(ConstructionComparison { partition: p.clone(), order, value: c.value });
        }
    }
    let values: Vec<Vec<C64>> = out.iter().map(|c| c.value.clone()).collect();
    Ok(DeviationReport { max_deviation: max_pairwise(&values), constructions: out })
}

/// Constructs Φ(q) by every pivot order of the given (default coarsest)
/// partition and reports the largest pairwise deviation.
pub fn order_independence(
    model: &DeltaModel,
    phi0: &GridFunction,
    q: &SpacetimeConfig,
    partition: Option<Partition>,
    margin: f64,
) -> Result<DeviationReport> {
    let p = match partition {
        Some(p) => p,
        None => coarsest_partition(q, model.delta)?,
    };
    let mut out = Vec::new();
    for k in 0..p.len() {
        let order = ConstructionOrder::Pivot(k);
        let opts = ConstructOptions { partition: Some(p.clone()), order, trim: true, margin };
        let c = construct_phi(model, phi0, q, &opts)?;
        out.push(ConstructionComparison { partition: p.clone(), order, value: c.value });
    }
    let values: Vec<Vec<C64>> = out.iter().map(|c| c.value.clone()).collect();
    Ok(DeviationReport { max_deviation: max_pairwise(&values), constructions: out })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::dirac::{dirac1d_evolve, gaussian_pulse, nparticle_dirac_evolve};

    const H: f64 = 0.125;

    fn model(pair: bool) -> DeltaModel {
        let grid = Grid::line(48, H).unwrap();
        let w = pair.then(|| PairPotential::gaussian(3.0, 0.4));
        DeltaModel::new(grid, 2, 1.0, w, 8.0 * H).unwrap()
    }

    fn phi0(m: &DeltaModel) -> GridFunction {
        let g = m.lattice().grid();
        let a = gaussian_pulse(g, 2.5, 0.25, 3.0, [C64::new(0.7, 0.1), C64::new(0.2, -0.4)]).unwrap();
        let b = gaussian_pulse(g, 3.2, 0.25, 3.0, [C64::new(0.1, 0.5), C64::new(0.6, 0.0)]).unwrap();
        GridFunction::product(&[a, b]).unwrap()
    }

    #[test]
    fn plans_reach_their_targets() {
        let fam = vec![(vec![0, 2], 3), (vec![1], 7), (vec![3], -2)];
        for order in [ConstructionOrder::Forward, ConstructionOrder::Backward, ConstructionOrder::Pivot(1)] {
            let p = ConstructionPlan::new(&fam, order).unwrap();
            assert_eq!(p.net_steps(4), vec![3, 7, 3, -2]);
        }
        let fwd = ConstructionPlan::new(&fam, ConstructionOrder::Forward).unwrap();
        assert_eq!(fwd.legs[0], Leg { active: vec![0, 1, 2, 3], steps: -2 });
        assert_eq!(fwd.legs[1], Leg { active: vec![0, 1, 2], steps: 5 });
        assert_eq!(fwd.legs[2], Leg { active: vec![1], steps: 4 });
    }

    #[test]
    fn zero_times_return_initial_data_exactly() {
        let m = model(true);
        let psi = phi0(&m);
        let q = SpacetimeConfig::line(&[(0.0, 2.5), (0.0, 3.0)]).unwrap();
        let c = construct_phi(&m, &psi, &q, &ConstructOptions::default()).unwrap();
        assert!(c.plan.legs.is_empty());
        assert_eq!(c.value, psi.spinor_at(&[20, 24]));
    }

    #[test]
    fn equal_times_match_single_time_solver_bitwise() {
        let m = model(true);
        let psi = phi0(&m);
        let q = SpacetimeConfig::line(&[(0.5, 2.25), (0.5, 3.5)]).unwrap();
        let c = construct_phi(&m, &psi, &q, &ConstructOptions::default()).unwrap();
        let direct = nparticle_dirac_evolve(&psi, &[0, 1], 0.5, 1.0, m.lattice().pair().cloned()).unwrap();
        assert_eq!(c.value, direct.spinor_at(&[18, 28]));
    }

    #[test]
    fn trimmed_and_full_runs_agree_bitwise() {
        let m = model(true);
        let psi = phi0(&m);
        let q = SpacetimeConfig::line(&[(0.25, 1.5), (0.75, 4.0)]).unwrap();
        let trimmed = construct_phi(&m, &psi, &q, &ConstructOptions::default()).unwrap();
        let full = construct_phi(&m, &psi, &q, &ConstructOptions { trim: false, ..Default::default() }).unwrap();
        let slice = construct_slice(&m, &psi, &q, &ConstructOptions::default()).unwrap();
        assert_eq!(trimmed.value, full.value);
        assert_eq!(slice.data.spinor_at(&[12, 32]), full.value);
        assert!(full.trace.iter().all(|r| r.norm_drift.unwrap() < 1e-12));
    }

    #[test]
    fn forward_and_backward_orders_agree() {
        let m = model(true);
        let psi = phi0(&m);
        let q = SpacetimeConfig::line(&[(0.25, 1.5), (0.75, 4.0)]).unwrap();
        let r = order_independence(&m, &psi, &q, None, 0.0).unwrap();
        assert_eq!(r.constructions.len(), 2);
        assert!(r.max_deviation < 1e-12, "{}", r.max_deviation);
        assert!(r.constructions[0].value.iter().any(|z| z.norm() > 1e-3));
    }

    #[test]
    fn free_model_factorizes() {
        let m = model(false);
        let g = m.lattice().grid().clone();
        let a = gaussian_pulse(&g, 2.5, 0.25, 3.0, [C64::new(0.7, 0.1), C64::new(0.2, -0.4)]).unwrap();
        let b = gaussian_pulse(&g, 3.2, 0.25, 3.0, [C64::new(0.1, 0.5), C64::new(0.6, 0.0)]).unwrap();
        let psi = GridFunction::product(&[a.clone(), b.clone()]).unwrap();
        let q = SpacetimeConfig::line(&[(0.25, 2.25), (-0.25, 3.875)]).unwrap();
        let c = construct_phi(&m, &psi, &q, &ConstructOptions::default()).unwrap();
        let fa = dirac1d_evolve(&a, 1.0, None, 0.25).unwrap().spinor_at(&[18]);
        let fb = dirac1d_evolve(&b, 1.0, None, -0.25).unwrap().spinor_at(&[31]);
        let expect: Vec<C64> = fa.iter().flat_map(|x| fb.iter().map(move |y| x * y)).collect();
        assert!(spinor_deviation(&c.value, &expect) < 1e-14);
    }

    #[test]
    fn target_outside_s_delta_is_rejected() {
        let m = model(true);
        let psi = phi0(&m);
        let q = SpacetimeConfig::line(&[(0.0, 2.0), (0.5, 3.0)]).unwrap();
        assert!(matches!(construct_phi(&m, &psi, &q, &ConstructOptions::default()), Err(Error::InvalidInput(_))));
    }
}
