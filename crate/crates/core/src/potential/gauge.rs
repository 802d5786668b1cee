//! Constructive gauge decomposition of consistent scalar potentials.
//!
//! When the relations hold, `V_j = Ṽ_j(t_j, 𝐱_j) + W_j(t⃗)` with
//! `Ṽ_j(t_j, 𝐱_j) = V_j(𝐱_j; t_j, all other times 0)` and `W_j = ∂θ/∂t_j`, so
//! the potentials are gauge-equivalent to non-interacting ones. This module
//! recovers `Ṽ_j` and `θ` numerically on a box of time tuples.

use serde::Serialize;

use super::field::PotentialField;
use super::residuals::relation_residuals;
use crate::error::{Error, Result};
use crate::geometry::Event;

#[derive(Clone, Debug)]
pub struct GaugeOptions {
    /// Bound on the pre-check relation residuals.
    pub tol: f64,
    pub fd_step: f64,
    /// Spatial configurations (one position per particle) at which the
    /// potentials are probed.
    pub probes: Vec<Vec<Vec<f64>>>,
}

/// `θ` on a regular grid over `[0, T_1] × … × [0, T_N]`, normalized by
/// `θ(0) = 0`.
#[derive(Clone, Debug, Serialize)]
pub struct GaugeDecomposition {
    pub axes: Vec<Vec<f64>>,
    /// Row-major over `axes`, last axis fastest.
    pub theta: Vec<f64>,
    /// `max |∂θ/∂t_j − W_j|` over the grid, by grid differences.
    pub residual: f64,
    /// Largest variation of `W_j` between probes.
    pub w_spread: f64,
    /// Largest relation residual seen in the pre-check.
    pub precheck: f64,
    /// Positions used for the non-argument particles when evaluating `Ṽ_j`.
    pub reference: Vec<Vec<f64>>,
}

impl GaugeDecomposition {
    fn flat(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.axes).fold(0, |acc, (&i, a)| acc * a.len() + i)
    }

    pub fn theta_at_node(&self, idx: &[usize]) -> f64 {
        self.theta[self.flat(idx)]
    }

    /// Multilinear interpolation of `θ` inside the box.
    pub fn theta_at(&self, t: &[f64]) -> Result<f64> {
        let n = self.axes.len();
        if t.len() != n {
            return Err(Error::shape("time tuple length does not match the box"));
        }
        let mut base = Vec::with_capacity(n);
        let mut frac = Vec::with_capacity(n);
        for (a, axis) in self.axes.iter().enumerate() {
            let (lo, hi) = (axis[0], axis[axis.len() - 1]);
            if !(t[a] >= lo && t[a] <= hi) {
                return Err(Error::invalid(format!("t_{} = {} outside the box", a + 1, t[a])));
            }
            let h = axis[1] - axis[0];
            let i = (((t[a] - lo) / h).floor() as usize).min(axis.len() - 2);
            base.push(i);
            frac.push((t[a] - axis[i]) / h);
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << n) {
            let mut w = 1.0;
            let mut idx = base.clone();
            for a in 0..n {
                if (corner >> a) & 1 == 1 {
                    w *= frac[a];
                    idx[a] += 1;
                } else {
                    w *= 1.0 - frac[a];
                }
            }
            if w != 0.0 {
                acc += w * self.theta_at_node(&idx);
            }
        }
        Ok(acc)
    }

    /// `Ṽ_j(t_j, 𝐱_j)`: `V_j` with every other time set to zero and the other
    /// particles at their reference positions.
    pub fn v_tilde(&self, v: &dyn PotentialField, j: usize, t_j: f64, x_j: &[f64]) -> Result<f64> {
        let q = tilde_config(&self.reference, j, t_j, x_j);
        v.eval(j, &q)
    }
}

fn tilde_config(positions: &[Vec<f64>], j: usize, t_j: f64, x_j: &[f64]) -> Vec<Event> {
    positions
        .iter()
        .enumerate()
        .map(|(k, x)| if k == j { Event::new(t_j, x_j.to_vec()) } else { Event::new(0.0, x.clone()) })
        .collect()
}

fn config(times: &[f64], positions: &[Vec<f64>]) -> Vec<Event> {
    times.iter().zip(positions).map(|(&t, x)| Event::new(t, x.clone())).collect()
}

/// `W_j(t⃗)` at one probe.
fn w(v: &dyn PotentialField, j: usize, times: &[f64], probe: &[Vec<f64>]) -> Result<f64> {
    let full = v.eval(j, &config(times, probe))?;
    let tilde = v.eval(j, &tilde_config(probe, j, times[j], &probe[j]))?;
    Ok(full - tilde)
}

fn unflatten(mut flat: usize, dims: &[usize]) -> Vec<usize> {
    let mut idx = vec![0; dims.len()];
    for a in (0..dims.len()).rev() {
        idx[a] = flat % dims[a];
        flat /= dims[a];
    }
    idx
}

/// Recovers `θ` on `[0, upper_1] × … × [0, upper_N]` with `nodes` grid points
/// per axis.
///
/// The relation residuals are checked first on the probes at the corners and
/// centre of the box; the potential is refused as inconsistent if they exceed
/// `opts.tol`, or if `W_j` varies between probes by more than `10·tol`.
pub fn gauge_decompose(
    v: &dyn PotentialField,
    upper: &[f64],
    nodes: usize,
    opts: &GaugeOptions,
) -> Result<GaugeDecomposition> {
    let n = v.n_particles();
    let d = v.space_dim();
    if upper.len() != n {
        return Err(Error::shape(format!("box has {} axes, potential has {n} particles", upper.len())));
    }
    if upper.iter().any(|&u| !(u > 0.0 && u.is_finite())) {
        return Err(Error::invalid("box extents must be positive"));
    }
    if nodes < 2 {
        return Err(Error::invalid("need at least two grid nodes per axis"));
    }
    if opts.probes.is_empty() {
        return Err(Error::invalid("need at least one probe configuration"));
    }
    for p in &opts.probes {
        if p.len() != n || p.iter().any(|x| x.len() != d) {
            return Err(Error::shape(format!("probes need {n} positions of dimension {d}")));
        }
    }

    // Pre-check on corners and centre of the box.
    let mut samples = Vec::new();
    let levels = [0.0, 0.5, 1.0];
    for code in 0..3usize.pow(n as u32) {
        let times: Vec<f64> = unflatten(code, &vec![3; n]).iter().zip(upper).map(|(&l, &u)| levels[l] * u).collect();
        for probe in &opts.probes {
            samples.push(config(&times, probe));
        }
    }
    let table = relation_residuals(v, &samples, opts.fd_step)?;
    if !table.flagged.is_empty() {
        return Err(Error::InconsistentInput(format!(
            "potential is singular at {} pre-check samples",
            table.flagged.len()
        )));
    }
    if table.max() > opts.tol {
        return Err(Error::InconsistentInput(format!(
            "relation residuals r1 = {:.3e}, r2 = {:.3e} exceed tolerance {:.3e}; the potential couples the particles",
            table.max_r1, table.max_r2, opts.tol
        )));
    }

    let axes: Vec<Vec<f64>> =
        upper.iter().map(|&u| (0..nodes).map(|i| u * i as f64 / (nodes - 1) as f64).collect()).collect();
    let dims = vec![nodes; n];
    let total = nodes.pow(n as u32);
    let h: Vec<f64> = upper.iter().map(|&u| u / (nodes - 1) as f64).collect();

    // W_j on the grid, probe 0; spread measured against the other probes.
    let mut wgrid = vec![vec![0.0; total]; n];
    let mut spread: f64 = 0.0;
    for flat in 0..total {
        let idx = unflatten(flat, &dims);
        let times: Vec<f64> = idx.iter().zip(&axes).map(|(&i, a)| a[i]).collect();
        for j in 0..n {
            let w0 = w(v, j, &times, &opts.probes[0])?;
            if !w0.is_finite() {
                return Err(Error::Evaluation(format!("W_{} not finite at {times:?}", j + 1)));
            }
            for probe in &opts.probes[1..] {
                spread = spread.max((w(v, j, &times, probe)? - w0).abs());
            }
            wgrid[j][flat] = w0;
        }
    }
    if spread > 10.0 * opts.tol {
        return Err(Error::InconsistentInput(format!(
            "W_j depends on positions (spread {spread:.3e} > {:.3e})",
            10.0 * opts.tol
        )));
    }

    // Axis-ordered staircase: θ(t_1..t_j, 0..) = θ(t_1..t_{j−1}, 0..) + ∫_0^{t_j} W_j.
    let mut theta = vec![0.0; total];
    let stride: Vec<usize> = (0..n).map(|a| nodes.pow((n - 1 - a) as u32)).collect();
    for j in 0..n {
        // Nodes whose coordinates after j are all zero, in increasing order of
        // their j-th index; each line along axis j starts at index 0.
        for flat in 0..total {
            let idx = unflatten(flat, &dims);
            if idx[j + 1..].iter().any(|&i| i != 0) || idx[j] == 0 {
                continue;
            }
            let prev = flat - stride[j];
            theta[flat] = theta[prev] + 0.5 * h[j] * (wgrid[j][prev] + wgrid[j][flat]);
        }
    }
    let mut residual: f64 = 0.0;
    for flat in 0..total {
        let idx = unflatten(flat, &dims);
        for j in 0..n {
            let (lo, hi) = (idx[j].saturating_sub(1), (idx[j] + 1).min(nodes - 1));
            let dtheta = (theta[flat + (hi - idx[j]) * stride[j]] - theta[flat - (idx[j] - lo) * stride[j]])
                / ((hi - lo) as f64 * h[j]);
            let wmid = if hi - lo == 2 {
                wgrid[j][flat]
            } else {
                0.5 * (wgrid[j][flat + (hi - idx[j]) * stride[j]] + wgrid[j][flat - (idx[j] - lo) * stride[j]])
            };
            residual = residual.max((dtheta - wmid).abs());
        }
    }

    Ok(GaugeDecomposition {
        axes,
        theta,
        residual,
        w_spread: spread,
        precheck: table.max(),
        reference: opts.probes[0].clone(),
    })
}
