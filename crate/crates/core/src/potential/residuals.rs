//! Necessary consistency relations for scalar potentials.
//!
//! With commuting free parts, consistency of `H_j = H_j^free + V_j` forces
//! `∂V_j/∂t_i = ∂V_i/∂t_j` and `∂V_j/∂𝐱_i = 0` for every `i ≠ j`. The
//! residuals measure how far a potential is from satisfying both.

use serde::Serialize;

use super::field::{check_config, PotentialField};
use crate::error::{Error, Result};
use crate::geometry::Event;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualRow {
    pub sample_id: usize,
    /// Zero-based particle indices.
    pub i: usize,
    pub j: usize,
    /// `|∂V_j/∂t_i − ∂V_i/∂t_j|`
    pub r1: f64,
    /// `max_a |∂V_j/∂x_{i,a}|`
    pub r2: f64,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct ResidualTable {
    pub rows: Vec<ResidualRow>,
    /// Samples where the potential was not finite somewhere on the stencil.
    pub flagged: Vec<usize>,
    pub max_r1: f64,
    pub max_r2: f64,
}

impl ResidualTable {
    pub fn max(&self) -> f64 {
        self.max_r1.max(self.max_r2)
    }
}

fn shifted(q: &[Event], i: usize, mu: usize, h: f64) -> Vec<Event> {
    let mut p = q.to_vec();
    *p[i].coord_mut(mu) += h;
    p
}

/// Centered difference `∂V_j/∂x_{i,μ}` (`μ = 0` is time). `None` if any
/// evaluation is non-finite.
fn partial(v: &dyn PotentialField, j: usize, q: &[Event], i: usize, mu: usize, h: f64) -> Result<Option<f64>> {
    let a = v.eval(j, &shifted(q, i, mu, h))?;
    let b = v.eval(j, &shifted(q, i, mu, -h))?;
    let d = (a - b) / (2.0 * h);
    Ok(d.is_finite().then_some(d))
}

pub fn relation_residuals(v: &dyn PotentialField, samples: &[Vec<Event>], fd_step: f64) -> Result<ResidualTable> {
    if !(fd_step > 0.0 && fd_step.is_finite()) {
        return Err(Error::invalid(format!("fd_step must be positive, got {fd_step}")));
    }
    let n = v.n_particles();
    let d = v.space_dim();
    let mut table = ResidualTable::default();
    'samples: for (id, q) in samples.iter().enumerate() {
        check_config(n, d, q)?;
        let mut rows = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let (Some(dvj_dti), Some(dvi_dtj)) = (partial(v, j, q, i, 0, fd_step)?, partial(v, i, q, j, 0, fd_step)?)
                else {
                    table.flagged.push(id);
                    continue 'samples;
                };
                let mut r2: f64 = 0.0;
                for a in 1..=d {
                    match partial(v, j, q, i, a, fd_step)? {
                        Some(x) => r2 = r2.max(x.abs()),
                        None => {
                            table.flagged.push(id);
                            continue 'samples;
                        }
                    }
                }
                rows.push(ResidualRow { sample_id: id, i, j, r1: (dvj_dti - dvi_dtj).abs(), r2 });
            }
        }
        for r in &rows {
            table.max_r1 = table.max_r1.max(r.r1);
            table.max_r2 = table.max_r2.max(r.r2);
        }
        table.rows.extend(rows);
    }
    Ok(table)
}
