//! Surface-ordered exponentials and the non-Abelian Stokes relation.
//!
//! For a patch `f: [0,1]² → ℝᴺ` the holonomy around its boundary (bottom edge
//! in `s`, right edge up, top edge back, left edge down, all seen from
//! `f(0,0)`) equals the ordered product over surface cells of
//!
//! ```text
//! exp(i Σ_{i,j} 𝓕_ij ∂_s f_i ∂_t f_j ds dt),   𝓕 = (g h)⁻¹ F (g h),
//! ```
//!
//! where `h` transports along the bottom edge from `f(0,0)` to `f(s,0)` and
//! `g` transports up the line `f(s,·)` to `f(s,t)`. Cells with larger `s`
//! stand further right; within a column, cells with smaller `t` stand further
//! right. The discretization below is first order in the mesh spacing.

use std::fmt;
use std::sync::Arc;

use super::curvature::consistency_residual;
use super::field::HamiltonianField;
use super::path::TimePath;
use super::transport::{path_ordered_exp, segment_propagator};
use crate::error::{Error, Result};
use crate::operator::{matrix_exp, Operator, C64};

type PatchFn = dyn Fn(f64, f64) -> Vec<f64> + Send + Sync;

/// Parametrized surface `f(s, t)` with a `rows × cols` mesh (`rows` cells in
/// `t`, `cols` cells in `s`).
#[derive(Clone)]
pub struct SurfacePatch {
    n_times: usize,
    f: Arc<PatchFn>,
    rows: usize,
    cols: usize,
}

impl fmt::Debug for SurfacePatch {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        fm.debug_struct("SurfacePatch")
            .field("n_times", &self.n_times)
            .field("rows", &self.rows)
            .field("cols", &self.cols)
            .finish_non_exhaustive()
    }
}

impl SurfacePatch {
    pub fn from_fn<F>(n_times: usize, f: F, rows: usize, cols: usize) -> Result<Self>
    where
        F: Fn(f64, f64) -> Vec<f64> + Send + Sync + 'static,
    {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid("surface mesh needs at least one cell per direction"));
        }
        for (s, t) in [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0), (0.5, 0.5)] {
            let p = f(s, t);
            if p.len() != n_times {
                return Err(Error::shape(format!("patch maps into {} dimensions, expected {n_times}", p.len())));
            }
            if p.iter().any(|x| !x.is_finite()) {
                return Err(Error::invalid(format!("patch is not finite at ({s}, {t})")));
            }
        }
        Ok(SurfacePatch { n_times, f: Arc::new(f), rows, cols })
    }

    /// Axiparallel rectangle with lower-left `corner`, side `a` along axis
    /// `j` (parameter `s`) and side `b` along axis `k` (parameter `t`).
    pub fn rectangle(corner: &[f64], j: usize, k: usize, a: f64, b: f64, mesh: usize) -> Result<Self> {
        let n = corner.len();
        if j == k || j >= n || k >= n {
            return Err(Error::invalid(format!("rectangle axes ({j}, {k}) invalid for {n} times")));
        }
        let c = corner.to_vec();
        Self::from_fn(
            n,
            move |s, t| {
                let mut p = c.clone();
                p[j] += s * a;
                p[k] += t * b;
                p
            },
            mesh,
            mesh,
        )
    }

    /// Piecewise-bilinear patch through a `(nr + 1) × (nc + 1)` vertex grid,
    /// `vertices[r][c]` sitting at `t = r/nr`, `s = c/nc`.
    pub fn bilinear(vertices: Vec<Vec<Vec<f64>>>, rows: usize, cols: usize) -> Result<Self> {
        let nr = vertices.len().checked_sub(1).filter(|&x| x > 0);
        let nc = vertices.first().and_then(|r| r.len().checked_sub(1)).filter(|&x| x > 0);
        let (nr, nc) = match (nr, nc) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(Error::invalid("bilinear patch needs at least a 2x2 vertex grid")),
        };
        if vertices.iter().any(|r| r.len() != nc + 1) {
            return Err(Error::shape("bilinear patch rows must have equal length"));
        }
        let n = vertices[0][0].len();
        if vertices.iter().flatten().any(|v| v.len() != n) {
            return Err(Error::shape("bilinear patch vertices must share one dimension"));
        }
        Self::from_fn(
            n,
            move |s, t| {
                let x = (s * nc as f64).clamp(0.0, nc as f64);
                let y = (t * nr as f64).clamp(0.0, nr as f64);
                let c = (x.floor() as usize).min(nc - 1);
                let r = (y.floor() as usize).min(nr - 1);
                let (u, v) = (x - c as f64, y - r as f64);
                (0..n)
                    .map(|i| {
                        (1.0 - u) * (1.0 - v) * vertices[r][c][i]
                            + u * (1.0 - v) * vertices[r][c + 1][i]
                            + (1.0 - u) * v * vertices[r + 1][c][i]
                            + u * v * vertices[r + 1][c + 1][i]
                    })
                    .collect()
            },
            rows,
            cols,
        )
    }

    pub fn with_mesh(&self, rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid("surface mesh needs at least one cell per direction"));
        }
        Ok(SurfacePatch { rows, cols, ..self.clone() })
    }

    pub fn n_times(&self) -> usize {
        self.n_times
    }

    pub fn mesh(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn eval(&self, s: f64, t: f64) -> Vec<f64> {
        (self.f)(s, t)
    }

    /// Counterclockwise boundary as a polyline with `samples_per_edge` chords
    /// per edge. A boundary that never moves yields a stationary path.
    pub fn boundary(&self, samples_per_edge: usize) -> Result<TimePath> {
        if samples_per_edge == 0 {
            return Err(Error::invalid("samples_per_edge must be positive"));
        }
        let m = samples_per_edge;
        let grid = |i: usize| i as f64 / m as f64;
        let mut pts: Vec<Vec<f64>> = Vec::with_capacity(4 * m + 1);
        pts.extend((0..m).map(|i| self.eval(grid(i), 0.0)));
        pts.extend((0..m).map(|i| self.eval(1.0, grid(i))));
        pts.extend((0..m).map(|i| self.eval(1.0 - grid(i), 1.0)));
        pts.extend((0..m).map(|i| self.eval(0.0, 1.0 - grid(i))));
        pts.push(self.eval(0.0, 0.0));
        let first = pts[0].clone();
        let closure: f64 = pts.last().unwrap().iter().zip(&first).map(|(a, b)| (a - b).abs()).sum();
        if closure != 0.0 {
            return Err(Error::Evaluation(format!("patch boundary does not close (gap {closure:.3e})")));
        }
        pts.dedup();
        if pts.len() < 2 {
            return Ok(TimePath::stationary(first));
        }
        TimePath::uniform(pts, 1)
    }
}

/// Holonomy around the patch boundary, `samples_per_edge` midpoint steps per
/// edge.
pub fn boundary_holonomy(field: &dyn HamiltonianField, patch: &SurfacePatch, samples_per_edge: usize) -> Result<Operator> {
    if patch.n_times() != field.n_times() {
        return Err(Error::shape("patch and field live in different time dimensions"));
    }
    path_ordered_exp(field, &patch.boundary(samples_per_edge)?)
}

fn inverse_transport(field: &dyn HamiltonianField, w: &Operator) -> Result<Operator> {
    if field.hermitian() {
        Ok(w.adjoint())
    } else {
        w.inverse().ok_or_else(|| Error::Evaluation("parallel transport is singular".into()))
    }
}

/// Surface-ordered exponential over the patch mesh.
///
/// Per cell, the curvature is taken at the cell centre (finite differences of
/// step `fd_step`), conjugated back to `f(0,0)` by the bottom-edge and
/// vertical transports, and contracted with the chord vectors of the cell.
pub fn surface_ordered_exp(field: &dyn HamiltonianField, patch: &SurfacePatch, fd_step: f64) -> Result<Operator> {
    if patch.n_times() != field.n_times() {
        return Err(Error::shape("patch and field live in different time dimensions"));
    }
    let dim = field.dim();
    let n = field.n_times();
    let (rows, cols) = patch.mesh();
    let ds = 1.0 / cols as f64;
    let dt = 1.0 / rows as f64;
    let mut product = Operator::identity(dim);
    // Transport along the bottom edge up to the left side of the current column.
    let mut h_edge = Operator::identity(dim);

    for a in 0..cols {
        let s_lo = a as f64 * ds;
        let s_mid = s_lo + 0.5 * ds;
        let s_hi = s_lo + ds;
        let h_mid = &segment_propagator(field, &patch.eval(s_lo, 0.0), &patch.eval(s_mid, 0.0), 1)? * &h_edge;
        h_edge = &segment_propagator(field, &patch.eval(s_mid, 0.0), &patch.eval(s_hi, 0.0), 1)? * &h_mid;

        // Cell factors of this column, bottom to top; they enter the product
        // top to bottom.
        let mut column = Vec::with_capacity(rows);
        let mut g_edge = Operator::identity(dim);
        for b in 0..rows {
            let t_lo = b as f64 * dt;
            let t_mid = t_lo + 0.5 * dt;
            let t_hi = t_lo + dt;
            let centre = patch.eval(s_mid, t_mid);
            let g_mid = &segment_propagator(field, &patch.eval(s_mid, t_lo), &centre, 1)? * &g_edge;
            g_edge = &segment_propagator(field, &centre, &patch.eval(s_mid, t_hi), 1)? * &g_mid;

            let chord_s: Vec<f64> = patch
                .eval(s_hi, t_mid)
                .iter()
                .zip(patch.eval(s_lo, t_mid))
                .map(|(x, y)| x - y)
                .collect();
            let chord_t: Vec<f64> = patch
                .eval(s_mid, t_hi)
                .iter()
                .zip(patch.eval(s_mid, t_lo))
                .map(|(x, y)| x - y)
                .collect();
            let report = consistency_residual(field, &centre, fd_step)?;
            let mut form = Operator::zeros(dim);
            for i in 0..n {
                for j in (i + 1)..n {
                    let weight = chord_s[i] * chord_t[j] - chord_s[j] * chord_t[i];
                    if weight != 0.0 {
                        let f_ij = &report.pair(i, j).expect("pair present").curvature;
                        form += &f_ij.scale_real(weight);
                    }
                }
            }
            let w = &g_mid * &h_mid;
            let pulled = &(&inverse_transport(field, &w)? * &form) * &w;
            column.push(matrix_exp(&pulled, C64::new(0.0, 1.0))?);
        }
        for cell in column.iter().rev() {
            product = &product * cell;
        }
    }
    Ok(product)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::holonomy::field::ConstantField;
    use crate::holonomy::DEFAULT_FD_STEP;
    use crate::operator::pauli;

    fn spin_half_pair() -> ConstantField {
        ConstantField::new(vec![pauli::x().scale_real(0.5), pauli::z().scale_real(0.5)]).unwrap()
    }

    #[test]
    fn flat_field_gives_identity() {
        let f = ConstantField::new(vec![
            Operator::from_real_diagonal(&[1.0, 2.0]),
            Operator::from_real_diagonal(&[-0.5, 0.5]),
        ])
        .unwrap();
        let patch = SurfacePatch::rectangle(&[0.0, 0.0], 0, 1, 1.0, 1.0, 64).unwrap();
        let s = surface_ordered_exp(&f, &patch, DEFAULT_FD_STEP).unwrap();
        assert!(s.distance(&Operator::identity(2)).unwrap() < 1e-8);
    }

    #[test]
    fn degenerate_patch_gives_identity() {
        let f = spin_half_pair();
        let patch = SurfacePatch::from_fn(2, |_, _| vec![0.3, 0.3], 1, 1).unwrap();
        let s = surface_ordered_exp(&f, &patch, DEFAULT_FD_STEP).unwrap();
        assert!(s.distance(&Operator::identity(2)).unwrap() < 1e-15);
        let b = boundary_holonomy(&f, &patch, 8).unwrap();
        assert_eq!(b, Operator::identity(2));
    }

    #[test]
    fn unit_square_first_order_agreement() {
        let f = spin_half_pair();
        let mut errs = Vec::new();
        for mesh in [16, 32] {
            let patch = SurfacePatch::rectangle(&[0.0, 0.0], 0, 1, 1.0, 1.0, mesh).unwrap();
            let b = boundary_holonomy(&f, &patch, 4).unwrap();
            let s = surface_ordered_exp(&f, &patch, DEFAULT_FD_STEP).unwrap();
            errs.push(b.distance(&s).unwrap());
        }
        let ratio = errs[0] / errs[1];
        assert!(errs[1] < 2e-3, "{errs:?}");
        assert!(ratio > 1.8 && ratio < 2.5, "ratio {ratio}");
    }

    #[test]
    fn bilinear_patch_of_square_matches_rectangle() {
        let f = spin_half_pair();
        let rect = SurfacePatch::rectangle(&[0.0, 0.0], 0, 1, 1.0, 1.0, 8).unwrap();
        let bil = SurfacePatch::bilinear(
            vec![vec![vec![0.0, 0.0], vec![1.0, 0.0]], vec![vec![0.0, 1.0], vec![1.0, 1.0]]],
            8,
            8,
        )
        .unwrap();
        let a = surface_ordered_exp(&f, &rect, DEFAULT_FD_STEP).unwrap();
        let b = surface_ordered_exp(&f, &bil, DEFAULT_FD_STEP).unwrap();
        assert!(a.distance(&b).unwrap() < 1e-13);
    }
}
