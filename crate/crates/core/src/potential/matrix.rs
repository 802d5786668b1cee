//! Consistency relations for matrix-valued potentials.
//!
//! Each `V_j` is expanded in a real basis of Hermitian `k_j × k_j` matrices
//! `{A_{j,0} = I, A_{j,1}, …, A_{j,d}, completion}` (where `A_{j,1..d}` are the
//! matrices multiplying the spatial derivatives in the free Hamiltonian), so
//! that `V_j = Σ_α A_{j,α} d_{j,α}` with real coefficients. Consistency then
//! requires, for `i ≠ j`,
//!
//! ```text
//! ∂d_{j,α}/∂x_{i,μ} = 0                          (α > d)
//! ∂d_{j,μ}/∂x_{i,ν} − ∂d_{i,ν}/∂x_{j,μ} = 0       (μ, ν ≤ d)
//! ```
//!
//! with `x_{i,0} = t_i`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::field::{check_config, MatrixPotentialField};
use crate::error::{Error, Result};
use crate::geometry::Event;
use crate::operator::{Operator, C64};

pub const MAX_BASIS_CONDITION: f64 = 1e8;

/// Per-particle Hermitian basis, possibly depending on the particle's own
/// event.
pub trait MatrixBasis: Send + Sync {
    fn basis(&self, i: usize, x_i: &Event) -> Result<Vec<Operator>>;
}

/// Position-independent bases.
#[derive(Clone, Debug)]
pub struct ConstantBasis {
    pub per_particle: Vec<Vec<Operator>>,
}

impl MatrixBasis for ConstantBasis {
    fn basis(&self, i: usize, _x_i: &Event) -> Result<Vec<Operator>> {
        self.per_particle
            .get(i)
            .cloned()
            .ok_or_else(|| Error::invalid(format!("no basis supplied for particle {}", i + 1)))
    }
}

fn hs(a: &Operator, b: &Operator) -> f64 {
    // Re tr(A† B)
    a.matrix().iter().zip(b.matrix().iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

/// Extends `prefix` to a real basis of all Hermitian `k × k` matrices, adding
/// elementary Hermitian matrices in a fixed order whenever they enlarge the
/// span.
pub fn complete_hermitian_basis(prefix: Vec<Operator>) -> Result<Vec<Operator>> {
    let k = prefix.first().map(Operator::dim).ok_or_else(|| Error::invalid("empty basis prefix"))?;
    let zero = C64::new(0.0, 0.0);
    let mut candidates = Vec::new();
    for a in 0..k {
        candidates.push(Operator::from_fn(k, |r, c| if r == a && c == a { C64::new(1.0, 0.0) } else { zero }));
    }
    for a in 0..k {
        for b in (a + 1)..k {
            candidates.push(Operator::from_fn(k, |r, c| {
                if (r, c) == (a, b) || (r, c) == (b, a) {
                    C64::new(1.0, 0.0)
                } else {
                    zero
                }
            }));
            candidates.push(Operator::from_fn(k, |r, c| {
                if (r, c) == (a, b) {
                    C64::new(0.0, -1.0)
                } else if (r, c) == (b, a) {
                    C64::new(0.0, 1.0)
                } else {
                    zero
                }
            }));
        }
    }
    let mut basis = Vec::new();
    let mut ortho: Vec<Operator> = Vec::new();
    let mut push = |m: Operator, basis: &mut Vec<Operator>| -> bool {
        let mut r = m.clone();
        for o in &ortho {
            r = &r - &o.scale_real(hs(o, &r));
        }
        let norm = hs(&r, &r).sqrt();
        if norm > 1e-8 * hs(&m, &m).sqrt().max(1e-300) {
            ortho.push(r.scale_real(1.0 / norm));
            basis.push(m);
            true
        } else {
            false
        }
    };
    for (idx, m) in prefix.into_iter().enumerate() {
        if m.dim() != k || !m.is_hermitian(1e-12) {
            return Err(Error::invalid(format!("basis prefix element {idx} is not a Hermitian {k}x{k} matrix")));
        }
        if !push(m, &mut basis) {
            return Err(Error::invalid(format!("basis prefix element {idx} is linearly dependent on the previous ones")));
        }
    }
    for c in candidates {
        if basis.len() == k * k {
            break;
        }
        push(c, &mut basis);
    }
    Ok(basis)
}

/// Real coefficients of `v` in `basis` by Hilbert–Schmidt least squares.
pub fn expand(v: &Operator, basis: &[Operator]) -> Result<(Vec<f64>, f64)> {
    let n = basis.len();
    let gram = DMatrix::from_fn(n, n, |a, b| hs(&basis[a], &basis[b]));
    let rhs = DVector::from_fn(n, |a, _| hs(&basis[a], v));
    let eig = gram.clone().symmetric_eigen();
    let max = eig.eigenvalues.iter().cloned().fold(f64::MIN, f64::max);
    let min = eig.eigenvalues.iter().cloned().fold(f64::MAX, f64::min);
    let cond = if min > 0.0 { max / min } else { f64::INFINITY };
    let sol = gram
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::invalid("basis Gram matrix is singular"))?;
    Ok((sol.iter().copied().collect(), cond))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MatrixResidualRow {
    pub sample_id: usize,
    pub i: usize,
    pub j: usize,
    /// `max_{μ, α>d} |∂d_{j,α}/∂x_{i,μ}|`
    pub completion: f64,
    /// `max_{μ,ν≤d} |∂d_{j,μ}/∂x_{i,ν} − ∂d_{i,ν}/∂x_{j,μ}|`
    pub mixed: f64,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct MatrixResidualTable {
    pub rows: Vec<MatrixResidualRow>,
    pub max_completion: f64,
    pub max_mixed: f64,
}

struct Expander<'a> {
    v: &'a dyn MatrixPotentialField,
    basis: &'a dyn MatrixBasis,
    d: usize,
}

impl Expander<'_> {
    fn coefficients(&self, j: usize, q: &[Event]) -> Result<Vec<f64>> {
        let k = self.v.spin_dim(j);
        let b = self.basis.basis(j, &q[j])?;
        if b.len() != k * k || b.iter().any(|m| m.dim() != k) {
            return Err(Error::invalid(format!(
                "basis for particle {} must hold {} Hermitian {k}x{k} matrices",
                j + 1,
                k * k
            )));
        }
        if k * k < self.d + 1 {
            return Err(Error::invalid(format!("spin dimension {k} too small for {} basis directions", self.d + 1)));
        }
        let (coef, cond) = expand(&self.v.eval(j, q)?, &b)?;
        if !(cond <= MAX_BASIS_CONDITION) {
            return Err(Error::invalid(format!(
                "basis for particle {} at (t={}, x={:?}) is ill-conditioned (condition number {cond:.3e})",
                j + 1,
                q[j].t,
                q[j].x
            )));
        }
        Ok(coef)
    }

    /// `∂d_{j,·}/∂x_{i,μ}` for all coefficients at once.
    fn partials(&self, j: usize, q: &[Event], i: usize, mu: usize, h: f64) -> Result<Vec<f64>> {
        let mut p = q.to_vec();
        *p[i].coord_mut(mu) += h;
        let a = self.coefficients(j, &p)?;
        *p[i].coord_mut(mu) -= 2.0 * h;
        let b = self.coefficients(j, &p)?;
        Ok(a.iter().zip(&b).map(|(x, y)| (x - y) / (2.0 * h)).collect())
    }
}

pub fn matrix_relation_residuals(
    v: &dyn MatrixPotentialField,
    basis: &dyn MatrixBasis,
    samples: &[Vec<Event>],
    fd_step: f64,
) -> Result<MatrixResidualTable> {
    if !(fd_step > 0.0 && fd_step.is_finite()) {
        return Err(Error::invalid(format!("fd_step must be positive, got {fd_step}")));
    }
    let n = v.n_particles();
    let d = v.space_dim();
    let ex = Expander { v, basis, d };
    let mut table = MatrixResidualTable::default();
    for (id, q) in samples.iter().enumerate() {
        check_config(n, d, q)?;
        // grads[j][i][mu] = ∂d_{j,·}/∂x_{i,μ}
        let mut grads = vec![vec![Vec::new(); n]; n];
        for j in 0..n {
            for i in 0..n {
                if i != j {
                    grads[j][i] = (0..=d).map(|mu| ex.partials(j, q, i, mu, fd_step)).collect::<Result<Vec<_>>>()?;
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let mut completion: f64 = 0.0;
                for per_mu in &grads[j][i] {
                    for &x in &per_mu[d + 1..] {
                        completion = completion.max(x.abs());
                    }
                }
                let mut mixed: f64 = 0.0;
                for mu in 0..=d {
                    for nu in 0..=d {
                        // ∂d_{j,μ}/∂x_{i,ν} − ∂d_{i,ν}/∂x_{j,μ}
                        mixed = mixed.max((grads[j][i][nu][mu] - grads[i][j][mu][nu]).abs());
                    }
                }
                table.max_completion = table.max_completion.max(completion);
                table.max_mixed = table.max_mixed.max(mixed);
                table.rows.push(MatrixResidualRow { sample_id: id, i, j, completion, mixed });
            }
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::pauli;
    use crate::potential::field::FnMatrixPotential;

    /// Dirac `α_a = σ_x ⊗ σ_a`.
    fn alpha(a: usize) -> Operator {
        let s = [pauli::x(), pauli::y(), pauli::z()];
        pauli::x().kron(&s[a])
    }

    fn dirac_basis() -> Vec<Operator> {
        complete_hermitian_basis(vec![Operator::identity(4), alpha(0), alpha(1), alpha(2)]).unwrap()
    }

    fn ev(t: f64, x: &[f64]) -> Event {
        Event::new(t, x.to_vec())
    }

    #[test]
    fn completion_spans_hermitian_space() {
        let b = dirac_basis();
        assert_eq!(b.len(), 16);
        let (coef, cond) = expand(&alpha(1), &b).unwrap();
        assert!(cond < 1e3);
        assert!((coef[2] - 1.0).abs() < 1e-12);
        assert!(coef.iter().enumerate().all(|(a, c)| a == 2 || c.abs() < 1e-12));
    }

    #[test]
    fn dependent_prefix_rejected() {
        assert!(complete_hermitian_basis(vec![pauli::x(), pauli::x().scale_real(2.0)]).is_err());
    }

    #[test]
    fn constant_coefficients_have_zero_residuals() {
        let v = FnMatrixPotential::new(vec![4, 4], 3, |j, _| {
            &alpha(j).scale_real(0.3) + &Operator::identity(4).scale_real(1.5)
        });
        let basis = ConstantBasis { per_particle: vec![dirac_basis(), dirac_basis()] };
        let q = vec![ev(0.0, &[1.0, 0.2, 0.0]), ev(0.5, &[0.0, 0.0, -1.0])];
        let t = matrix_relation_residuals(&v, &basis, &[q], 1e-4).unwrap();
        assert!(t.max_completion < 1e-9 && t.max_mixed < 1e-9);
    }

    #[test]
    fn alpha_times_distance_residual_matches_analytic() {
        // V_1 = α_3 ‖x_1 − x_2‖, V_2 = 0: d_{1,3} = r, so
        // ∂d_{1,3}/∂x_{2,b} = −(x_1 − x_2)_b / r, here (0,0,1) → magnitude 1.
        let v = FnMatrixPotential::new(vec![4, 4], 3, |j, q: &[Event]| {
            if j == 0 {
                alpha(2).scale_real(q[0].spatial_distance(&q[1]))
            } else {
                Operator::zeros(4)
            }
        });
        let basis = ConstantBasis { per_particle: vec![dirac_basis(), dirac_basis()] };
        let q = vec![ev(0.0, &[0.0, 0.0, 1.0]), ev(0.0, &[0.0, 0.0, 0.0])];
        let t = matrix_relation_residuals(&v, &basis, &[q], 1e-5).unwrap();
        assert!((t.max_mixed - 1.0).abs() < 1e-8, "{}", t.max_mixed);
        assert!(t.max_completion < 1e-9);
    }

    #[test]
    fn ill_conditioned_basis_rejected() {
        let mut b = dirac_basis();
        b[5] = &b[4] + &b[5].scale_real(1e-6);
        let v = FnMatrixPotential::new(vec![4, 4], 3, |_, _| Operator::identity(4));
        let basis = ConstantBasis { per_particle: vec![b.clone(), b] };
        let q = vec![ev(0.0, &[0.0, 0.0, 1.0]), ev(0.0, &[0.0, 0.0, 0.0])];
        let err = matrix_relation_residuals(&v, &basis, &[q], 1e-5).unwrap_err();
        assert!(matches!(err, Error::InvalidInput(ref m) if m.contains("particle 1")));
    }
}
