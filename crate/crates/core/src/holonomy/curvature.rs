//! Consistency residual and curvature of a Hamiltonian field.
//!
//! For each pair `j < k`:
//!
//! ```text
//! R_jk = [H_j, H_k] − i ∂H_k/∂t_j + i ∂H_j/∂t_k
//! F_jk = −∂H_k/∂t_j + ∂H_j/∂t_k − i [H_j, H_k] = −i R_jk
//! ```
//!
//! The field is consistent (flat) exactly where every `R_jk` vanishes.

use serde::Serialize;

use super::field::{evaluate, HamiltonianField};
use crate::error::{Error, Result};
use crate::operator::{commutator, Operator, C64, I};

pub const DEFAULT_FD_STEP: f64 = 1e-4;

#[derive(Clone, Debug, Serialize)]
pub struct CurvaturePair {
    pub j: usize,
    pub k: usize,
    /// Consistency residual `R_jk`.
    pub residual: Operator,
    /// Curvature `F_jk = −i R_jk`.
    pub curvature: Operator,
    pub norm: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CurvatureReport {
    pub point: Vec<f64>,
    pub pairs: Vec<CurvaturePair>,
    pub max_norm: f64,
}

impl CurvatureReport {
    pub fn pair(&self, j: usize, k: usize) -> Option<&CurvaturePair> {
        self.pairs.iter().find(|p| p.j == j && p.k == k)
    }

    /// `F_jk` for any ordered pair, using antisymmetry for `j > k`.
    pub fn curvature(&self, j: usize, k: usize) -> Option<Operator> {
        if j == k {
            return self.pairs.first().map(|p| Operator::zeros(p.curvature.dim()));
        }
        if j < k {
            self.pair(j, k).map(|p| p.curvature.clone())
        } else {
            self.pair(k, j).map(|p| -&p.curvature)
        }
    }
}

/// Centered difference `∂H_k/∂t_j` at `t`.
pub fn partial_derivative(
    field: &dyn HamiltonianField,
    k: usize,
    j: usize,
    t: &[f64],
    fd_step: f64,
) -> Result<Operator> {
    let mut plus = t.to_vec();
    let mut minus = t.to_vec();
    plus[j] += fd_step;
    minus[j] -= fd_step;
    let hp = evaluate(field, k, &plus)?;
    let hm = evaluate(field, k, &minus)?;
    Ok((&hp - &hm).scale_real(0.5 / fd_step))
}

pub fn consistency_residual(
    field: &dyn HamiltonianField,
    point: &[f64],
    fd_step: f64,
) -> Result<CurvatureReport> {
    if !(fd_step > 0.0 && fd_step.is_finite()) {
        return Err(Error::invalid(format!("fd_step must be positive, got {fd_step}")));
    }
    let n = field.n_times();
    if point.len() != n {
        return Err(Error::shape(format!("point has {} coordinates, field has {n}", point.len())));
    }
    let h: Vec<Operator> = (0..n).map(|j| evaluate(field, j, point)).collect::<Result<_>>()?;
    // d[k][j] = ∂H_k/∂t_j
    let mut d = vec![vec![None; n]; n];
    for k in 0..n {
        for j in 0..n {
            if j != k {
                d[k][j] = Some(partial_derivative(field, k, j, point, fd_step)?);
            }
        }
    }
    let mut pairs = Vec::new();
    let mut max_norm: f64 = 0.0;
    for j in 0..n {
        for k in (j + 1)..n {
            let dk_dj = d[k][j].as_ref().unwrap();
            let dj_dk = d[j][k].as_ref().unwrap();
            let residual = &(&commutator(&h[j], &h[k])? - &dk_dj.scale(I)) + &dj_dk.scale(I);
            let curvature = residual.scale(C64::new(0.0, -1.0));
            let norm = residual.op_norm();
            max_norm = max_norm.max(norm);
            pairs.push(CurvaturePair { j, k, residual, curvature, norm });
        }
    }
    Ok(CurvatureReport { point: point.to_vec(), pairs, max_norm })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::holonomy::field::{AffineField, ConstantField, GradientField};
    use crate::operator::pauli;
    use crate::poly::{Monomial, Polynomial};

    #[test]
    fn commuting_constants_are_flat() {
        let f = ConstantField::new(vec![
            Operator::from_real_diagonal(&[1.0, 2.0, -1.0]),
            Operator::from_real_diagonal(&[0.5, 0.0, 3.0]),
            Operator::from_real_diagonal(&[-2.0, 1.0, 1.0]),
        ])
        .unwrap();
        let r = consistency_residual(&f, &[0.1, 0.2, 0.3], DEFAULT_FD_STEP).unwrap();
        assert_eq!(r.pairs.len(), 3);
        assert!(r.max_norm <= 1e-12);
    }

    #[test]
    fn pauli_pair_residual_norm_two() {
        let f = ConstantField::new(vec![pauli::x(), pauli::z()]).unwrap();
        let r = consistency_residual(&f, &[0.0, 0.0], DEFAULT_FD_STEP).unwrap();
        assert!((r.max_norm - 2.0).abs() < 1e-9);
        let p = r.pair(0, 1).unwrap();
        // F = −i R
        let expected = p.residual.scale(C64::new(0.0, -1.0));
        assert_eq!(p.curvature, expected);
        let flipped = r.curvature(1, 0).unwrap();
        assert!((&flipped + &p.curvature).max_abs() == 0.0);
    }

    #[test]
    fn gradient_field_is_flat_up_to_fd_error() {
        // g = sin-like polynomial with nontrivial mixed partials
        let g = Polynomial::new(vec![
            Monomial { coef: 0.8, exponents: vec![2, 1] },
            Monomial { coef: -0.3, exponents: vec![1, 3] },
            Monomial { coef: 1.1, exponents: vec![0, 2] },
        ]);
        let f = GradientField::new(2, g, &pauli::x() + &pauli::y().scale_real(0.5)).unwrap();
        for h in [1e-2, 1e-3] {
            let r = consistency_residual(&f, &[0.3, -0.7], h).unwrap();
            assert!(r.max_norm <= 10.0 * h * h, "h={h} residual {}", r.max_norm);
        }
    }

    #[test]
    fn affine_field_derivative_terms() {
        // H1 = t2 σz, H2 = 0: R = +i ∂H1/∂t2 = i σz
        let z = Operator::zeros(2);
        let f = AffineField::new(
            vec![z.clone(), z.clone()],
            vec![vec![z.clone(), pauli::z()], vec![z.clone(), z.clone()]],
        )
        .unwrap();
        let r = consistency_residual(&f, &[0.2, 0.4], 1e-3).unwrap();
        let expected = pauli::z().scale(I);
        assert!(r.pair(0, 1).unwrap().residual.distance(&expected).unwrap() < 1e-12);
    }

    #[test]
    fn rejects_bad_step() {
        let f = ConstantField::new(vec![pauli::x(), pauli::z()]).unwrap();
        assert!(matches!(consistency_residual(&f, &[0.0, 0.0], 0.0), Err(Error::InvalidInput(_))));
    }
}
