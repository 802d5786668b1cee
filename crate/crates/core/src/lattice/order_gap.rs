//! Dependence of sequential single-Hamiltonian evolutions on their order.

use serde::Serialize;

use super::grid::GridFunction;
use super::hamiltonian::{apply_hamiltonian, PartialHamiltonianSpec};
use crate::error::{Error, Result};
use crate::operator::C64;

/// Relative norm drift above which an evolution is declared unstable.
pub const MAX_NORM_DRIFT: f64 = 0.01;

/// Classical RK4 for `i∂ψ/∂t = Hψ` with the largest step not exceeding
/// `dt` that divides `t` evenly.
pub fn rk4_evolve(spec: &PartialHamiltonianSpec, psi0: &GridFunction, t: f64, dt: f64) -> Result<GridFunction> {
    if !(dt > 0.0 && dt.is_finite()) || !t.is_finite() {
        return Err(Error::invalid(format!("need a finite time and a positive step, got t = {t}, dt = {dt}")));
    }
    let steps = (t.abs() / dt).ceil() as usize;
    let mut psi = psi0.clone();
    if steps == 0 {
        return Ok(psi);
    }
    let tau = t / steps as f64;
    let n0 = psi0.norm();
    let rhs = |phi: &GridFunction| -> Result<GridFunction> {
        let mut k = apply_hamiltonian(spec, phi)?;
        k.values.iter_mut().for_each(|z| *z *= C64::new(0.0, -1.0));
        Ok(k)
    };
    let axpy = |base: &GridFunction, k: &GridFunction, c: f64| {
        let mut out = base.clone();
        for (o, x) in out.values.iter_mut().zip(&k.values) {
            *o += c * x;
        }
        out
    };
    for step in 0..steps {
        let k1 = rhs(&psi)?;
        let k2 = rhs(&axpy(&psi, &k1, tau / 2.0))?;
        let k3 = rhs(&axpy(&psi, &k2, tau / 2.0))?;
        let k4 = rhs(&axpy(&psi, &k3, tau))?;
        for (i, z) in psi.values.iter_mut().enumerate() {
            *z += tau / 6.0 * (k1.values[i] + 2.0 * k2.values[i] + 2.0 * k3.values[i] + k4.values[i]);
        }
        let drift = (psi.norm() - n0).abs() / n0.max(f64::MIN_POSITIVE);
        if !drift.is_finite() || drift > MAX_NORM_DRIFT {
            return Err(Error::IntegratorFailure(format!(
                "norm drifted by {drift:.3e} after {} of {steps} steps; reduce dt",
                step + 1
            )));
        }
    }
    Ok(psi)
}

#[derive(Clone, Debug, Serialize)]
pub struct OrderGap {
    /// `‖e^{−iH_j t_j} e^{−iH_i t_i}ψ₀ − e^{−iH_i t_i} e^{−iH_j t_j}ψ₀‖`.
    pub gap: f64,
    /// `gap / (t_i t_j ‖[H_i,H_j]ψ₀‖)`; `None` when that denominator is zero.
    pub normalized: Option<f64>,
    pub commutator_norm: f64,
}

pub fn order_gap(
    spec_i: &PartialHamiltonianSpec,
    spec_j: &PartialHamiltonianSpec,
    psi0: &GridFunction,
    t_i: f64,
    t_j: f64,
    dt: f64,
) -> Result<OrderGap> {
    let a = rk4_evolve(spec_j, &rk4_evolve(spec_i, psi0, t_i, dt)?, t_j, dt)?;
    let b = rk4_evolve(spec_i, &rk4_evolve(spec_j, psi0, t_j, dt)?, t_i, dt)?;
    let gap = a.distance(&b)?;
    let ij = apply_hamiltonian(spec_i, &apply_hamiltonian(spec_j, psi0)?)?;
    let ji = apply_hamiltonian(spec_j, &apply_hamiltonian(spec_i, psi0)?)?;
    let commutator_norm = ij.distance(&ji)?;
    let den = t_i.abs() * t_j.abs() * commutator_norm;
    Ok(OrderGap { gap, normalized: (den > 0.0).then(|| gap / den), commutator_norm })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::grid::{Boundary, Grid};
    use crate::lattice::hamiltonian::{FreeKind, LatticePotential};
    use crate::lattice::pair::PairPotential;

    fn setup(n: usize, pair: bool) -> (PartialHamiltonianSpec, PartialHamiltonianSpec, GridFunction) {
        let h = 0.3;
        let grid = Grid::new(1, n, h, -(n as f64) * h / 2.0, Boundary::ZeroPadded).unwrap();
        let psi = GridFunction::from_fn(grid, 2, vec![1, 1], |q, _| {
            C64::from_polar((-(q[0] + 0.5).powi(2) / 2.0 - (q[1] - 0.5).powi(2) / 2.0).exp(), 0.4 * q[0])
        })
        .unwrap();
        let mut a = PartialHamiltonianSpec::new(0, FreeKind::Schrodinger { mass: 1.0 }, 4);
        let mut b = PartialHamiltonianSpec::new(1, FreeKind::Schrodinger { mass: 1.0 }, 4);
        if pair {
            let v = LatticePotential::PairShare { pair: PairPotential::gaussian(1.0, 1.0), share: 0.5 };
            a = a.with_potential(v.clone());
            b = b.with_potential(v);
        }
        (a, b, psi)
    }

    #[test]
    fn zero_first_time_gives_exact_zero_gap() {
        let (a, b, psi) = setup(32, true);
        assert_eq!(order_gap(&a, &b, &psi, 0.0, 0.2, 0.01).unwrap().gap, 0.0);
    }

    #[test]
    fn free_parts_commute() {
        let (a, b, psi) = setup(32, false);
        assert!(order_gap(&a, &b, &psi, 0.1, 0.1, 0.01).unwrap().gap < 1e-10);
    }

    #[test]
    fn gap_is_quadratic_in_time() {
        let (a, b, psi) = setup(32, true);
        let g1 = order_gap(&a, &b, &psi, 0.1, 0.1, 0.005).unwrap();
        let g2 = order_gap(&a, &b, &psi, 0.05, 0.05, 0.005).unwrap();
        let slope = (g1.gap / g2.gap).log2();
        assert!((1.8..=2.2).contains(&slope), "{slope}");
        assert!((0.8..=1.2).contains(&g1.normalized.unwrap()));
    }

    #[test]
    fn unstable_step_is_reported() {
        let (a, _, psi) = setup(32, false);
        assert!(matches!(rk4_evolve(&a, &psi, 2.0, 0.5), Err(Error::IntegratorFailure(_))));
    }
}
