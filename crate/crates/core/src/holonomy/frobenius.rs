//! Consistency residual of nonlinear multi-time systems
//! `∂φ/∂t_j = f_j(t⃗, φ)`.
//!
//! The system admits a joint solution for every initial value exactly when
//!
//! ```text
//! ∂f_j/∂t_k + Df_j[f_k] = ∂f_k/∂t_j + Df_k[f_j]
//! ```
//!
//! everywhere, with `Df[v]` the derivative of `f` in the state along `v`.

use crate::error::{Error, Result};
use crate::operator::C64;

/// `f_j(t⃗, φ)`; returns a tangent vector of the same length as `φ`.
pub type VectorField<'a> = &'a (dyn Fn(&[f64], &[C64]) -> Vec<C64> + Sync);

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn eval(f: VectorField<'_>, t: &[f64], phi: &[C64]) -> Result<Vec<C64>> {
    let v = f(t, phi);
    if v.len() != phi.len() {
        return Err(Error::Evaluation(format!(
            "vector field returned {} components for a state of {}",
            v.len(),
            phi.len()
        )));
    }
    if v.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::Evaluation("vector field returned non-finite values".into()));
    }
    Ok(v)
}

fn time_derivative(f: VectorField<'_>, t: &[f64], phi: &[C64], axis: usize, h: f64) -> Result<Vec<C64>> {
    let mut tp = t.to_vec();
    let mut tm = t.to_vec();
    tp[axis] += h;
    tm[axis] -= h;
    let a = eval(f, &tp, phi)?;
    let b = eval(f, &tm, phi)?;
    Ok(a.iter().zip(&b).map(|(x, y)| (x - y) / (2.0 * h)).collect())
}

fn directional_derivative(f: VectorField<'_>, t: &[f64], phi: &[C64], dir: &[C64], h: f64) -> Result<Vec<C64>> {
    let plus: Vec<C64> = phi.iter().zip(dir).map(|(p, d)| p + d * h).collect();
    let minus: Vec<C64> = phi.iter().zip(dir).map(|(p, d)| p - d * h).collect();
    let a = eval(f, t, &plus)?;
    let b = eval(f, t, &minus)?;
    Ok(a.iter().zip(&b).map(|(x, y)| (x - y) / (2.0 * h)).collect())
}

/// Largest residual norm over pairs `j < k`, all derivatives by centered
/// differences of step `fd_step`.
pub fn frobenius_residual(fields: &[VectorField<'_>], t: &[f64], phi: &[C64], fd_step: f64) -> Result<f64> {
    if !(fd_step > 0.0 && fd_step.is_finite()) {
        return Err(Error::invalid(format!("fd_step must be positive, got {fd_step}")));
    }
    if fields.len() != t.len() {
        return Err(Error::shape(format!("{} vector fields for {} time variables", fields.len(), t.len())));
    }
    let values: Vec<Vec<C64>> = fields.iter().map(|f| eval(*f, t, phi)).collect::<Result<_>>()?;
    let mut worst: f64 = 0.0;
    for j in 0..fields.len() {
        for k in (j + 1)..fields.len() {
            let dj_dtk = time_derivative(fields[j], t, phi, k, fd_step)?;
            let dk_dtj = time_derivative(fields[k], t, phi, j, fd_step)?;
            let dj_along_k = directional_derivative(fields[j], t, phi, &values[k], fd_step)?;
            let dk_along_j = directional_derivative(fields[k], t, phi, &values[j], fd_step)?;
            let r: Vec<C64> = (0..phi.len())
                .map(|i| dj_dtk[i] + dj_along_k[i] - dk_dtj[i] - dk_along_j[i])
                .collect();
            worst = worst.max(norm(&r));
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::holonomy::field::{GradientField, HamiltonianField};
    use crate::operator::{pauli, I};
    use crate::poly::Polynomial;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn commuting_linear_fields() {
        let f1 = |_: &[f64], p: &[C64]| p.to_vec();
        let f2 = |_: &[f64], p: &[C64]| p.iter().map(|z| z * 2.0).collect();
        let r = frobenius_residual(&[&f1, &f2], &[0.0, 0.0], &[c(1.0), C64::new(0.5, -1.0)], 1e-4).unwrap();
        assert!(r <= 1e-10);
    }

    #[test]
    fn square_and_identity_oracle() {
        // Df1[v] = 2φ⊙v, Df2[v] = v: residual = 2φ⊙φ − φ⊙φ = φ⊙φ, |(1,4)| = √17.
        let f1 = |_: &[f64], p: &[C64]| p.iter().map(|z| z * z).collect();
        let f2 = |_: &[f64], p: &[C64]| p.to_vec();
        let r = frobenius_residual(&[&f1, &f2], &[0.0, 0.0], &[c(1.0), c(2.0)], 1e-4).unwrap();
        assert!((r - 17f64.sqrt()).abs() < 1e-7, "{r}");
    }

    #[test]
    fn flat_linear_field_reduces_to_schrodinger_form() {
        let g = Polynomial::monomial(1.0, &[2, 1]);
        let field = GradientField::new(2, g, &pauli::x() + &pauli::z()).unwrap();
        let make = |j: usize| {
            let field = field.clone();
            move |t: &[f64], p: &[C64]| field.eval(j, t).unwrap().apply(p).unwrap().iter().map(|z| -I * z).collect()
        };
        let (f1, f2) = (make(0), make(1));
        let phi = [C64::new(0.3, 0.1), C64::new(-0.2, 0.9)];
        for h in [1e-2, 1e-3] {
            let r = frobenius_residual(&[&f1, &f2], &[0.4, 0.7], &phi, h).unwrap();
            assert!(r <= 10.0 * h * h, "h={h}: {r}");
        }
    }

    #[test]
    fn rejects_bad_step() {
        let f1 = |_: &[f64], p: &[C64]| p.to_vec();
        assert!(frobenius_residual(&[&f1, &f1], &[0.0, 0.0], &[c(1.0)], -1.0).is_err());
    }
}
