//! Real multivariate polynomials with exact partial derivatives.
//!
//! Used wherever a config has to name a smooth scalar function: the gauge
//! potential `g(t⃗)` of gradient fields and the per-particle external
//! potentials of the potential analyser.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub coef: f64,
    /// One exponent per variable; missing trailing exponents are zero.
    pub exponents: Vec<u32>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    pub terms: Vec<Monomial>,
}

impl Polynomial {
    pub fn new(terms: Vec<Monomial>) -> Self {
        Polynomial { terms }
    }

    pub fn constant(c: f64) -> Self {
        Polynomial { terms: vec![Monomial { coef: c, exponents: vec![] }] }
    }

    /// Single term `coef · Π x_i^{e_i}`.
    pub fn monomial(coef: f64, exponents: &[u32]) -> Self {
        Polynomial { terms: vec![Monomial { coef, exponents: exponents.to_vec() }] }
    }

    /// Number of variables the polynomial actually references.
    pub fn arity(&self) -> usize {
        self.terms
            .iter()
            .map(|m| m.exponents.iter().rposition(|&e| e > 0).map_or(0, |p| p + 1))
            .max()
            .unwrap_or(0)
    }

    pub fn check_arity(&self, n: usize) -> Result<()> {
        if self.arity() > n {
            return Err(Error::invalid(format!(
                "polynomial references {} variables but only {n} are available",
                self.arity()
            )));
        }
        if self.terms.iter().any(|m| !m.coef.is_finite()) {
            return Err(Error::invalid("polynomial has a non-finite coefficient"));
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|m| {
                m.exponents.iter().enumerate().fold(m.coef, |acc, (i, &e)| {
                    if e == 0 {
                        acc
                    } else {
                        acc * x.get(i).copied().unwrap_or(0.0).powi(e as i32)
                    }
                })
            })
            .sum()
    }

    pub fn derivative(&self, var: usize) -> Polynomial {
        let terms = self
            .terms
            .iter()
            .filter_map(|m| {
                let e = *m.exponents.get(var)?;
                if e == 0 {
                    return None;
                }
                let mut exponents = m.exponents.clone();
                exponents[var] = e - 1;
                Some(Monomial { coef: m.coef * e as f64, exponents })
            })
            .collect();
        Polynomial { terms }
    }

    pub fn gradient(&self, n: usize) -> Vec<Polynomial> {
        (0..n).map(|i| self.derivative(i)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_and_derivative_of_product() {
        let g = Polynomial::monomial(1.0, &[1, 1]);
        assert_eq!(g.eval(&[2.0, 3.0]), 6.0);
        assert_eq!(g.derivative(0).eval(&[2.0, 3.0]), 3.0);
        assert_eq!(g.derivative(1).eval(&[2.0, 3.0]), 2.0);
        assert_eq!(g.derivative(2).eval(&[2.0, 3.0]), 0.0);
    }

    #[test]
    fn arity_ignores_trailing_zero_exponents() {
        let g = Polynomial::new(vec![
            Monomial { coef: 1.0, exponents: vec![2, 0, 0] },
            Monomial { coef: -0.5, exponents: vec![0, 3] },
        ]);
        assert_eq!(g.arity(), 2);
        assert!(g.check_arity(2).is_ok());
        assert!(g.check_arity(1).is_err());
        assert_eq!(g.derivative(1).eval(&[0.0, 2.0]), -6.0);
    }
}
