//! Hamiltonian fields `t⃗ ↦ (H_1(t⃗), …, H_N(t⃗))` over the space of time tuples.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{matrix_exp, Operator, C64};
use crate::poly::Polynomial;

/// One operator-valued map per time axis.
///
/// Implementations must be pure: the same `(j, t⃗)` always yields the same
/// operator.
pub trait HamiltonianField: Send + Sync {
    fn n_times(&self) -> usize;
    fn dim(&self) -> usize;
    /// `H_j(t⃗)` for `j` in `0..n_times`.
    fn eval(&self, j: usize, t: &[f64]) -> Result<Operator>;
    /// Whether every `H_j(t⃗)` is meant to be Hermitian.
    fn hermitian(&self) -> bool {
        true
    }
}

/// Hermiticity tolerance for fields that declare themselves Hermitian.
pub const FIELD_HERMITIAN_TOL: f64 = 1e-10;

/// Evaluates `H_j(t⃗)` and checks shape, finiteness and declared Hermiticity.
pub fn evaluate(field: &dyn HamiltonianField, j: usize, t: &[f64]) -> Result<Operator> {
    if j >= field.n_times() {
        return Err(Error::invalid(format!("time axis {j} out of range 0..{}", field.n_times())));
    }
    if t.len() != field.n_times() {
        return Err(Error::shape(format!(
            "time point has {} coordinates, field has {} time axes",
            t.len(),
            field.n_times()
        )));
    }
    let h = field.eval(j, t)?;
    if h.dim() != field.dim() {
        return Err(Error::Evaluation(format!(
            "H_{} returned a {}x{} matrix, expected {}",
            j + 1,
            h.dim(),
            h.dim(),
            field.dim()
        )));
    }
    if !h.is_finite() {
        return Err(Error::Evaluation(format!("H_{} is not finite at {t:?}", j + 1)));
    }
    if field.hermitian() && !h.is_hermitian(FIELD_HERMITIAN_TOL) {
        return Err(Error::Evaluation(format!(
            "H_{} is not Hermitian at {t:?} (defect {:.3e})",
            j + 1,
            h.hermiticity_defect()
        )));
    }
    Ok(h)
}

/// `Σ_j H_j(t⃗)·v_j`, the generator of a straight step with displacement `v`.
pub fn contract(field: &dyn HamiltonianField, t: &[f64], v: &[f64]) -> Result<Operator> {
    let mut acc = Operator::zeros(field.dim());
    for (j, &vj) in v.iter().enumerate() {
        if vj != 0.0 {
            acc += &evaluate(field, j, t)?.scale_real(vj);
        }
    }
    Ok(acc)
}

fn check_family(ops: &[Operator]) -> Result<usize> {
    let first = ops.first().ok_or_else(|| Error::invalid("field needs at least one time axis"))?;
    if ops.iter().any(|o| o.dim() != first.dim()) {
        return Err(Error::shape("all operators of a field must share one dimension"));
    }
    Ok(first.dim())
}

/// Time-independent `H_j`.
#[derive(Clone, Debug)]
pub struct ConstantField {
    ops: Vec<Operator>,
    dim: usize,
}

impl ConstantField {
    pub fn new(ops: Vec<Operator>) -> Result<Self> {
        let dim = check_family(&ops)?;
        Ok(ConstantField { ops, dim })
    }

    pub fn operators(&self) -> &[Operator] {
        &self.ops
    }
}

impl HamiltonianField for ConstantField {
    fn n_times(&self) -> usize {
        self.ops.len()
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, j: usize, _t: &[f64]) -> Result<Operator> {
        Ok(self.ops[j].clone())
    }
}

/// `H_j(t⃗) = A_j + Σ_k t_k B_{jk}`.
#[derive(Clone, Debug)]
pub struct AffineField {
    constant: Vec<Operator>,
    slopes: Vec<Vec<Operator>>,
    dim: usize,
}

impl AffineField {
    pub fn new(constant: Vec<Operator>, slopes: Vec<Vec<Operator>>) -> Result<Self> {
        let dim = check_family(&constant)?;
        let n = constant.len();
        if slopes.len() != n || slopes.iter().any(|row| row.len() != n) {
            return Err(Error::shape(format!("affine field needs an {n}x{n} table of slopes")));
        }
        if slopes.iter().flatten().any(|o| o.dim() != dim) {
            return Err(Error::shape("slope operators must match the field dimension"));
        }
        Ok(AffineField { constant, slopes, dim })
    }
}

impl HamiltonianField for AffineField {
    fn n_times(&self) -> usize {
        self.constant.len()
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, j: usize, t: &[f64]) -> Result<Operator> {
        let mut h = self.constant[j].clone();
        for (k, &tk) in t.iter().enumerate() {
            if tk != 0.0 {
                h += &self.slopes[j][k].scale_real(tk);
            }
        }
        Ok(h)
    }
}

/// Pure-gauge field `H_j = (∂g/∂t_j)·A` for a scalar polynomial `g`.
///
/// Flat for every `g`, and `U_γ = exp(−i (g(end) − g(start)) A)`.
#[derive(Clone, Debug)]
pub struct GradientField {
    g: Polynomial,
    grad: Vec<Polynomial>,
    a: Operator,
}

impl GradientField {
    pub fn new(n_times: usize, g: Polynomial, a: Operator) -> Result<Self> {
        if n_times == 0 {
            return Err(Error::invalid("field needs at least one time axis"));
        }
        g.check_arity(n_times)?;
        let grad = g.gradient(n_times);
        Ok(GradientField { g, grad, a })
    }

    pub fn potential(&self) -> &Polynomial {
        &self.g
    }

    pub fn generator(&self) -> &Operator {
        &self.a
    }
}

impl HamiltonianField for GradientField {
    fn n_times(&self) -> usize {
        self.grad.len()
    }
    fn dim(&self) -> usize {
        self.a.dim()
    }
    fn eval(&self, j: usize, t: &[f64]) -> Result<Operator> {
        Ok(self.a.scale_real(self.grad[j].eval(t)))
    }
}

/// Commuting constant field `D_j` seen through the time-dependent gauge
/// transformation `e^{−i g(t⃗) B}`:
/// `H_j = (∂g/∂t_j)·B + e^{−igB} D_j e^{igB}`.
///
/// Flat whenever the `D_j` commute, yet neither constant nor a pure gradient.
#[derive(Clone, Debug)]
pub struct GaugeRotatedField {
    grad: Vec<Polynomial>,
    g: Polynomial,
    b: Operator,
    d: Vec<Operator>,
}

impl GaugeRotatedField {
    pub fn new(g: Polynomial, b: Operator, d: Vec<Operator>) -> Result<Self> {
        let dim = check_family(&d)?;
        if b.dim() != dim {
            return Err(Error::shape("gauge generator must match the field dimension"));
        }
        g.check_arity(d.len())?;
        let grad = g.gradient(d.len());
        Ok(GaugeRotatedField { grad, g, b, d })
    }
}

impl HamiltonianField for GaugeRotatedField {
    fn n_times(&self) -> usize {
        self.d.len()
    }
    fn dim(&self) -> usize {
        self.b.dim()
    }
    fn eval(&self, j: usize, t: &[f64]) -> Result<Operator> {
        let gt = self.g.eval(t);
        let u = matrix_exp(&self.b, C64::new(0.0, -gt))?;
        let rotated = &(&u * &self.d[j]) * &u.adjoint();
        Ok(&self.b.scale_real(self.grad[j].eval(t)) + &rotated)
    }
}

/// Field backed by a closure, for tests and ad-hoc experiments.
pub struct FnField<F> {
    n_times: usize,
    dim: usize,
    hermitian: bool,
    f: F,
}

impl<F> FnField<F>
where
    F: Fn(usize, &[f64]) -> Result<Operator> + Send + Sync,
{
    pub fn new(n_times: usize, dim: usize, f: F) -> Self {
        FnField { n_times, dim, hermitian: true, f }
    }

    pub fn non_hermitian(mut self) -> Self {
        self.hermitian = false;
        self
    }
}

impl<F> HamiltonianField for FnField<F>
where
    F: Fn(usize, &[f64]) -> Result<Operator> + Send + Sync,
{
    fn n_times(&self) -> usize {
        self.n_times
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, j: usize, t: &[f64]) -> Result<Operator> {
        (self.f)(j, t)
    }
    fn hermitian(&self) -> bool {
        self.hermitian
    }
}

/// Samples of every `H_j` on a rectangular grid of time tuples, multilinearly
/// interpolated in between.
///
/// `samples[j]` lists the grid values of `H_j` in row-major order over the
/// axes (last axis fastest).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TabulatedField {
    pub dim: usize,
    pub axes: Vec<Vec<f64>>,
    pub samples: Vec<Vec<Operator>>,
}

impl TabulatedField {
    pub fn validate(&self) -> Result<()> {
        let n = self.axes.len();
        if n == 0 {
            return Err(Error::invalid("tabulated field needs at least one time axis"));
        }
        for (a, axis) in self.axes.iter().enumerate() {
            if axis.len() < 2 {
                return Err(Error::invalid(format!("time axis {a} needs at least two nodes")));
            }
            if axis.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::invalid(format!("time axis {a} must be strictly increasing")));
            }
        }
        let count: usize = self.axes.iter().map(Vec::len).product();
        if self.samples.len() != n {
            return Err(Error::shape(format!(
                "tabulated field has {n} axes but {} sample tables",
                self.samples.len()
            )));
        }
        for (j, table) in self.samples.iter().enumerate() {
            if table.len() != count {
                return Err(Error::shape(format!(
                    "sample table {j} has {} entries, grid has {count}",
                    table.len()
                )));
            }
            if table.iter().any(|o| o.dim() != self.dim) {
                return Err(Error::shape(format!("sample table {j} has a wrong matrix size")));
            }
        }
        Ok(())
    }

    /// Tabulates another field on the given axes.
    pub fn sample(field: &dyn HamiltonianField, axes: Vec<Vec<f64>>) -> Result<Self> {
        let n = field.n_times();
        if axes.len() != n {
            return Err(Error::shape("one axis per time variable required"));
        }
        let count: usize = axes.iter().map(Vec::len).product();
        let mut samples = vec![Vec::with_capacity(count); n];
        let mut t = vec![0.0; n];
        for flat in 0..count {
            let mut rem = flat;
            for a in (0..n).rev() {
                t[a] = axes[a][rem % axes[a].len()];
                rem /= axes[a].len();
            }
            for (j, table) in samples.iter_mut().enumerate() {
                table.push(evaluate(field, j, &t)?);
            }
        }
        let tab = TabulatedField { dim: field.dim(), axes, samples };
        tab.validate()?;
        Ok(tab)
    }
}

impl HamiltonianField for TabulatedField {
    fn n_times(&self) -> usize {
        self.axes.len()
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, j: usize, t: &[f64]) -> Result<Operator> {
        let n = self.axes.len();
        // Cell index and fractional offset along each axis.
        let mut base = Vec::with_capacity(n);
        let mut frac = Vec::with_capacity(n);
        for (a, axis) in self.axes.iter().enumerate() {
            let x = t[a];
            let (lo, hi) = (axis[0], axis[axis.len() - 1]);
            let slack = 1e-12 * (hi - lo).abs().max(1.0);
            if !(x >= lo - slack && x <= hi + slack) {
                return Err(Error::Evaluation(format!(
                    "t_{} = {x} outside tabulated range [{lo}, {hi}]",
                    a + 1
                )));
            }
            let x = x.clamp(lo, hi);
            let i = axis.partition_point(|&v| v <= x).saturating_sub(1).min(axis.len() - 2);
            base.push(i);
            frac.push((x - axis[i]) / (axis[i + 1] - axis[i]));
        }
        let mut acc = Operator::zeros(self.dim);
        for corner in 0..(1usize << n) {
            let mut weight = 1.0;
            let mut flat = 0;
            for a in 0..n {
                let up = (corner >> a) & 1 == 1;
                weight *= if up { frac[a] } else { 1.0 - frac[a] };
                flat = flat * self.axes[a].len() + base[a] + usize::from(up);
            }
            if weight != 0.0 {
                acc += &self.samples[j][flat].scale_real(weight);
            }
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::pauli;

    #[test]
    fn evaluate_rejects_non_hermitian_values() {
        let f = FnField::new(1, 2, |_, _| {
            Ok(Operator::from_row_major(
                2,
                &[C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)],
            )
            .unwrap())
        });
        assert!(matches!(evaluate(&f, 0, &[0.0]), Err(Error::Evaluation(_))));
        assert!(matches!(evaluate(&f, 1, &[0.0]), Err(Error::InvalidInput(_))));
        assert!(matches!(evaluate(&f, 0, &[0.0, 1.0]), Err(Error::Shape(_))));
    }

    #[test]
    fn tabulated_reproduces_affine_field() {
        let field = AffineField::new(
            vec![pauli::x(), pauli::z()],
            vec![vec![pauli::z(), pauli::y()], vec![pauli::y(), pauli::x().scale_real(0.5)]],
        )
        .unwrap();
        let axes = vec![vec![0.0, 0.5, 1.0], vec![0.0, 0.25, 0.5, 1.0]];
        let tab = TabulatedField::sample(&field, axes).unwrap();
        let t = [0.37, 0.81];
        for j in 0..2 {
            let exact = field.eval(j, &t).unwrap();
            let interp = tab.eval(j, &t).unwrap();
            assert!(exact.distance(&interp).unwrap() < 1e-14);
        }
        assert!(matches!(tab.eval(0, &[1.5, 0.0]), Err(Error::Evaluation(_))));
    }

    #[test]
    fn tabulated_json_round_trip() {
        let field = ConstantField::new(vec![pauli::x(), pauli::z()]).unwrap();
        let tab = TabulatedField::sample(&field, vec![vec![0.0, 1.0], vec![0.0, 1.0]]).unwrap();
        let s = serde_json::to_string(&tab).unwrap();
        let back: TabulatedField = serde_json::from_str(&s).unwrap();
        back.validate().unwrap();
        assert_eq!(back.eval(1, &[0.5, 0.5]).unwrap(), pauli::z());
    }

    #[test]
    fn gauge_rotated_field_is_hermitian() {
        let g = Polynomial::monomial(0.7, &[1, 1]);
        let f = GaugeRotatedField::new(
            g,
            pauli::y(),
            vec![Operator::from_real_diagonal(&[1.0, -0.5]), Operator::from_real_diagonal(&[0.2, 0.3])],
        )
        .unwrap();
        for j in 0..2 {
            evaluate(&f, j, &[0.4, -1.2]).unwrap();
        }
    }
}
