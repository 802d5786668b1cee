//! Dense complex operators on finite-dimensional Hilbert spaces.
//!
//! [`Operator`] is the value type of every Hamiltonian and propagator in the
//! crate. It wraps a square `nalgebra` matrix and adds the handful of
//! operations the multi-time machinery needs: commutators, the matrix
//! exponential, norms and spectral decompositions of Hermitian matrices.
//!
//! Operators serialize to JSON as `{dim, re, im}` with both arrays flattened
//! row-major.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const I: C64 = C64::new(0.0, 1.0);

/// Square complex matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "OperatorJson", try_from = "OperatorJson")]
pub struct Operator {
    m: DMatrix<C64>,
}

/// Wire format shared by every JSON artifact carrying a matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorJson {
    pub dim: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl From<Operator> for OperatorJson {
    fn from(op: Operator) -> Self {
        let dim = op.dim();
        let mut re = Vec::with_capacity(dim * dim);
        let mut im = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                let z = op.m[(i, j)];
                re.push(z.re);
                im.push(z.im);
            }
        }
        OperatorJson { dim, re, im }
    }
}

impl TryFrom<OperatorJson> for Operator {
    type Error = Error;

    fn try_from(j: OperatorJson) -> Result<Self> {
        if j.re.len() != j.dim * j.dim || j.im.len() != j.dim * j.dim {
            return Err(Error::shape(format!(
                "matrix of dim {} needs {} entries, got re={} im={}",
                j.dim,
                j.dim * j.dim,
                j.re.len(),
                j.im.len()
            )));
        }
        let entries: Vec<C64> = j.re.iter().zip(&j.im).map(|(&r, &i)| C64::new(r, i)).collect();
        Operator::from_row_major(j.dim, &entries)
    }
}

impl Operator {
    pub fn from_row_major(dim: usize, entries: &[C64]) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("operator dimension must be at least 1"));
        }
        if entries.len() != dim * dim {
            return Err(Error::shape(format!(
                "expected {} entries for a {dim}x{dim} operator, got {}",
                dim * dim,
                entries.len()
            )));
        }
        Ok(Operator { m: DMatrix::from_row_slice(dim, dim, entries) })
    }

    /// Wraps an existing square matrix.
    ///
    /// # Panics
    /// Panics if `m` is empty or not square.
    pub fn from_matrix(m: DMatrix<C64>) -> Self {
        assert!(m.is_square() && m.nrows() > 0, "operator must be a non-empty square matrix");
        Operator { m }
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self::from_matrix(DMatrix::from_fn(dim, dim, f))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, |i, j| if i == j { C64::new(diag[i], 0.0) } else { C64::new(0.0, 0.0) })
    }

    pub fn zeros(dim: usize) -> Self {
        Self::from_matrix(DMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_matrix(DMatrix::identity(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.m[(i, j)]
    }

    pub fn adjoint(&self) -> Operator {
        Operator { m: self.m.adjoint() }
    }

    pub fn scale(&self, z: C64) -> Operator {
        Operator { m: &self.m * z }
    }

    pub fn scale_real(&self, x: f64) -> Operator {
        self.scale(C64::new(x, 0.0))
    }

    pub fn trace(&self) -> C64 {
        self.m.trace()
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Largest entrywise modulus.
    pub fn max_abs(&self) -> f64 {
        self.m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    /// `max |A - A†|` over entries.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.m[(i, j)] - self.m[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Operator (spectral) norm, the largest singular value.
    ///
    /// Power iteration on `A†A`, stopped once successive Rayleigh quotients
    /// agree to 1e-10 relative.
    pub fn op_norm(&self) -> f64 {
        let n = self.dim();
        let gram = self.m.adjoint() * &self.m;
        let scale = gram.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        if n == 1 {
            return gram[(0, 0)].re.max(0.0).sqrt();
        }
        // Start from the heaviest column of the Gram matrix, nudged by a fixed
        // irrational pattern so it is never exactly orthogonal to the top
        // eigenvector.
        let heaviest = (0..n)
            .max_by(|&a, &b| {
                let na = gram.column(a).norm();
                let nb = gram.column(b).norm();
                na.partial_cmp(&nb).unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap_or(0);
        let mut v: DVector<C64> = DVector::from_fn(n, |i, _| {
            let phase = 0.61803398875 * (i as f64 + 1.0);
            gram[(i, heaviest)] / scale + C64::new(phase.sin(), phase.cos()) * 1e-3
        });
        v /= C64::new(v.norm(), 0.0);
        let mut lambda = 0.0_f64;
        for _ in 0..20_000 {
            let w = &gram * &v;
            let next = v.dotc(&w).re;
            let wn = w.norm();
            if wn == 0.0 {
                return 0.0;
            }
            v = w / C64::new(wn, 0.0);
            if (next - lambda).abs() <= 1e-10 * next.abs() {
                lambda = next;
                break;
            }
            lambda = next;
        }
        lambda.max(0.0).sqrt()
    }

    pub fn apply(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.dim() {
            return Err(Error::shape(format!(
                "vector of length {} applied to operator of dim {}",
                v.len(),
                self.dim()
            )));
        }
        let x = DVector::from_column_slice(v);
        Ok((&self.m * x).iter().copied().collect())
    }

    /// Inverse via LU; `None` when the matrix is numerically singular.
    pub fn inverse(&self) -> Option<Operator> {
        self.m.clone().try_inverse().map(Operator::from_matrix)
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Operator) -> Operator {
        Operator { m: self.m.kronecker(&other.m) }
    }

    fn check_same_dim(&self, other: &Operator, what: &str) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::shape(format!(
                "{what}: dimensions {} and {} differ",
                self.dim(),
                other.dim()
            )));
        }
        Ok(())
    }

    pub fn try_mul(&self, other: &Operator) -> Result<Operator> {
        self.check_same_dim(other, "product")?;
        Ok(Operator { m: &self.m * &other.m })
    }

    pub fn try_add(&self, other: &Operator) -> Result<Operator> {
        self.check_same_dim(other, "sum")?;
        Ok(Operator { m: &self.m + &other.m })
    }

    pub fn try_sub(&self, other: &Operator) -> Result<Operator> {
        self.check_same_dim(other, "difference")?;
        Ok(Operator { m: &self.m - &other.m })
    }

    /// Operator-norm distance `‖self − other‖`.
    pub fn distance(&self, other: &Operator) -> Result<f64> {
        Ok(self.try_sub(other)?.op_norm())
    }
}

impl<'a> Mul<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn mul(self, rhs: &'a Operator) -> Operator {
        self.try_mul(rhs).expect("operator product dimension mismatch")
    }
}

impl Mul for Operator {
    type Output = Operator;
    fn mul(self, rhs: Operator) -> Operator {
        &self * &rhs
    }
}

impl<'a> Add<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn add(self, rhs: &'a Operator) -> Operator {
        self.try_add(rhs).expect("operator sum dimension mismatch")
    }
}

impl Add for Operator {
    type Output = Operator;
    fn add(self, rhs: Operator) -> Operator {
        &self + &rhs
    }
}

impl AddAssign<&Operator> for Operator {
    fn add_assign(&mut self, rhs: &Operator) {
        assert_eq!(self.dim(), rhs.dim(), "operator sum dimension mismatch");
        self.m += &rhs.m;
    }
}

impl<'a> Sub<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn sub(self, rhs: &'a Operator) -> Operator {
        self.try_sub(rhs).expect("operator difference dimension mismatch")
    }
}

impl Sub for Operator {
    type Output = Operator;
    fn sub(self, rhs: Operator) -> Operator {
        &self - &rhs
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        Operator { m: -self.m.clone() }
    }
}

impl Mul<C64> for &Operator {
    type Output = Operator;
    fn mul(self, z: C64) -> Operator {
        self.scale(z)
    }
}

impl Mul<f64> for &Operator {
    type Output = Operator;
    fn mul(self, x: f64) -> Operator {
        self.scale_real(x)
    }
}

/// `AB − BA`.
pub fn commutator(a: &Operator, b: &Operator) -> Result<Operator> {
    a.check_same_dim(b, "commutator")?;
    Ok(Operator { m: &a.m * &b.m - &b.m * &a.m })
}

/// Pauli matrices and the 2×2 identity.
pub mod pauli {
    use super::{Operator, C64};

    pub fn id() -> Operator {
        Operator::identity(2)
    }

    pub fn x() -> Operator {
        let o = C64::new(0.0, 0.0);
        let l = C64::new(1.0, 0.0);
        Operator::from_row_major(2, &[o, l, l, o]).unwrap()
    }

    pub fn y() -> Operator {
        let o = C64::new(0.0, 0.0);
        Operator::from_row_major(2, &[o, C64::new(0.0, -1.0), C64::new(0.0, 1.0), o]).unwrap()
    }

    pub fn z() -> Operator {
        Operator::from_real_diagonal(&[1.0, -1.0])
    }
}

// ---------------------------------------------------------------------------
// Matrix exponential: scaling and squaring with diagonal Padé approximants.
// ---------------------------------------------------------------------------

const PADE_THETA: [(usize, f64); 5] = [
    (3, 1.495585217958292e-2),
    (5, 2.539398330063230e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
    (13, 5.371920351148152e0),
];

/// Coefficients of the numerator of the `[m/m]` Padé approximant to `e^x`.
fn pade_coefficients(m: usize) -> Vec<f64> {
    let mut c = vec![1.0; m + 1];
    for k in 1..=m {
        c[k] = c[k - 1] * ((m + 1 - k) as f64) / ((k * (2 * m + 1 - k)) as f64);
    }
    c
}

fn one_norm(m: &DMatrix<C64>) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `exp(scale·A)`.
///
/// Scaling and squaring around a degree-3..13 diagonal Padé approximant
/// selected from the 1-norm; accurate to a few ulps times the condition of
/// the problem for `‖scale·A‖ ≤ 1e3`.
pub fn matrix_exp(a: &Operator, scale: C64) -> Result<Operator> {
    if !a.is_finite() || !(scale.re.is_finite() && scale.im.is_finite()) {
        return Err(Error::invalid("matrix_exp: non-finite entries"));
    }
    let n = a.dim();
    let x = &a.m * scale;
    let norm = one_norm(&x);
    if norm == 0.0 {
        return Ok(Operator::identity(n));
    }

    let (order, squarings) = match PADE_THETA.iter().find(|(_, theta)| norm <= *theta) {
        Some(&(m, _)) => (m, 0u32),
        None => {
            let theta13 = PADE_THETA[4].1;
            let s = (norm / theta13).log2().ceil().max(0.0) as u32;
            (13, s)
        }
    };
    let x = if squarings > 0 { x / C64::new(2f64.powi(squarings as i32), 0.0) } else { x };

    let c = pade_coefficients(order);
    let id = DMatrix::<C64>::identity(n, n);
    let x2 = &x * &x;
    let re = |v: f64| C64::new(v, 0.0);

    let (u, v) = if order == 13 {
        let x4 = &x2 * &x2;
        let x6 = &x4 * &x2;
        let inner_u = &x6 * re(c[13]) + &x4 * re(c[11]) + &x2 * re(c[9]);
        let u_poly = &x6 * inner_u
            + &x6 * re(c[7])
            + &x4 * re(c[5])
            + &x2 * re(c[3])
            + &id * re(c[1]);
        let u = &x * u_poly;
        let inner_v = &x6 * re(c[12]) + &x4 * re(c[10]) + &x2 * re(c[8]);
        let v = &x6 * inner_v
            + &x6 * re(c[6])
            + &x4 * re(c[4])
            + &x2 * re(c[2])
            + &id * re(c[0]);
        (u, v)
    } else {
        // Powers x^0, x^2, x^4, ... up to x^(order-1).
        let mut even_powers = vec![id.clone()];
        while even_powers.len() * 2 <= order {
            let next = even_powers.last().unwrap() * &x2;
            even_powers.push(next);
        }
        let mut u_poly = DMatrix::<C64>::zeros(n, n);
        let mut v = DMatrix::<C64>::zeros(n, n);
        for (k, p) in even_powers.iter().enumerate() {
            let even = 2 * k;
            let odd = even + 1;
            v += p * re(c[even]);
            if odd <= order {
                u_poly += p * re(c[odd]);
            }
        }
        (&x * u_poly, v)
    };

    let denom = &v - &u;
    let numer = &v + &u;
    let lu = denom.lu();
    let mut r = lu
        .solve(&numer)
        .ok_or_else(|| Error::Evaluation("matrix_exp: singular Padé denominator".into()))?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    Ok(Operator { m: r })
}

/// Propagator `exp(−i·H·t)`.
pub fn unitary_step(h: &Operator, t: f64) -> Result<Operator> {
    matrix_exp(h, C64::new(0.0, -t))
}

// ---------------------------------------------------------------------------
// Spectral decomposition and spectral commutation.
// ---------------------------------------------------------------------------

/// Eigen-decomposition of a Hermitian operator with degenerate eigenvalues
/// merged into a single projector.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub projectors: Vec<Operator>,
}

impl Spectrum {
    /// Hermitian decomposition with the default clustering tolerance
    /// `1e-8·‖A‖`.
    pub fn of(a: &Operator, herm_tol: f64) -> Result<Spectrum> {
        let scale = a.op_norm();
        Self::with_cluster_tol(a, herm_tol, 1e-8 * scale)
    }

    pub fn with_cluster_tol(a: &Operator, herm_tol: f64, cluster_tol: f64) -> Result<Spectrum> {
        if !a.is_finite() {
            return Err(Error::invalid("spectrum: non-finite entries"));
        }
        let defect = a.hermiticity_defect();
        if defect > herm_tol {
            return Err(Error::invalid(format!(
                "spectrum: operator is not Hermitian (max |A - A†| = {defect:.3e} > {herm_tol:.3e})"
            )));
        }
        let n = a.dim();
        let sym = (&a.m + a.m.adjoint()) * C64::new(0.5, 0.0);
        let eig = sym.symmetric_eigen();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());

        let mut eigenvalues = Vec::new();
        let mut projectors = Vec::new();
        let mut start = 0;
        while start < n {
            let mut end = start + 1;
            while end < n
                && eig.eigenvalues[order[end]] - eig.eigenvalues[order[end - 1]] <= cluster_tol
            {
                end += 1;
            }
            let mut p = DMatrix::<C64>::zeros(n, n);
            let mut mean = 0.0;
            for &k in &order[start..end] {
                let v = eig.eigenvectors.column(k);
                p += v * v.adjoint();
                mean += eig.eigenvalues[k];
            }
            eigenvalues.push(mean / (end - start) as f64);
            projectors.push(Operator { m: p });
            start = end;
        }
        Ok(Spectrum { eigenvalues, projectors })
    }

    /// `Σ λ_k P_k`.
    pub fn reconstruct(&self) -> Operator {
        let n = self.projectors[0].dim();
        let mut acc = Operator::zeros(n);
        for (l, p) in self.eigenvalues.iter().zip(&self.projectors) {
            acc += &p.scale_real(*l);
        }
        acc
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralCommuteReport {
    pub commute: bool,
    /// Indices into the two spectra of the worst projector pair.
    pub worst_pair: (usize, usize),
    pub worst_norm: f64,
}

/// Tests whether every spectral projector of `a` commutes with every spectral
/// projector of `b` to within `tol` in operator norm.
pub fn spectral_commute(a: &Operator, b: &Operator, tol: f64) -> Result<SpectralCommuteReport> {
    a.check_same_dim(b, "spectral_commute")?;
    let sa = Spectrum::of(a, tol)?;
    let sb = Spectrum::of(b, tol)?;
    let mut worst = ((0, 0), 0.0_f64);
    for (i, p) in sa.projectors.iter().enumerate() {
        for (j, q) in sb.projectors.iter().enumerate() {
            let c = commutator(p, q)?.op_norm();
            if c > worst.1 {
                worst = ((i, j), c);
            }
        }
    }
    Ok(SpectralCommuteReport { commute: worst.1 <= tol, worst_pair: worst.0, worst_norm: worst.1 })
}
