//! Potentials `V_j(x_1, …, x_N)` attached to the particles of a multi-time
//! system, each `x_i = (t_i, 𝐱_i)` a space-time event.

use crate::error::{Error, Result};
use crate::geometry::Event;
use crate::operator::Operator;
use crate::poly::Polynomial;

/// Real scalar potentials, one per particle.
pub trait PotentialField: Send + Sync {
    fn n_particles(&self) -> usize;
    fn space_dim(&self) -> usize;
    fn eval(&self, j: usize, q: &[Event]) -> Result<f64>;
}

/// Hermitian `k_j × k_j` matrix potentials acting on particle `j`'s spin.
pub trait MatrixPotentialField: Send + Sync {
    fn n_particles(&self) -> usize;
    fn space_dim(&self) -> usize;
    fn spin_dim(&self, j: usize) -> usize;
    fn eval(&self, j: usize, q: &[Event]) -> Result<Operator>;
}

pub fn check_config(n: usize, d: usize, q: &[Event]) -> Result<()> {
    if q.len() != n {
        return Err(Error::shape(format!("configuration has {} events, potential has {n} particles", q.len())));
    }
    if q.iter().any(|e| e.space_dim() != d) {
        return Err(Error::shape(format!("events must have {d} spatial coordinates")));
    }
    Ok(())
}

fn check_space_dim(d: usize) -> Result<()> {
    if d != 1 && d != 3 {
        return Err(Error::invalid(format!("space dimension must be 1 or 3, got {d}")));
    }
    Ok(())
}

/// Pair potential `Σ_{k≠j} share·w(‖𝐱_j − 𝐱_k‖)` handed to every particle.
///
/// With `share = 1/2` this is the familiar way of attributing half of a pair
/// interaction to each particle.
pub struct PairSplit<W> {
    n: usize,
    d: usize,
    share: f64,
    w: W,
}

impl<W: Fn(f64) -> f64 + Send + Sync> PairSplit<W> {
    pub fn new(n: usize, space_dim: usize, share: f64, w: W) -> Result<Self> {
        check_space_dim(space_dim)?;
        if n < 2 {
            return Err(Error::invalid("a pair potential needs at least two particles"));
        }
        Ok(PairSplit { n, d: space_dim, share, w })
    }
}

impl<W: Fn(f64) -> f64 + Send + Sync> PotentialField for PairSplit<W> {
    fn n_particles(&self) -> usize {
        self.n
    }
    fn space_dim(&self) -> usize {
        self.d
    }
    fn eval(&self, j: usize, q: &[Event]) -> Result<f64> {
        check_config(self.n, self.d, q)?;
        let mut v = 0.0;
        for (k, e) in q.iter().enumerate() {
            if k != j {
                v += (self.w)(q[j].spatial_distance(e));
            }
        }
        Ok(self.share * v)
    }
}

/// Split Coulomb interaction `share·charge/r` per partner.
pub fn coulomb_split(n: usize, space_dim: usize, charge: f64, share: f64) -> Result<PairSplit<impl Fn(f64) -> f64 + Send + Sync>> {
    PairSplit::new(n, space_dim, share, move |r: f64| charge / r)
}

/// Split Gaussian interaction `share·amplitude·exp(−r²/(2 width²))` per partner.
pub fn gaussian_split(
    n: usize,
    space_dim: usize,
    amplitude: f64,
    width: f64,
    share: f64,
) -> Result<PairSplit<impl Fn(f64) -> f64 + Send + Sync>> {
    if !(width > 0.0) {
        return Err(Error::invalid("gaussian width must be positive"));
    }
    PairSplit::new(n, space_dim, share, move |r: f64| amplitude * (-r * r / (2.0 * width * width)).exp())
}

/// `V_j = ∂g/∂t_j(t_1, …, t_N) + u_j(t_j, 𝐱_j)`.
///
/// With `g = 0` these are purely external potentials. Each `u_j` is a
/// polynomial in `(t_j, x_{j,1}, …, x_{j,d})`.
#[derive(Clone, Debug)]
pub struct GaugePlusExternal {
    d: usize,
    grad: Vec<Polynomial>,
    externals: Vec<Polynomial>,
}

impl GaugePlusExternal {
    pub fn new(space_dim: usize, g: Polynomial, externals: Vec<Polynomial>) -> Result<Self> {
        check_space_dim(space_dim)?;
        let n = externals.len();
        if n == 0 {
            return Err(Error::invalid("need at least one particle"));
        }
        g.check_arity(n)?;
        for u in &externals {
            u.check_arity(space_dim + 1)?;
        }
        Ok(GaugePlusExternal { d: space_dim, grad: g.gradient(n), externals })
    }

    pub fn external(space_dim: usize, externals: Vec<Polynomial>) -> Result<Self> {
        Self::new(space_dim, Polynomial::default(), externals)
    }
}

impl PotentialField for GaugePlusExternal {
    fn n_particles(&self) -> usize {
        self.externals.len()
    }
    fn space_dim(&self) -> usize {
        self.d
    }
    fn eval(&self, j: usize, q: &[Event]) -> Result<f64> {
        check_config(self.externals.len(), self.d, q)?;
        let times: Vec<f64> = q.iter().map(|e| e.t).collect();
        let mut local = Vec::with_capacity(self.d + 1);
        local.push(q[j].t);
        local.extend_from_slice(&q[j].x);
        Ok(self.grad[j].eval(&times) + self.externals[j].eval(&local))
    }
}

/// Sum of two scalar potentials.
pub struct Sum<A, B>(pub A, pub B);

impl<A: PotentialField, B: PotentialField> PotentialField for Sum<A, B> {
    fn n_particles(&self) -> usize {
        self.0.n_particles()
    }
    fn space_dim(&self) -> usize {
        self.0.space_dim()
    }
    fn eval(&self, j: usize, q: &[Event]) -> Result<f64> {
        Ok(self.0.eval(j, q)? + self.1.eval(j, q)?)
    }
}

/// Scalar potential backed by a closure.
pub struct FnPotential<F> {
    n: usize,
    d: usize,
    f: F,
}

impl<F: Fn(usize, &[Event]) -> f64 + Send + Sync> FnPotential<F> {
    pub fn new(n: usize, space_dim: usize, f: F) -> Self {
        FnPotential { n, d: space_dim, f }
    }
}

impl<F: Fn(usize, &[Event]) -> f64 + Send + Sync> PotentialField for FnPotential<F> {
    fn n_particles(&self) -> usize {
        self.n
    }
    fn space_dim(&self) -> usize {
        self.d
    }
    fn eval(&self, j: usize, q: &[Event]) -> Result<f64> {
        check_config(self.n, self.d, q)?;
        Ok((self.f)(j, q))
    }
}

/// Matrix potential backed by a closure.
pub struct FnMatrixPotential<F> {
    spins: Vec<usize>,
    d: usize,
    f: F,
}

impl<F: Fn(usize, &[Event]) -> Operator + Send + Sync> FnMatrixPotential<F> {
    pub fn new(spin_dims: Vec<usize>, space_dim: usize, f: F) -> Self {
        FnMatrixPotential { spins: spin_dims, d: space_dim, f }
    }
}

impl<F: Fn(usize, &[Event]) -> Operator + Send + Sync> MatrixPotentialField for FnMatrixPotential<F> {
    fn n_particles(&self) -> usize {
        self.spins.len()
    }
    fn space_dim(&self) -> usize {
        self.d
    }
    fn spin_dim(&self, j: usize) -> usize {
        self.spins[j]
    }
    fn eval(&self, j: usize, q: &[Event]) -> Result<Operator> {
        check_config(self.spins.len(), self.d, q)?;
        let v = (self.f)(j, q);
        if v.dim() != self.spins[j] {
            return Err(Error::Evaluation(format!(
                "V_{} returned a {}x{} matrix, expected {}",
                j + 1,
                v.dim(),
                v.dim(),
                self.spins[j]
            )));
        }
        if !v.is_hermitian(1e-10) {
            return Err(Error::Evaluation(format!("V_{} is not Hermitian", j + 1)));
        }
        Ok(v)
    }
}
