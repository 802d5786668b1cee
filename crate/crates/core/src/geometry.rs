//! Space-time events and configurations of several particles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A space-time point `(t, 𝐱)` with a 1D or 3D spatial part.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: f64,
    pub x: Vec<f64>,
}

impl Event {
    pub fn new(t: f64, x: Vec<f64>) -> Self {
        Event { t, x }
    }

    pub fn space_dim(&self) -> usize {
        self.x.len()
    }

    /// Coordinate `μ` with `μ = 0` the time and `μ ≥ 1` the spatial axes.
    pub fn coord(&self, mu: usize) -> f64 {
        if mu == 0 {
            self.t
        } else {
            self.x[mu - 1]
        }
    }

    pub fn coord_mut(&mut self, mu: usize) -> &mut f64 {
        if mu == 0 {
            &mut self.t
        } else {
            &mut self.x[mu - 1]
        }
    }

    pub fn spatial_distance(&self, other: &Event) -> f64 {
        self.x.iter().zip(&other.x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }
}

/// `N` events, one per particle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpacetimeConfig {
    pub points: Vec<Event>,
}

impl SpacetimeConfig {
    pub fn new(points: Vec<Event>) -> Result<Self> {
        let first = points.first().ok_or_else(|| Error::invalid("configuration needs at least one particle"))?;
        let d = first.space_dim();
        if d != 1 && d != 3 {
            return Err(Error::invalid(format!("space dimension must be 1 or 3, got {d}")));
        }
        if points.iter().any(|p| p.space_dim() != d) {
            return Err(Error::shape("all events must share one space dimension"));
        }
        if points.iter().any(|p| !p.t.is_finite() || p.x.iter().any(|x| !x.is_finite())) {
            return Err(Error::invalid("configuration coordinates must be finite"));
        }
        Ok(SpacetimeConfig { points })
    }

    /// 1D configuration from `(t, x)` pairs.
    pub fn line(points: &[(f64, f64)]) -> Result<Self> {
        Self::new(points.iter().map(|&(t, x)| Event::new(t, vec![x])).collect())
    }

    pub fn n_particles(&self) -> usize {
        self.points.len()
    }

    pub fn space_dim(&self) -> usize {
        self.points[0].space_dim()
    }

    pub fn times(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.t).collect()
    }
}
