//! Piecewise-linear curves in the space of time tuples.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Polyline `γ` through `vertices`, with `steps[i]` integration steps on the
/// segment from vertex `i` to vertex `i + 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimePath {
    vertices: Vec<Vec<f64>>,
    steps: Vec<usize>,
}

impl TimePath {
    pub fn new(vertices: Vec<Vec<f64>>, steps: Vec<usize>) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::invalid("a path needs at least two vertices"));
        }
        let n = vertices[0].len();
        if n == 0 {
            return Err(Error::invalid("path vertices must have at least one coordinate"));
        }
        if vertices.iter().any(|v| v.len() != n) {
            return Err(Error::shape("all path vertices must have the same dimension"));
        }
        if vertices.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::invalid("path vertices must be finite"));
        }
        if steps.len() != vertices.len() - 1 {
            return Err(Error::shape(format!(
                "{} segments but {} step counts",
                vertices.len() - 1,
                steps.len()
            )));
        }
        if steps.contains(&0) {
            return Err(Error::invalid("every segment needs at least one step"));
        }
        if vertices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("consecutive path vertices must be distinct"));
        }
        Ok(TimePath { vertices, steps })
    }

    /// Same step count on every segment.
    pub fn uniform(vertices: Vec<Vec<f64>>, steps_per_segment: usize) -> Result<Self> {
        let n = vertices.len().saturating_sub(1);
        Self::new(vertices, vec![steps_per_segment; n])
    }

    /// The zero-length path sitting at `point`; its propagator is `I`.
    pub fn stationary(point: Vec<f64>) -> Self {
        TimePath { vertices: vec![point.clone(), point], steps: vec![1] }
    }

    /// Axiparallel staircase from `start` through the listed moves; each move
    /// is `(axis, displacement)`. Zero moves are dropped.
    pub fn staircase(start: &[f64], moves: &[(usize, f64)], steps_per_segment: usize) -> Result<Self> {
        let mut vertices = vec![start.to_vec()];
        for &(axis, d) in moves {
            if axis >= start.len() {
                return Err(Error::invalid(format!("axis {axis} out of range")));
            }
            if d == 0.0 {
                continue;
            }
            let mut next = vertices.last().unwrap().clone();
            next[axis] += d;
            vertices.push(next);
        }
        if vertices.len() == 1 {
            return Ok(Self::stationary(start.to_vec()));
        }
        Self::uniform(vertices, steps_per_segment)
    }

    /// Counterclockwise boundary of the axiparallel rectangle with lower-left
    /// `corner` and sides `a` along axis `j`, `b` along axis `k`.
    pub fn rectangle(corner: &[f64], j: usize, k: usize, a: f64, b: f64, steps_per_segment: usize) -> Result<Self> {
        if j == k {
            return Err(Error::invalid("rectangle axes must differ"));
        }
        Self::staircase(corner, &[(j, a), (k, b), (j, -a), (k, -b)], steps_per_segment)
    }

    pub fn n_times(&self) -> usize {
        self.vertices[0].len()
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn steps(&self) -> &[usize] {
        &self.steps
    }

    pub fn start(&self) -> &[f64] {
        &self.vertices[0]
    }

    pub fn end(&self) -> &[f64] {
        self.vertices.last().unwrap()
    }

    pub fn is_closed(&self) -> bool {
        self.start() == self.end()
    }

    pub fn is_stationary(&self) -> bool {
        self.vertices.windows(2).all(|w| w[0] == w[1])
    }

    /// Every segment moves exactly one coordinate.
    pub fn is_axiparallel(&self) -> bool {
        self.vertices.windows(2).all(|w| w[0].iter().zip(&w[1]).filter(|(a, b)| a != b).count() == 1)
    }

    /// Total `ℓ¹` length `Σ_segments Σ_j |Δγ_j|`.
    pub fn l1_length(&self) -> f64 {
        self.vertices
            .windows(2)
            .map(|w| w[0].iter().zip(&w[1]).map(|(a, b)| (b - a).abs()).sum::<f64>())
            .sum()
    }

    pub fn reversed(&self) -> Self {
        let mut vertices = self.vertices.clone();
        vertices.reverse();
        let mut steps = self.steps.clone();
        steps.reverse();
        TimePath { vertices, steps }
    }

    /// `self` followed by `next`; `next` must start where `self` ends.
    pub fn concat(&self, next: &TimePath) -> Result<Self> {
        if self.end() != next.start() {
            return Err(Error::invalid("concatenated paths must share the junction point"));
        }
        let mut vertices = self.vertices.clone();
        vertices.extend(next.vertices[1..].iter().cloned());
        let mut steps = self.steps.clone();
        steps.extend_from_slice(&next.steps);
        Ok(TimePath { vertices, steps })
    }

    /// Iterates over `(segment_start, segment_end, steps)`.
    pub fn segments(&self) -> impl Iterator<Item = (&[f64], &[f64], usize)> + '_ {
        self.vertices
            .windows(2)
            .zip(&self.steps)
            .map(|(w, &s)| (w[0].as_slice(), w[1].as_slice(), s))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rectangle_is_closed_and_axiparallel() {
        let p = TimePath::rectangle(&[0.0, 0.0], 0, 1, 1.0, 2.0, 4).unwrap();
        assert!(p.is_closed());
        assert!(p.is_axiparallel());
        assert_eq!(p.l1_length(), 6.0);
    }

    #[test]
    fn validation() {
        assert!(TimePath::uniform(vec![vec![0.0]], 1).is_err());
        assert!(TimePath::uniform(vec![vec![0.0], vec![0.0]], 1).is_err());
        assert!(TimePath::new(vec![vec![0.0], vec![1.0]], vec![0]).is_err());
        assert!(TimePath::uniform(vec![vec![0.0, 1.0], vec![1.0]], 1).is_err());
        let diag = TimePath::uniform(vec![vec![0.0, 0.0], vec![1.0, 1.0]], 3).unwrap();
        assert!(!diag.is_axiparallel());
    }

    #[test]
    fn concat_and_reverse() {
        let a = TimePath::staircase(&[0.0, 0.0], &[(0, 1.0)], 2).unwrap();
        let b = TimePath::staircase(&[1.0, 0.0], &[(1, 1.0)], 3).unwrap();
        let ab = a.concat(&b).unwrap();
        assert_eq!(ab.end(), &[1.0, 1.0]);
        assert_eq!(ab.reversed().start(), &[1.0, 1.0]);
        assert_eq!(ab.reversed().steps(), &[3, 2]);
        assert!(b.concat(&a).is_err());
    }
}
