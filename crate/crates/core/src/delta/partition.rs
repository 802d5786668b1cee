//! δ-spacelike configurations and the lattice of particle partitions.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::SpacetimeConfig;

/// Disjoint blocks covering `{0, …, N−1}`, normalized so that each block is
/// sorted and blocks are ordered by their smallest member.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<usize>>", into = "Vec<Vec<usize>>")]
pub struct Partition {
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    pub fn new(mut blocks: Vec<Vec<usize>>) -> Result<Self> {
        let n: usize = blocks.iter().map(Vec::len).sum();
        let mut seen = vec![false; n];
        for b in &blocks {
            if b.is_empty() {
                return Err(Error::invalid("partition blocks must be non-empty"));
            }
            for &i in b {
                if i >= n || std::mem::replace(&mut seen[i], true) {
                    return Err(Error::invalid(format!("blocks {blocks:?} do not partition 0..{n}")));
                }
            }
        }
        for b in &mut blocks {
            b.sort_unstable();
        }
        blocks.sort_unstable_by_key(|b| b[0]);
        Ok(Partition { blocks })
    }

    pub fn one_block(n: usize) -> Self {
        Partition { blocks: vec![(0..n).collect()] }
    }

    pub fn singletons(n: usize) -> Self {
        Partition { blocks: (0..n).map(|i| vec![i]).collect() }
    }

    /// Classes of an equivalence relation given as a predicate.
    pub fn from_relation(n: usize, related: impl Fn(usize, usize) -> bool) -> Self {
        let mut parent: Vec<usize> = (0..n).collect();
        fn root(p: &mut [usize], mut i: usize) -> usize {
            while p[i] != i {
                p[i] = p[p[i]];
                i = p[i];
            }
            i
        }
        for j in 0..n {
            for k in j + 1..n {
                if related(j, k) {
                    let (a, b) = (root(&mut parent, j), root(&mut parent, k));
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        let mut slot = vec![usize::MAX; n];
        for i in 0..n {
            let r = root(&mut parent, i);
            if slot[r] == usize::MAX {
                slot[r] = blocks.len();
                blocks.push(Vec::new());
            }
            blocks[slot[r]].push(i);
        }
        Partition { blocks }
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn n_particles(&self) -> usize {
        self.blocks.iter().map(Vec::len).sum()
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn block_of(&self, i: usize) -> Option<usize> {
        self.blocks.iter().position(|b| b.contains(&i))
    }

    /// `self ≤ other`: every block of `self` lies inside a block of `other`.
    pub fn refines(&self, other: &Partition) -> bool {
        self.n_particles() == other.n_particles()
            && self.blocks.iter().all(|b| other.blocks.iter().any(|o| b.iter().all(|i| o.contains(i))))
    }

    /// Every partition of `{0, …, n−1}`, via restricted growth strings.
    pub fn enumerate(n: usize) -> Vec<Partition> {
        let mut out = Vec::new();
        if n == 0 {
            return out;
        }
        let mut a = vec![0usize; n];
        loop {
            let k = a.iter().max().unwrap() + 1;
            let mut blocks = vec![Vec::new(); k];
            for (i, &b) in a.iter().enumerate() {
                blocks[b].push(i);
            }
            out.push(Partition { blocks });
            // next restricted growth string
            let mut i = n - 1;
            loop {
                if i == 0 {
                    return out;
                }
                let max_prefix = a[..i].iter().max().copied().unwrap_or(0);
                if a[i] <= max_prefix {
                    a[i] += 1;
                    a[i + 1..].iter_mut().for_each(|x| *x = 0);
                    break;
                }
                i -= 1;
            }
        }
    }
}

impl TryFrom<Vec<Vec<usize>>> for Partition {
    type Error = Error;
    fn try_from(blocks: Vec<Vec<usize>>) -> Result<Self> {
        Partition::new(blocks)
    }
}

impl From<Partition> for Vec<Vec<usize>> {
    fn from(p: Partition) -> Self {
        p.blocks
    }
}

/// Prints one-based particle labels, `{{1,2},{3}}`.
impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, b) in self.blocks.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            let labels: Vec<String> = b.iter().map(|i| (i + 1).to_string()).collect();
            write!(f, "{{{}}}", labels.join(","))?;
        }
        f.write_str("}")
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::invalid(format!("delta must be positive and finite, got {delta}")));
    }
    Ok(())
}

/// Pairwise: spacelike separated or equal events.
pub fn is_spacelike(q: &SpacetimeConfig) -> bool {
    let p = &q.points;
    (0..p.len()).all(|j| {
        (j + 1..p.len()).all(|k| {
            let dt = p[j].t - p[k].t;
            let dx = p[j].spatial_distance(&p[k]);
            dt * dt - dx * dx < 0.0 || p[j] == p[k]
        })
    })
}

/// Cross-time pairs must satisfy `‖x_j − x_k‖ > |t_j − t_k| + δ + margin`.
/// Comparisons are exact floating-point; `margin` keeps callers away from
/// the boundary of the open set.
fn far_apart(q: &SpacetimeConfig, j: usize, k: usize, delta: f64, margin: f64) -> bool {
    let (a, b) = (&q.points[j], &q.points[k]);
    a.spatial_distance(b) > (a.t - b.t).abs() + delta + margin
}

pub fn is_delta_spacelike(q: &SpacetimeConfig, delta: f64) -> Result<bool> {
    is_delta_spacelike_with_margin(q, delta, 0.0)
}

pub fn is_delta_spacelike_with_margin(q: &SpacetimeConfig, delta: f64, margin: f64) -> Result<bool> {
    check_delta(delta)?;
    let n = q.n_particles();
    Ok((0..n).all(|j| (j + 1..n).all(|k| q.points[j].t == q.points[k].t || far_apart(q, j, k, delta, margin))))
}

pub fn in_s_delta_p(q: &SpacetimeConfig, p: &Partition, delta: f64) -> Result<bool> {
    in_s_delta_p_with_margin(q, p, delta, 0.0)
}

pub fn in_s_delta_p_with_margin(q: &SpacetimeConfig, p: &Partition, delta: f64, margin: f64) -> Result<bool> {
    check_delta(delta)?;
    if p.n_particles() != q.n_particles() {
        return Err(Error::shape(format!(
            "partition covers {} particles, configuration has {}",
            p.n_particles(),
            q.n_particles()
        )));
    }
    let same_block_times = p.blocks().iter().all(|b| b.iter().all(|&i| q.points[i].t == q.points[b[0]].t));
    let cross = p.blocks().iter().enumerate().all(|(a, ba)| {
        p.blocks()[a + 1..].iter().all(|bb| ba.iter().all(|&i| bb.iter().all(|&j| far_apart(q, i, j, delta, margin))))
    });
    Ok(same_block_times && cross)
}

fn require_s_delta(q: &SpacetimeConfig, delta: f64) -> Result<()> {
    if !is_delta_spacelike(q, delta)? {
        return Err(Error::invalid(format!("configuration is not δ-spacelike for δ = {delta}")));
    }
    Ok(())
}

/// Equal-time classes: the coarsest partition whose set contains `q`.
pub fn coarsest_partition(q: &SpacetimeConfig, delta: f64) -> Result<Partition> {
    require_s_delta(q, delta)?;
    Ok(Partition::from_relation(q.n_particles(), |j, k| q.points[j].t == q.points[k].t))
}

/// Classes of the transitive hull of `‖x_j − x_k‖ ≤ |t_j − t_k| + δ`.
pub fn finest_partition(q: &SpacetimeConfig, delta: f64) -> Result<Partition> {
    require_s_delta(q, delta)?;
    Ok(Partition::from_relation(q.n_particles(), |j, k| !far_apart(q, j, k, delta, 0.0)))
}

/// All partitions between the finest and the coarsest one, in the order of
/// [`Partition::enumerate`]. Uses enumeration, so only for small `N`.
pub fn admissible_partitions(q: &SpacetimeConfig, delta: f64) -> Result<Vec<Partition>> {
    let fine = finest_partition(q, delta)?;
    let coarse = coarsest_partition(q, delta)?;
    if q.n_particles() > 10 {
        return Err(Error::invalid("partition enumeration is limited to 10 particles"));
    }
    Ok(Partition::enumerate(q.n_particles()).into_iter().filter(|p| fine.refines(p) && p.refines(&coarse)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bell_numbers() {
        let counts: Vec<usize> = (1..=6).map(|n| Partition::enumerate(n).len()).collect();
        assert_eq!(counts, [1, 2, 5, 15, 52, 203]);
    }

    #[test]
    fn normalization_and_display() {
        let p = Partition::new(vec![vec![4, 3], vec![2, 0, 1]]).unwrap();
        assert_eq!(p.blocks(), &[vec![0, 1, 2], vec![3, 4]]);
        assert_eq!(p.to_string(), "{{1,2,3},{4,5}}");
        assert!(Partition::new(vec![vec![0], vec![0, 1]]).is_err());
        assert!(Partition::new(vec![vec![0], vec![]]).is_err());
    }

    #[test]
    fn spacelike_cases() {
        assert!(is_spacelike(&SpacetimeConfig::line(&[(0.0, 0.0), (0.0, 1.0)]).unwrap()));
        assert!(!is_spacelike(&SpacetimeConfig::line(&[(0.0, 0.0), (1.0, 0.0)]).unwrap()));
        assert!(!is_spacelike(&SpacetimeConfig::line(&[(0.0, 0.0), (1.0, 1.0)]).unwrap()));
        assert!(is_spacelike(&SpacetimeConfig::line(&[(0.5, 2.0), (0.5, 2.0)]).unwrap()));
    }

    #[test]
    fn strict_boundary() {
        let q = SpacetimeConfig::line(&[(0.0, 0.0), (1.0, 1.5)]).unwrap();
        assert!(!is_delta_spacelike(&q, 0.5).unwrap());
        assert!(is_delta_spacelike(&q, 0.49).unwrap());
        assert!(!is_delta_spacelike_with_margin(&q, 0.49, 0.1).unwrap());
        assert!(is_delta_spacelike(&q, 0.0).is_err());
    }

    #[test]
    fn two_families_like_the_figure() {
        let q = SpacetimeConfig::line(&[(0.0, 0.0), (0.0, 0.3), (0.0, 5.0), (1.0, 10.0), (1.0, 10.2)]).unwrap();
        let s1s2 = Partition::new(vec![vec![0, 1, 2], vec![3, 4]]).unwrap();
        assert!(in_s_delta_p(&q, &s1s2, 0.5).unwrap());
        assert_eq!(coarsest_partition(&q, 0.5).unwrap(), s1s2);
        let fine = finest_partition(&q, 0.5).unwrap();
        assert_eq!(fine.blocks(), &[vec![0, 1], vec![2], vec![3, 4]]);
        assert_eq!(admissible_partitions(&q, 0.5).unwrap().len(), 2);
    }

    #[test]
    fn close_equal_time_pair_cannot_split() {
        let q = SpacetimeConfig::line(&[(0.2, 0.0), (0.2, 0.1)]).unwrap();
        let admissible = admissible_partitions(&q, 0.5).unwrap();
        assert_eq!(admissible, vec![Partition::one_block(2)]);
    }
}
