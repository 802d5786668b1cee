//! Seeded random configurations for residual scans.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::Event;

/// Default exclusion radius around coincident points.
pub const MIN_SEPARATION: f64 = 1e-2;

#[derive(Clone, Debug)]
pub struct SampleBox {
    pub n_particles: usize,
    pub space_dim: usize,
    /// Times drawn from `[−time_extent, time_extent]`.
    pub time_extent: f64,
    /// Coordinates drawn from `[−space_extent, space_extent]`.
    pub space_extent: f64,
}

#[derive(Clone, Debug)]
pub struct Samples {
    pub configs: Vec<Vec<Event>>,
    /// Draws discarded because two particles came closer than the exclusion
    /// radius.
    pub rejected: usize,
}

/// Draws `count` configurations, rejecting those with a spatial pair
/// distance below `min_separation`.
pub fn sample_configurations(spec: &SampleBox, count: usize, seed: u64, min_separation: f64) -> Result<Samples> {
    if spec.space_dim != 1 && spec.space_dim != 3 {
        return Err(Error::invalid("space dimension must be 1 or 3"));
    }
    if !(spec.time_extent >= 0.0 && spec.space_extent > 0.0) {
        return Err(Error::invalid("sample extents must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut configs = Vec::with_capacity(count);
    let mut rejected = 0;
    let max_draws = 1000 * count.max(1);
    while configs.len() < count {
        if configs.len() + rejected >= max_draws {
            return Err(Error::invalid("exclusion radius rejects almost every draw; enlarge the sampling box"));
        }
        let q: Vec<Event> = (0..spec.n_particles)
            .map(|_| {
                let t = if spec.time_extent > 0.0 { rng.random_range(-spec.time_extent..=spec.time_extent) } else { 0.0 };
                let x = (0..spec.space_dim).map(|_| rng.random_range(-spec.space_extent..=spec.space_extent)).collect();
                Event::new(t, x)
            })
            .collect();
        let too_close = (0..q.len()).any(|a| (a + 1..q.len()).any(|b| q[a].spatial_distance(&q[b]) < min_separation));
        if too_close {
            rejected += 1;
        } else {
            configs.push(q);
        }
    }
    Ok(Samples { configs, rejected })
}
