//! Wiener increments: seeded per-trajectory Gaussian streams, replay of a
//! stored path, and Brownian-bridge refinement of a path onto a finer grid.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// One scalar Wiener increment over a step of length `dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseIncrement {
    pub dw: f64,
    pub dt: f64,
}

impl NoiseIncrement {
    pub fn new(dw: f64, dt: f64) -> Self {
        Self { dw, dt }
    }
}

/// Three independent Wiener increments over a common step `dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VectorNoise {
    pub dw: [f64; 3],
    pub dt: f64,
}

impl VectorNoise {
    pub fn new(dw: [f64; 3], dt: f64) -> Self {
        Self { dw, dt }
    }

    pub fn component(&self, k: usize) -> NoiseIncrement {
        NoiseIncrement::new(self.dw[k], self.dt)
    }
}

/// The RNG for trajectory `index` of an ensemble seeded with `seed`. Each
/// trajectory owns an independent ChaCha stream, so results do not depend
/// on which worker runs it or in what order.
pub fn trajectory_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Anything that can hand out successive three-component increments.
pub trait NoiseSource {
    fn next_increment(&mut self, dt: f64) -> Result<VectorNoise>;
}

/// Fresh Gaussian increments with variance `dt` per component.
#[derive(Debug, Clone)]
pub struct GaussianNoise {
    rng: ChaCha8Rng,
}

impl GaussianNoise {
    pub fn new(seed: u64, index: u64) -> Self {
        Self { rng: trajectory_rng(seed, index) }
    }

    pub fn from_rng(rng: ChaCha8Rng) -> Self {
        Self { rng }
    }
}

impl NoiseSource for GaussianNoise {
    fn next_increment(&mut self, dt: f64) -> Result<VectorNoise> {
        let sd = dt.sqrt();
        let mut dw = [0.0; 3];
        for c in &mut dw {
            let z: f64 = self.rng.sample(StandardNormal);
            *c = sd * z;
        }
        Ok(VectorNoise::new(dw, dt))
    }
}

/// Replays a stored path of increments on a fixed step.
#[derive(Debug, Clone)]
pub struct PathNoise {
    increments: Vec<[f64; 3]>,
    dt: f64,
    position: usize,
}

impl PathNoise {
    pub fn new(increments: Vec<[f64; 3]>, dt: f64) -> Self {
        Self { increments, dt, position: 0 }
    }

    /// Draws `steps` increments of size `dt` from a Gaussian stream.
    pub fn sample(seed: u64, index: u64, steps: usize, dt: f64) -> Self {
        let mut source = GaussianNoise::new(seed, index);
        let increments = (0..steps)
            .map(|_| source.next_increment(dt).map(|n| n.dw).expect("gaussian noise is infallible"))
            .collect();
        Self::new(increments, dt)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn increments(&self) -> &[[f64; 3]] {
        &self.increments
    }

    /// Splits every step in two with a Brownian bridge; the sums over each
    /// pair reproduce the coarse increments exactly, up to rounding.
    pub fn refine<R: Rng>(&self, rng: &mut R) -> PathNoise {
        let half = self.dt / 2.0;
        let bridge_sd = self.dt.sqrt() / 2.0;
        let mut fine = Vec::with_capacity(2 * self.increments.len());
        for coarse in &self.increments {
            let mut first = [0.0; 3];
            let mut second = [0.0; 3];
            for k in 0..3 {
                let z: f64 = rng.sample(StandardNormal);
                first[k] = coarse[k] / 2.0 + bridge_sd * z;
                second[k] = coarse[k] - first[k];
            }
            fine.push(first);
            fine.push(second);
        }
        PathNoise::new(fine, half)
    }
}

impl NoiseSource for PathNoise {
    fn next_increment(&mut self, dt: f64) -> Result<VectorNoise> {
        if (dt - self.dt).abs() > 1e-12 * self.dt {
            return Err(Error::InvalidParameter(format!("stored path has step {}, requested {dt}", self.dt)));
        }
        let dw = *self
            .increments
            .get(self.position)
            .ok_or_else(|| Error::Domain(format!("stored noise path exhausted after {} steps", self.position)))?;
        self.position += 1;
        Ok(VectorNoise::new(dw, dt))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::mean_estimate;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let mut a = GaussianNoise::new(7, 3);
        let mut b = GaussianNoise::new(7, 3);
        let mut c = GaussianNoise::new(7, 4);
        let x = a.next_increment(1.0).unwrap();
        assert_eq!(x, b.next_increment(1.0).unwrap());
        assert_ne!(x, c.next_increment(1.0).unwrap());
    }

    #[test]
    fn variance_contract() {
        let dt = 1e-2;
        let mut src = GaussianNoise::new(1, 0);
        let mut comps = [Vec::new(), Vec::new(), Vec::new()];
        let mut cross = Vec::new();
        for _ in 0..40_000 {
            let n = src.next_increment(dt).unwrap();
            for k in 0..3 {
                comps[k].push(n.dw[k] * n.dw[k] / dt);
            }
            cross.push(n.dw[0] * n.dw[1] / dt);
        }
        for c in &comps {
            let m = mean_estimate(c);
            assert!(m.within(1.0, 4.0), "variance ratio {}", m.mean);
        }
        assert!(mean_estimate(&cross).within(0.0, 4.0));
    }

    #[test]
    fn bridge_preserves_coarse_sums() {
        let path = PathNoise::sample(11, 0, 50, 1e-3);
        let fine = path.refine(&mut trajectory_rng(99, 0));
        assert_eq!(fine.increments().len(), 100);
        assert_eq!(fine.dt(), 5e-4);
        for (i, coarse) in path.increments().iter().enumerate() {
            for k in 0..3 {
                let sum = fine.increments()[2 * i][k] + fine.increments()[2 * i + 1][k];
                assert!((sum - coarse[k]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn replay_runs_out() {
        let mut p = PathNoise::new(vec![[1.0, 2.0, 3.0]], 0.1);
        assert_eq!(p.next_increment(0.1).unwrap().dw, [1.0, 2.0, 3.0]);
        assert!(p.next_increment(0.1).is_err());
        assert!(PathNoise::new(vec![[0.0; 3]], 0.1).next_increment(0.2).is_err());
    }
}
