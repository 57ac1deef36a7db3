//! Counter-based Brownian drivers.
//!
//! The increment of step `i` for sample `k` is drawn from a ChaCha8 stream
//! keyed by `(seed, k, i)`, so any increment can be regenerated in
//! isolation and results do not depend on thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{Vec4, MAX_AMBIENT};

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn stream_key(seed: u64, sample: u64, step: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ sample) ^ step)
}

pub fn step_rng(seed: u64, sample: u64, step: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_key(seed, sample, step))
}

/// Standard normal draws keyed by `(seed, sample, step)`.
pub fn normals(seed: u64, sample: u64, step: u64, m: usize) -> Vec4 {
    let mut rng = step_rng(seed, sample, step);
    let mut z = Vec4::zeros();
    for i in 0..m {
        z[i] = StandardNormal.sample(&mut rng);
    }
    z
}

/// Brownian increments `ΔB_i ∈ R^m` on a uniform grid of `[0, T]`.
#[derive(Debug, Clone)]
pub struct Driver {
    pub ambient_dim: usize,
    pub dt: f64,
    pub increments: Vec<Vec4>,
}

impl Driver {
    pub fn generate(seed: u64, sample: u64, n_steps: usize, horizon: f64, ambient_dim: usize) -> Result<Self> {
        if n_steps == 0 || !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidArgument(format!("need N ≥ 1 and T > 0, got N={n_steps}, T={horizon}")));
        }
        if ambient_dim == 0 || ambient_dim > MAX_AMBIENT {
            return Err(Error::Dimension(format!("ambient dimension {ambient_dim}")));
        }
        let dt = horizon / n_steps as f64;
        let sd = dt.sqrt();
        let increments = (0..n_steps).map(|i| sd * normals(seed, sample, i as u64, ambient_dim)).collect();
        Ok(Driver { ambient_dim, dt, increments })
    }

    pub fn from_increments(increments: Vec<Vec4>, dt: f64, ambient_dim: usize) -> Result<Self> {
        if increments.is_empty() || !(dt > 0.0) {
            return Err(Error::InvalidArgument("empty driver or non-positive step".into()));
        }
        Ok(Driver { ambient_dim, dt, increments })
    }

    /// A zero driver; the path stays at its starting point.
    pub fn zero(n_steps: usize, horizon: f64, ambient_dim: usize) -> Result<Self> {
        Self::from_increments(vec![Vec4::zeros(); n_steps], horizon / n_steps as f64, ambient_dim)
    }

    pub fn n_steps(&self) -> usize {
        self.increments.len()
    }

    pub fn horizon(&self) -> f64 {
        self.dt * self.n_steps() as f64
    }

    /// The same Brownian path on a grid with half as many steps.
    pub fn coarsen(&self) -> Result<Self> {
        if self.n_steps() % 2 != 0 {
            return Err(Error::InvalidArgument("coarsening needs an even step count".into()));
        }
        let increments = self.increments.chunks(2).map(|c| c[0] + c[1]).collect();
        Ok(Driver { ambient_dim: self.ambient_dim, dt: 2.0 * self.dt, increments })
    }

    /// `B_{t_i}` with `B_0 = 0`.
    pub fn brownian(&self) -> Vec<Vec4> {
        let mut out = Vec::with_capacity(self.n_steps() + 1);
        let mut b = Vec4::zeros();
        out.push(b);
        for d in &self.increments {
            b += d;
            out.push(b);
        }
        out
    }
}
