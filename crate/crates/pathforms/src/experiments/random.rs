//! Seeded random configurations for the randomized checks.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use std::sync::Arc;

use crate::cylinder::{CylFn, CylOneForm, Poly};
use crate::damped::{CmPath, DampedChain, HVectorField};
use crate::divergence::{ConditionalProbe, HFieldSpec, SkewField, SkewShape, SkewTerm, TorsionConfig};
use crate::error::Result;
use crate::linalg::{Mat4, Vec4};
use crate::rng::splitmix64;
use crate::two_tensor::TwoTensorGrid;

/// Evaluation times are drawn from these fractions of the horizon.
pub const TIME_FRACTIONS: [f64; 4] = [0.25, 0.5, 0.75, 1.0];

/// Transported kernel `k_i = ∥_i P_{x_0}(a cos(ω t_i + φ) + b t_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothField {
    pub a: Vec4,
    pub b: Vec4,
    pub omega: f64,
    pub phase: f64,
}

impl SmoothField {
    pub fn realize(&self, chain: &Arc<DampedChain>) -> Result<HVectorField> {
        let p0 = chain.spec().projection(chain.point(0));
        let kernel = (0..chain.n_steps())
            .map(|i| {
                let t = chain.time(i);
                chain.par[i] * p0 * (self.a * (self.omega * t + self.phase).cos() + self.b * t)
            })
            .collect();
        HVectorField::from_kernel(chain, kernel)
    }
}

/// Dense grid with transported entries `P_0[(1 + st + sin(s − t)) A + cos(ω(s + t)) B]P_0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothGrid {
    pub a: Mat4,
    pub b: Mat4,
    pub omega: f64,
}

impl SmoothGrid {
    pub fn realize(&self, chain: &Arc<DampedChain>) -> TwoTensorGrid {
        let p0 = chain.spec().projection(chain.point(0));
        let (a, b) = (p0 * self.a * p0, p0 * self.b * p0);
        TwoTensorGrid::dense_transported(chain, |i, j| {
            let (s, t) = (chain.time(i), chain.time(j));
            a * (1.0 + s * t + (s - t).sin()) + b * (self.omega * (s + t)).cos()
        })
    }
}

pub struct ConfigRng {
    rng: ChaCha8Rng,
    m: usize,
    horizon: f64,
}

impl ConfigRng {
    pub fn new(seed: u64, tag: u64, m: usize, horizon: f64) -> Self {
        ConfigRng { rng: ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(tag))), m, horizon }
    }

    fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn vector(&mut self) -> Vec4 {
        let mut v = Vec4::zeros();
        for i in 0..self.m {
            v[i] = self.normal();
        }
        v
    }

    pub fn unit_vector(&mut self) -> Vec4 {
        let v = self.vector();
        v / v.norm().max(1e-12)
    }

    pub fn time(&mut self) -> f64 {
        TIME_FRACTIONS[self.rng.gen_range(0..TIME_FRACTIONS.len())] * self.horizon
    }

    /// Node index of a random evaluation time on an `n`-step grid.
    pub fn node(&mut self, n: usize) -> usize {
        ((self.time() / self.horizon) * n as f64).round() as usize
    }

    /// One or two modes with frequencies in `[0, 3)`.
    pub fn cm_path(&mut self) -> CmPath {
        let modes = self.rng.gen_range(1..=2);
        CmPath::new(
            (0..modes)
                .map(|_| {
                    let a = self.vector();
                    (a, self.rng.gen_range(0.0..3.0), self.rng.gen_range(0.0..std::f64::consts::TAU))
                })
                .collect(),
        )
    }

    /// `c + ⟨p, x⟩ + b x_i x_j` in the coordinates of a point.
    pub fn point_poly(&mut self) -> Poly {
        let mut terms = vec![(0.5 * self.normal(), vec![])];
        for i in 0..self.m {
            terms.push((self.normal(), vec![(i, 1)]));
        }
        let (i, j) = (self.rng.gen_range(0..self.m), self.rng.gen_range(0..self.m));
        let mono = if i == j { vec![(i, 2)] } else { vec![(i, 1), (j, 1)] };
        terms.push((0.5 * self.normal(), mono));
        Poly::new(4, terms).expect("degree within bound")
    }

    /// Product of linear functions of the path at one or two random times.
    pub fn cyl_fn(&mut self) -> Result<CylFn> {
        let f = CylFn::linear(self.time(), &self.vector())?;
        if self.rng.gen_bool(0.5) {
            let g = CylFn::linear(self.time(), &self.vector())?;
            Ok(f.mul(&g))
        } else {
            Ok(f)
        }
    }

    pub fn one_form(&mut self) -> Result<CylOneForm> {
        let coef = self.cyl_fn()?;
        let t = self.time();
        let g = self.point_poly();
        CylOneForm::single(coef, t, g)
    }

    pub fn skew_matrix(&mut self) -> Mat4 {
        let mut k = Mat4::zeros();
        for i in 0..self.m {
            for j in i + 1..self.m {
                let a = self.normal();
                k[(i, j)] = a;
                k[(j, i)] = -a;
            }
        }
        k
    }

    /// Adapted skew field with a polynomial coefficient in the current point.
    pub fn skew_field(&mut self) -> SkewField {
        let terms = (0..self.rng.gen_range(1..=2))
            .map(|_| SkewTerm { coef: self.point_poly(), freq: self.rng.gen_range(0.0..3.0), shape: SkewShape::Ambient(self.skew_matrix()) })
            .collect();
        SkewField { terms }
    }

    pub fn smooth_field(&mut self) -> SmoothField {
        SmoothField { a: self.vector(), b: self.vector(), omega: self.rng.gen_range(0.0..3.0), phase: self.rng.gen_range(0.0..std::f64::consts::TAU) }
    }

    /// Antisymmetric entries, so the grid is a two-vector.
    pub fn smooth_grid(&mut self) -> SmoothGrid {
        SmoothGrid { a: self.skew_matrix(), b: self.skew_matrix(), omega: self.rng.gen_range(0.0..3.0) }
    }

    pub fn torsion_config(&mut self) -> Result<TorsionConfig> {
        Ok(TorsionConfig { u1: HFieldSpec::adapted(self.cm_path()), u2: HFieldSpec::adapted(self.cm_path()), phi: self.one_form()? })
    }

    pub fn one_vector_probe(&mut self, n: usize) -> Result<ConditionalProbe> {
        Ok(ConditionalProbe::OneVector { h: self.cm_path(), f: self.cyl_fn()?, node: self.node(n), p: self.vector() })
    }

    pub fn two_vector_probe(&mut self, n: usize) -> Result<ConditionalProbe> {
        let (a, b) = (self.node(n), self.node(n));
        Ok(ConditionalProbe::TwoVector {
            h1: self.cm_path(),
            h2: self.cm_path(),
            f: self.cyl_fn()?,
            s: a.min(b),
            t: a.max(b),
            p: self.vector(),
            q: self.vector(),
        })
    }
}
