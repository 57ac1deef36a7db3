//! Damped parallel transport `W`, its action `W2` on two-vectors, and the
//! Cameron–Martin type fields `𝒲(u)_t = W_t ∫_0^t W_r⁻¹ u_r dr`.
//!
//! Integrals over cells use the left endpoint, matching the adapted
//! (Itô) convention of the increments. With that choice `script_w` and
//! `dd_dt` are exact inverses on the grid.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{skew_coords, skew_from_coords, skew_operator_matrix, Mat4, Mat6, Vec4};
use crate::manifold::ManifoldSpec;
use crate::path::{transport_chain, DiscretePath};

static NEXT_ID: AtomicU64 = AtomicU64::new(1);

/// Transported two-vector chain `Θ2`, with `W2_i = ∧²∥_i ∘ Θ2_i`.
#[derive(Debug, Clone)]
struct WedgeChain {
    theta2: Vec<Mat6>,
    theta2_inv: Vec<Mat6>,
}

/// Parallel and damped transport along one discrete path.
#[derive(Debug)]
pub struct DampedChain {
    pub path: DiscretePath,
    pub par: Vec<Mat4>,
    pub theta: Vec<Mat4>,
    pub theta_inv: Vec<Mat4>,
    w: Vec<Mat4>,
    w_inv: Vec<Mat4>,
    wedge: Option<WedgeChain>,
    id: u64,
}

fn midpoint_step<const D: usize>(
    theta: &nalgebra::SMatrix<f64, D, D>,
    a0: &nalgebra::SMatrix<f64, D, D>,
    a1: &nalgebra::SMatrix<f64, D, D>,
    dt: f64,
) -> nalgebra::SMatrix<f64, D, D> {
    // Θ' = −½ A(t) Θ, explicit midpoint.
    let half = theta - 0.25 * dt * a0 * theta;
    let amid = 0.5 * (a0 + a1);
    theta - 0.5 * dt * amid * half
}

impl DampedChain {
    /// Builds `∥`, `W` and `W2`.
    pub fn build(path: DiscretePath) -> Result<Arc<Self>> {
        Self::build_inner(path, true)
    }

    /// Builds `∥` and `W` only; two-vector transport is unavailable.
    pub fn build_vector_only(path: DiscretePath) -> Result<Arc<Self>> {
        Self::build_inner(path, false)
    }

    fn build_inner(path: DiscretePath, with_wedge: bool) -> Result<Arc<Self>> {
        let spec = path.spec;
        let n = path.n_steps();
        let dt = path.dt;
        let par = transport_chain(&path);
        let flat = spec.is_flat();

        let mut theta = Vec::with_capacity(n + 1);
        let mut theta_inv = Vec::with_capacity(n + 1);
        theta.push(Mat4::identity());
        theta_inv.push(Mat4::identity());
        if flat {
            theta.resize(n + 1, Mat4::identity());
            theta_inv.resize(n + 1, Mat4::identity());
        } else {
            let ric: Vec<Mat4> = (0..=n)
                .map(|i| par[i].transpose() * spec.ricci_matrix(&path.points[i]) * par[i])
                .collect();
            for i in 0..n {
                let next = midpoint_step(&theta[i], &ric[i], &ric[i + 1], dt);
                let inv = next
                    .try_inverse()
                    .ok_or_else(|| Error::InvalidArgument("singular damped transport".into()))?;
                theta.push(next);
                theta_inv.push(inv);
            }
        }
        let w: Vec<Mat4> = par.iter().zip(&theta).map(|(p, t)| p * t).collect();
        let w_inv: Vec<Mat4> = par.iter().zip(&theta_inv).map(|(p, t)| t * p.transpose()).collect();

        let wedge = if !with_wedge {
            None
        } else if flat {
            Some(WedgeChain { theta2: vec![Mat6::identity(); n + 1], theta2_inv: vec![Mat6::identity(); n + 1] })
        } else {
            let m = spec.ambient_dim();
            let r2: Vec<Mat6> = (0..=n)
                .map(|i| {
                    let p = par[i];
                    let x = path.points[i];
                    skew_operator_matrix(m, |a| p.transpose() * spec.weitzenbock2(&x, &(p * a * p.transpose())) * p)
                })
                .collect();
            let mut theta2 = vec![Mat6::identity()];
            let mut theta2_inv = vec![Mat6::identity()];
            for i in 0..n {
                let next = midpoint_step(&theta2[i], &r2[i], &r2[i + 1], dt);
                let inv = next
                    .try_inverse()
                    .ok_or_else(|| Error::InvalidArgument("singular two-vector transport".into()))?;
                theta2.push(next);
                theta2_inv.push(inv);
            }
            Some(WedgeChain { theta2, theta2_inv })
        };

        Ok(Arc::new(DampedChain {
            path,
            par,
            theta,
            theta_inv,
            w,
            w_inv,
            wedge,
            id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
        }))
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn spec(&self) -> ManifoldSpec {
        self.path.spec
    }

    pub fn n_steps(&self) -> usize {
        self.path.n_steps()
    }

    pub fn dt(&self) -> f64 {
        self.path.dt
    }

    pub fn time(&self, i: usize) -> f64 {
        self.path.time(i)
    }

    pub fn point(&self, i: usize) -> &Vec4 {
        &self.path.points[i]
    }

    pub fn w(&self, i: usize) -> &Mat4 {
        &self.w[i]
    }

    pub fn w_inv(&self, i: usize) -> &Mat4 {
        &self.w_inv[i]
    }

    pub fn has_wedge(&self) -> bool {
        self.wedge.is_some()
    }

    fn wedge(&self) -> Result<&WedgeChain> {
        self.wedge
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("chain was built without two-vector transport".into()))
    }

    /// `Θ2_i` acting on a transported two-vector.
    pub fn theta2_apply(&self, i: usize, a: &Mat4) -> Result<Mat4> {
        Ok(skew_from_coords(&(self.wedge()?.theta2[i] * skew_coords(a))))
    }

    pub fn theta2_inv_apply(&self, i: usize, a: &Mat4) -> Result<Mat4> {
        Ok(skew_from_coords(&(self.wedge()?.theta2_inv[i] * skew_coords(a))))
    }

    /// `W2_i(A) = ∥_i Θ2_i(A) ∥_iᵀ` for `A ∈ ∧²T_{x_0}M`.
    pub fn w2_apply(&self, i: usize, a: &Mat4) -> Result<Mat4> {
        let p = &self.par[i];
        Ok(p * self.theta2_apply(i, a)? * p.transpose())
    }

    /// `W2_i⁻¹(B) = Θ2_i⁻¹(∥_iᵀ B ∥_i)` for `B ∈ ∧²T_{x_i}M`.
    pub fn w2_inv_apply(&self, i: usize, b: &Mat4) -> Result<Mat4> {
        let p = &self.par[i];
        self.theta2_inv_apply(i, &(p.transpose() * b * p))
    }

    pub fn same_path(&self, other: &DampedChain) -> bool {
        self.id == other.id
    }
}

/// `v_{i+1} = W_{i+1} Σ_{r≤i} W_r⁻¹ u_r Δt`, `v_0 = 0`.
pub fn script_w(chain: &DampedChain, kernel: &[Vec4]) -> Result<Vec<Vec4>> {
    let n = chain.n_steps();
    if kernel.len() != n {
        return Err(Error::ResolutionMismatch(kernel.len(), n));
    }
    let dt = chain.dt();
    let mut acc = Vec4::zeros();
    let mut out = Vec::with_capacity(n + 1);
    out.push(Vec4::zeros());
    for (i, u) in kernel.iter().enumerate() {
        acc += chain.w_inv(i) * u * dt;
        out.push(chain.w(i + 1) * acc);
    }
    Ok(out)
}

/// `(𝔻v)_i = W_i (W_{i+1}⁻¹ v_{i+1} − W_i⁻¹ v_i) / Δt`.
pub fn dd_dt(chain: &DampedChain, values: &[Vec4]) -> Result<Vec<Vec4>> {
    let n = chain.n_steps();
    if values.len() != n + 1 {
        return Err(Error::ResolutionMismatch(values.len().saturating_sub(1), n));
    }
    let dt = chain.dt();
    Ok((0..n)
        .map(|i| chain.w(i) * (chain.w_inv(i + 1) * values[i + 1] - chain.w_inv(i) * values[i]) / dt)
        .collect())
}

/// An element of `ℋ` along a fixed path: node values and cell kernel `𝔻v`.
#[derive(Debug, Clone)]
pub struct HVectorField {
    pub chain: Arc<DampedChain>,
    pub values: Vec<Vec4>,
    pub kernel: Vec<Vec4>,
}

impl HVectorField {
    pub fn from_kernel(chain: &Arc<DampedChain>, kernel: Vec<Vec4>) -> Result<Self> {
        let values = script_w(chain, &kernel)?;
        Ok(HVectorField { chain: chain.clone(), values, kernel })
    }

    pub fn from_values(chain: &Arc<DampedChain>, values: Vec<Vec4>) -> Result<Self> {
        let kernel = dd_dt(chain, &values)?;
        if values[0].norm() > 1e-12 {
            return Err(Error::InvalidArgument("an H field must vanish at time 0".into()));
        }
        Ok(HVectorField { chain: chain.clone(), values, kernel })
    }

    pub fn zero(chain: &Arc<DampedChain>) -> Self {
        let n = chain.n_steps();
        HVectorField { chain: chain.clone(), values: vec![Vec4::zeros(); n + 1], kernel: vec![Vec4::zeros(); n] }
    }

    pub fn check_same_path(&self, other: &HVectorField) -> Result<()> {
        if self.chain.same_path(&other.chain) {
            Ok(())
        } else {
            Err(Error::PathMismatch)
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        HVectorField {
            chain: self.chain.clone(),
            values: self.values.iter().map(|v| c * v).collect(),
            kernel: self.kernel.iter().map(|v| c * v).collect(),
        }
    }

    /// `self + c·other`.
    pub fn add_scaled(&self, c: f64, other: &HVectorField) -> Result<Self> {
        self.check_same_path(other)?;
        Ok(HVectorField {
            chain: self.chain.clone(),
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + c * b).collect(),
            kernel: self.kernel.iter().zip(&other.kernel).map(|(a, b)| a + c * b).collect(),
        })
    }

    /// Value at node `i` pulled back to `T_{x_0}M` by `∥_i⁻¹`.
    pub fn transported(&self, i: usize) -> Vec4 {
        self.chain.par[i].transpose() * self.values[i]
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// `⟨v¹, v²⟩_ℋ = Σ ⟨(𝔻v¹)_i, (𝔻v²)_i⟩ Δt`.
pub fn h_inner(a: &HVectorField, b: &HVectorField) -> Result<f64> {
    a.check_same_path(b)?;
    let dt = a.chain.dt();
    Ok(a.kernel.iter().zip(&b.kernel).map(|(x, y)| x.dot(y)).sum::<f64>() * dt)
}

/// A deterministic Cameron–Martin path with `ḣ(t) = Σ a_k cos(ω_k t + φ_k)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CmPath {
    pub modes: Vec<(Vec4, f64, f64)>,
}

impl CmPath {
    pub fn new(modes: Vec<(Vec4, f64, f64)>) -> Self {
        CmPath { modes }
    }

    /// Constant rate `ḣ ≡ a`.
    pub fn linear(a: Vec4) -> Self {
        CmPath { modes: vec![(a, 0.0, 0.0)] }
    }

    pub fn value(&self, t: f64) -> Vec4 {
        let mut h = Vec4::zeros();
        for (a, om, ph) in &self.modes {
            let s = if *om == 0.0 { t * ph.cos() } else { ((om * t + ph).sin() - ph.sin()) / om };
            h += a * s;
        }
        h
    }

    pub fn rate(&self, t: f64) -> Vec4 {
        self.modes.iter().map(|(a, om, ph)| a * (om * t + ph).cos()).sum()
    }

    /// Cell averages of `ḣ`, so that the discrete path hits `h` at every node.
    pub fn cell_rates(&self, n: usize, dt: f64) -> Vec<Vec4> {
        (0..n).map(|i| (self.value((i + 1) as f64 * dt) - self.value(i as f64 * dt)) / dt).collect()
    }
}

/// The conditioned derivative flow `𝕏(h) = 𝒲(X ḣ)`.
pub fn conditional_ti(chain: &Arc<DampedChain>, hdot: &[Vec4]) -> Result<HVectorField> {
    let spec = chain.spec();
    let n = chain.n_steps();
    if hdot.len() != n {
        return Err(Error::ResolutionMismatch(hdot.len(), n));
    }
    let kernel = (0..n).map(|i| spec.projection(chain.point(i)) * hdot[i]).collect();
    HVectorField::from_kernel(chain, kernel)
}

/// Per-step propagators of the derivative flow along a simulated path.
///
/// Uses the Itô form `Dv = ∇_v X(dβ) − ½Ric#(v) dt + X ḣ dt`, where `β` is the
/// kernel part of the driver, with an exponential step in transported
/// coordinates: `ṽ_{i+1} = exp(M_i − ½ Σ_k N_k² Δt − ½ R̃_i Δt) (ṽ_i + ∥_i⁻¹ X ḣ_i Δt)`.
#[derive(Debug, Clone)]
pub struct FlowPropagator {
    pub steps: Vec<Mat4>,
}

impl FlowPropagator {
    pub fn new(chain: &DampedChain) -> Result<Self> {
        let spec = chain.spec();
        let n = chain.n_steps();
        if spec.is_flat() {
            return Ok(FlowPropagator { steps: vec![Mat4::identity(); n] });
        }
        let kern = chain.path.kernel_increments()?;
        let dt = chain.dt();
        let p0 = chain.par[0].transpose() * spec.projection(chain.point(0)) * chain.par[0];
        let steps = (0..n)
            .map(|i| {
                let x = chain.point(i);
                let p = &chain.par[i];
                let conj = |a: Mat4| p.transpose() * a * p;
                let mut gen = conj(spec.nabla_matrix(x, &kern[i])) - 0.5 * dt * conj(spec.ricci_matrix(x));
                // Kernel directions: the normal line at x for the sphere.
                let nk = conj(spec.nabla_matrix(x, x));
                gen -= 0.5 * dt * nk * nk;
                exp_on_projector(&gen, &p0, spec.dim)
            })
            .collect();
        Ok(FlowPropagator { steps })
    }
}

/// `exp(A)` with a shortcut when `A = a·P` for the projector `P`.
fn exp_on_projector(a: &Mat4, p: &Mat4, rank: usize) -> Mat4 {
    let s = (a * p).trace() / rank as f64;
    if (a - s * p).norm() <= 1e-13 * (1.0 + s.abs()) {
        Mat4::identity() + (s.exp() - 1.0) * p
    } else {
        a.exp()
    }
}

/// Derivative flow `T𝓘(h)` at the nodes, for a deterministic or adapted rate `ḣ`.
pub fn derivative_flow_vector(chain: &DampedChain, prop: &FlowPropagator, hdot: &[Vec4]) -> Result<Vec<Vec4>> {
    let spec = chain.spec();
    let n = chain.n_steps();
    if hdot.len() != n {
        return Err(Error::ResolutionMismatch(hdot.len(), n));
    }
    let dt = chain.dt();
    let mut vt = Vec4::zeros();
    let mut out = Vec::with_capacity(n + 1);
    out.push(Vec4::zeros());
    for i in 0..n {
        let x = chain.point(i);
        let c = chain.par[i].transpose() * (spec.projection(x) * hdot[i]) * dt;
        vt = prop.steps[i] * (vt + c);
        out.push(chain.par[i + 1] * vt);
    }
    Ok(out)
}
