//! Two-tensor grids along a path and the curvature operators `Q` and `𝐑`.
//!
//! A grid stores `G_{s,t} ∈ T_{x_s}M ⊗ T_{x_t}M` for node pairs, pulled back
//! by parallel transport: `Ĝ_{ij} = ∥_iᵀ G_{ij} ∥_j`. Entries with `i > j`
//! follow from the swap rule `Ĝ_{ji} = −Ĝ_{ij}ᵀ`. Grids are sums of lazy
//! terms so that `Q(G)` and `𝐑(Z)`, which depend on `s ∧ t` only, cost
//! `O(N)` to build.

use std::sync::Arc;

use crate::damped::{DampedChain, HVectorField};
use crate::error::{Error, Result};
use crate::linalg::{frob, Mat4, Vec4};

#[derive(Debug, Clone)]
pub enum GridTerm {
    /// `c · (a ∧ b)` from transported node values.
    Wedge { coef: f64, a: Vec<Vec4>, b: Vec<Vec4> },
    /// `c · (W_s ⊗ W_t) J(s ∧ t)`, stored as `J` on nodes.
    MinKernel { coef: f64, j: Vec<Mat4> },
    /// Explicit transported entries on `i ≤ j`, row-major over the simplex.
    Dense { coef: f64, upper: Vec<Mat4> },
}

#[derive(Debug, Clone)]
pub struct TwoTensorGrid {
    pub chain: Arc<DampedChain>,
    pub terms: Vec<GridTerm>,
}

fn simplex_index(n: usize, i: usize, j: usize) -> usize {
    // Rows 0..i hold (N+1) + N + … entries.
    i * (n + 1) - i * (i.saturating_sub(1)) / 2 + (j - i)
}

impl GridTerm {
    fn upper_entry(&self, chain: &DampedChain, i: usize, j: usize) -> Mat4 {
        match self {
            GridTerm::Wedge { coef, a, b } => {
                *coef * 0.5 * (a[i] * b[j].transpose() - b[i] * a[j].transpose())
            }
            GridTerm::MinKernel { coef, j: jj } => *coef * chain.theta[i] * jj[i.min(j)] * chain.theta[j].transpose(),
            GridTerm::Dense { coef, upper } => *coef * upper[simplex_index(chain.n_steps(), i, j)],
        }
    }

    fn entry(&self, chain: &DampedChain, i: usize, j: usize) -> Mat4 {
        match self {
            GridTerm::Dense { .. } if i > j => -self.upper_entry(chain, j, i).transpose(),
            _ => self.upper_entry(chain, i, j),
        }
    }

    fn scaled(&self, c: f64) -> GridTerm {
        match self {
            GridTerm::Wedge { coef, a, b } => GridTerm::Wedge { coef: c * coef, a: a.clone(), b: b.clone() },
            GridTerm::MinKernel { coef, j } => GridTerm::MinKernel { coef: c * coef, j: j.clone() },
            GridTerm::Dense { coef, upper } => GridTerm::Dense { coef: c * coef, upper: upper.clone() },
        }
    }
}

impl TwoTensorGrid {
    pub fn zero(chain: &Arc<DampedChain>) -> Self {
        TwoTensorGrid { chain: chain.clone(), terms: Vec::new() }
    }

    pub fn n_steps(&self) -> usize {
        self.chain.n_steps()
    }

    /// Grid from transported entries `f(i, j)`, `i ≤ j`.
    pub fn dense_transported(chain: &Arc<DampedChain>, f: impl Fn(usize, usize) -> Mat4) -> Self {
        let n = chain.n_steps();
        let mut upper = Vec::with_capacity((n + 1) * (n + 2) / 2);
        for i in 0..=n {
            for j in i..=n {
                upper.push(f(i, j));
            }
        }
        TwoTensorGrid { chain: chain.clone(), terms: vec![GridTerm::Dense { coef: 1.0, upper }] }
    }

    /// `(W_s ⊗ W_t) J(s ∧ t)`.
    pub fn min_kernel(chain: &Arc<DampedChain>, j: Vec<Mat4>) -> Result<Self> {
        if j.len() != chain.n_steps() + 1 {
            return Err(Error::ResolutionMismatch(j.len().saturating_sub(1), chain.n_steps()));
        }
        Ok(TwoTensorGrid { chain: chain.clone(), terms: vec![GridTerm::MinKernel { coef: 1.0, j }] })
    }

    /// Transported entry `Ĝ_{ij}`.
    pub fn entry(&self, i: usize, j: usize) -> Mat4 {
        self.terms.iter().map(|t| t.entry(&self.chain, i, j)).sum()
    }

    /// Ambient entry `G_{ij} = ∥_i Ĝ_{ij} ∥_jᵀ`.
    pub fn ambient_entry(&self, i: usize, j: usize) -> Mat4 {
        self.chain.par[i] * self.entry(i, j) * self.chain.par[j].transpose()
    }

    /// Entry in damped coordinates, `W_i⁻¹ G_{ij} W_j⁻ᵀ`.
    pub fn damped_entry(&self, i: usize, j: usize) -> Mat4 {
        self.chain.theta_inv[i] * self.entry(i, j) * self.chain.theta_inv[j].transpose()
    }

    pub fn check_same_path(&self, other: &TwoTensorGrid) -> Result<()> {
        if self.chain.same_path(&other.chain) {
            Ok(())
        } else {
            Err(Error::PathMismatch)
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        TwoTensorGrid { chain: self.chain.clone(), terms: self.terms.iter().map(|t| t.scaled(c)).collect() }
    }

    /// `self + c·other`.
    pub fn add_scaled(&self, c: f64, other: &TwoTensorGrid) -> Result<Self> {
        self.check_same_path(other)?;
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().map(|t| t.scaled(c)));
        Ok(TwoTensorGrid { chain: self.chain.clone(), terms })
    }

    /// Largest Frobenius norm over all node pairs.
    pub fn sup_norm(&self) -> f64 {
        let n = self.n_steps();
        let mut best = 0.0f64;
        for i in 0..=n {
            for j in i..=n {
                best = best.max(self.entry(i, j).norm());
            }
        }
        best
    }

    /// Largest deviation from the swap rule over sampled pairs.
    pub fn swap_defect(&self) -> f64 {
        let n = self.n_steps();
        let stride = (n / 16).max(1);
        let mut best = 0.0f64;
        for i in (0..=n).step_by(stride) {
            for j in (0..=n).step_by(stride) {
                best = best.max((self.entry(j, i) + self.entry(i, j).transpose()).norm());
            }
        }
        best
    }

}

/// `u¹ ∧ u²` as a grid.
pub fn wedge2(u1: &HVectorField, u2: &HVectorField) -> Result<TwoTensorGrid> {
    u1.check_same_path(u2)?;
    let n = u1.chain.n_steps();
    let a = (0..=n).map(|i| u1.transported(i)).collect();
    let b = (0..=n).map(|i| u2.transported(i)).collect();
    Ok(TwoTensorGrid { chain: u1.chain.clone(), terms: vec![GridTerm::Wedge { coef: 1.0, a, b }] })
}

/// `j_G` on the nodes with its pointwise derivative.
#[derive(Debug, Clone)]
pub struct JPath {
    pub values: Vec<Mat4>,
    pub deriv: Vec<Mat4>,
}

/// `j_i = (W_i⁻¹ ⊗ W_i⁻¹) W2_i Σ_{r<i} W2_r⁻¹ ℛ(G_rr) Δt`, stored in damped
/// coordinates, together with
/// `j'(t_i) = (W_i⁻¹ ⊗ W_i⁻¹)[ℛ(G_ii) + ℛ(W2_i Σ_{r<i} W2_r⁻¹ ℛ(G_rr) Δt)]`.
pub fn j_of(g: &TwoTensorGrid) -> Result<JPath> {
    let chain = &g.chain;
    let spec = chain.spec();
    let n = chain.n_steps();
    let dt = chain.dt();
    let mut values = Vec::with_capacity(n + 1);
    let mut deriv = Vec::with_capacity(n + 1);
    if spec.is_flat() {
        return Ok(JPath { values: vec![Mat4::zeros(); n + 1], deriv: vec![Mat4::zeros(); n + 1] });
    }
    let mut acc = Mat4::zeros();
    for i in 0..=n {
        let x = chain.point(i);
        let p = &chain.par[i];
        let ti = &chain.theta_inv[i];
        let w2acc = chain.w2_apply(i, &acc)?;
        let rg = spec.riemann_op(x, &g.ambient_entry(i, i));
        values.push(ti * p.transpose() * w2acc * p * ti.transpose());
        let d = rg + spec.riemann_op(x, &w2acc);
        deriv.push(ti * p.transpose() * d * p * ti.transpose());
        if i < n {
            acc += chain.w2_inv_apply(i, &rg)? * dt;
        }
    }
    Ok(JPath { values, deriv })
}

/// `Q(G)_{s,t} = (W_s ⊗ W_t) j_G(s ∧ t)`.
pub fn q_apply(g: &TwoTensorGrid) -> Result<TwoTensorGrid> {
    let jp = j_of(g)?;
    TwoTensorGrid::min_kernel(&g.chain, jp.values)
}

/// `𝐑(Z)_{s,t} = (W_s ⊗ W_t) Σ_{r < s∧t} ∧²W_r⁻¹ ℛ(Z_rr) Δt`.
pub fn r_apply(z: &TwoTensorGrid) -> Result<TwoTensorGrid> {
    let chain = &z.chain;
    let spec = chain.spec();
    let n = chain.n_steps();
    let dt = chain.dt();
    let mut j = Vec::with_capacity(n + 1);
    let mut acc = Mat4::zeros();
    j.push(acc);
    for r in 0..n {
        if !spec.is_flat() {
            let rz = spec.riemann_op(chain.point(r), &z.ambient_entry(r, r));
            let wi = chain.w_inv(r);
            acc += wi * rz * wi.transpose() * dt;
        }
        j.push(acc);
    }
    TwoTensorGrid::min_kernel(chain, j)
}

/// `(1 + Q) G`.
pub fn structure_solve(g: &TwoTensorGrid) -> Result<TwoTensorGrid> {
    g.add_scaled(1.0, &q_apply(g)?)
}

/// Largest entry of `(1+Q)(1−𝐑)G − G` over the grid.
pub fn inverse_residual(g: &TwoTensorGrid) -> Result<f64> {
    let one_minus_r = g.add_scaled(-1.0, &r_apply(g)?)?;
    let back = structure_solve(&one_minus_r)?;
    Ok(back.add_scaled(-1.0, g)?.sup_norm())
}

/// Double kernel `(𝔻 ⊗ 𝔻) G` on cells, in ambient coordinates.
pub fn double_kernel(g: &TwoTensorGrid) -> Vec<Vec<Mat4>> {
    let chain = &g.chain;
    let n = chain.n_steps();
    let dt2 = chain.dt() * chain.dt();
    let tilde: Vec<Vec<Mat4>> = (0..=n).map(|i| (0..=n).map(|j| g.damped_entry(i, j)).collect()).collect();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let mixed = tilde[i + 1][j + 1] - tilde[i + 1][j] - tilde[i][j + 1] + tilde[i][j];
                    chain.w(i) * mixed * chain.w(j).transpose() / dt2
                })
                .collect()
        })
        .collect()
}

/// `⟨G¹, G²⟩` in `ℋ ⊗ ℋ` by double-time quadrature of the `𝔻 ⊗ 𝔻` kernels.
pub fn h2_inner(g1: &TwoTensorGrid, g2: &TwoTensorGrid) -> Result<f64> {
    g1.check_same_path(g2)?;
    let dt2 = g1.chain.dt() * g1.chain.dt();
    let k1 = double_kernel(g1);
    let k2 = double_kernel(g2);
    let mut s = 0.0;
    for (r1, r2) in k1.iter().zip(&k2) {
        for (a, b) in r1.iter().zip(r2) {
            s += frob(a, b);
        }
    }
    Ok(s * dt2)
}

#[derive(Debug, Clone)]
pub struct H2Decomposition {
    /// `v = (1 − 𝐑) u`.
    pub v: TwoTensorGrid,
    /// Diagonal-cell mass of the double kernel of `v`; it decays like
    /// `√Δt` for elements of `∧²ℋ¹` and grows under refinement otherwise.
    pub membership_residual: f64,
    /// `‖v‖` in `ℋ ⊗ ℋ`, which is `‖u‖_{ℋ²}`.
    pub norm: f64,
}

pub fn h2_decompose(u: &TwoTensorGrid) -> Result<H2Decomposition> {
    let v = u.add_scaled(-1.0, &r_apply(u)?)?;
    let k = double_kernel(&v);
    let dt2 = v.chain.dt() * v.chain.dt();
    let diag: f64 = (0..k.len()).map(|i| k[i][i].norm_squared()).sum::<f64>() * dt2;
    let mut total = 0.0;
    for row in &k {
        for e in row {
            total += e.norm_squared();
        }
    }
    Ok(H2Decomposition { v, membership_residual: diag.sqrt(), norm: (total * dt2).sqrt() })
}
