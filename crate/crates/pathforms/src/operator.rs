//! Two-tensors as operators on `ℋ`, interior products and pairings.
//!
//! A two-tensor `V` acts by
//! `S^V(h)_s = Σ_t [(1 ⊗ 𝔻/dt) V]_{s,t} (𝔻h)_t Δt`, with the matrix of
//! `a ⊗ b` being `a bᵀ`, so `S^{a⊗b}(h) = ⟨b, h⟩_ℋ a` and `S^V` is
//! skew-adjoint on `ℋ` whenever `V` is antisymmetric.

use std::sync::Arc;

use crate::damped::{h_inner, DampedChain, HVectorField};
use crate::error::{Error, Result};
use crate::linalg::{Mat4, Vec4};
use crate::two_tensor::{j_of, q_apply, r_apply, wedge2, GridTerm, TwoTensorGrid};

/// `S^V(h)` as an element of `ℋ`.
pub fn kernel_op_apply(v: &TwoTensorGrid, h: &HVectorField) -> Result<HVectorField> {
    if !v.chain.same_path(&h.chain) {
        return Err(Error::PathMismatch);
    }
    let chain = &v.chain;
    let n = chain.n_steps();
    // W_jᵀ 𝔻h_j, reused by every term.
    let wh: Vec<Vec4> = (0..n).map(|j| chain.w(j).transpose() * h.kernel[j]).collect();
    let mut out = vec![Vec4::zeros(); n + 1];
    for term in &v.terms {
        match term {
            GridTerm::Wedge { coef, a, b } => {
                let damped = |x: &[Vec4], j: usize| chain.theta_inv[j] * x[j];
                let (mut alpha, mut beta) = (0.0, 0.0);
                for j in 0..n {
                    alpha += (damped(a, j + 1) - damped(a, j)).dot(&wh[j]);
                    beta += (damped(b, j + 1) - damped(b, j)).dot(&wh[j]);
                }
                for i in 0..=n {
                    out[i] += *coef * 0.5 * chain.par[i] * (a[i] * beta - b[i] * alpha);
                }
            }
            GridTerm::MinKernel { coef, j } => {
                let mut acc = Vec4::zeros();
                for i in 0..=n {
                    out[i] += *coef * chain.w(i) * acc;
                    if i < n {
                        acc += (j[i + 1] - j[i]) * wh[i];
                    }
                }
            }
            GridTerm::Dense { .. } => {
                let single = TwoTensorGrid { chain: chain.clone(), terms: vec![term.clone()] };
                for (i, o) in out.iter_mut().enumerate() {
                    let mut acc = Vec4::zeros();
                    let mut prev = single.damped_entry(i, 0);
                    for j in 0..n {
                        let next = single.damped_entry(i, j + 1);
                        acc += (next - prev) * wh[j];
                        prev = next;
                    }
                    *o += chain.w(i) * acc;
                }
            }
        }
    }
    HVectorField::from_values(chain, out)
}

/// How the multiplier `j'_V(t)` is carried to `T_{x_t}M`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MultiplierForm {
    /// `W_t j'(t) W_tᵀ`, the form that agrees with the kernel action above.
    Adjoint,
    /// `W_t j'(t) W_t⁻¹`; equal to the adjoint form exactly when `W` is orthogonal.
    Inverse,
}

/// Kernel of the multiplication operator `M_{j'}` on cells.
pub fn multiplier_kernel(v: &TwoTensorGrid, h: &HVectorField, form: MultiplierForm) -> Result<Vec<Vec4>> {
    if !v.chain.same_path(&h.chain) {
        return Err(Error::PathMismatch);
    }
    let chain = &v.chain;
    let jp = j_of(v)?;
    Ok((0..chain.n_steps())
        .map(|t| {
            let right = match form {
                MultiplierForm::Adjoint => chain.w(t).transpose(),
                MultiplierForm::Inverse => *chain.w_inv(t),
            };
            chain.w(t) * jp.deriv[t] * right * h.kernel[t]
        })
        .collect())
}

/// `sup_t |S^{Q(V)}(h)_t − 𝒲(M_{j'} 𝔻h)_t|`.
pub fn mult_conjugate_residual(v: &TwoTensorGrid, h: &HVectorField, form: MultiplierForm) -> Result<f64> {
    let s = kernel_op_apply(&q_apply(v)?, h)?;
    let m = HVectorField::from_kernel(&v.chain, multiplier_kernel(v, h, form)?)?;
    Ok(s.add_scaled(-1.0, &m)?.sup_norm())
}

/// A finite sum `Σ c_k a_k ∧ b_k` of wedges of `ℋ` fields.
#[derive(Debug, Clone)]
pub struct WedgeSum {
    pub terms: Vec<(f64, HVectorField, HVectorField)>,
}

impl WedgeSum {
    pub fn single(a: HVectorField, b: HVectorField) -> Self {
        WedgeSum { terms: vec![(1.0, a, b)] }
    }

    pub fn chain(&self) -> Result<&Arc<DampedChain>> {
        self.terms
            .first()
            .map(|t| &t.1.chain)
            .ok_or_else(|| Error::InvalidArgument("empty wedge sum".into()))
    }

    pub fn to_grid(&self) -> Result<TwoTensorGrid> {
        let mut g = TwoTensorGrid::zero(self.chain()?);
        for (c, a, b) in &self.terms {
            g = g.add_scaled(*c, &wedge2(a, b)?)?;
        }
        Ok(g)
    }

    /// `ι_v` of the wedge sum: `Σ c ½(⟨a, v⟩ b − ⟨b, v⟩ a)`.
    pub fn interior(&self, v: &HVectorField) -> Result<HVectorField> {
        let mut out = HVectorField::zero(self.chain()?);
        for (c, a, b) in &self.terms {
            let av = h_inner(a, v)?;
            let bv = h_inner(b, v)?;
            out = out.add_scaled(0.5 * c * av, b)?.add_scaled(-0.5 * c * bv, a)?;
        }
        Ok(out)
    }

    /// `(φ¹ ∧ φ²)` evaluated by the determinant rule on Riesz representatives.
    pub fn pair(&self, phi1: &HVectorField, phi2: &HVectorField) -> Result<f64> {
        let mut s = 0.0;
        for (c, a, b) in &self.terms {
            s += 0.5 * c * (h_inner(phi1, a)? * h_inner(phi2, b)? - h_inner(phi2, a)? * h_inner(phi1, b)?);
        }
        Ok(s)
    }
}

/// An element `(1 + Q) V` of `ℋ²` with `V` given as a wedge sum.
#[derive(Debug, Clone)]
pub struct H2Element {
    pub base: WedgeSum,
    pub base_grid: TwoTensorGrid,
    pub q: TwoTensorGrid,
}

impl H2Element {
    pub fn new(base: WedgeSum) -> Result<Self> {
        let base_grid = base.to_grid()?;
        let q = q_apply(&base_grid)?;
        Ok(H2Element { base, base_grid, q })
    }

    /// The full grid `V + Q(V)`.
    pub fn grid(&self) -> Result<TwoTensorGrid> {
        self.base_grid.add_scaled(1.0, &self.q)
    }
}

/// `ι_v U = ι_v V − S^{Q(V)}(v)`.
pub fn interior(v: &HVectorField, u: &H2Element) -> Result<HVectorField> {
    let base = u.base.interior(v)?;
    base.add_scaled(-1.0, &kernel_op_apply(&u.q, v)?)
}

/// `(φ¹ ∧ φ²)(U)` for one-forms given by Riesz representatives.
pub fn exterior_pair(phi1: &HVectorField, phi2: &HVectorField, u: &H2Element) -> Result<f64> {
    let s = kernel_op_apply(&u.q, phi1)?;
    Ok(u.base.pair(phi1, phi2)? - h_inner(phi2, &s)?)
}

/// `|(v♭ ∧ ℓ)(U) − ⟨ℓ, ι_v U⟩_ℋ|`.
pub fn pairing_residual(v: &HVectorField, l: &HVectorField, u: &H2Element) -> Result<f64> {
    Ok((exterior_pair(v, l, u)? - h_inner(l, &interior(v, u)?)?).abs())
}

/// Riesz representative in `ℋ` of `w ↦ Σ_k ⟨m_k, w_{t_k}⟩`.
pub fn riesz_atomic(chain: &Arc<DampedChain>, atoms: &[(usize, Vec4)]) -> Result<HVectorField> {
    let n = chain.n_steps();
    let mut tail = vec![Vec4::zeros(); n + 1];
    for &(node, m) in atoms {
        if node > n {
            return Err(Error::InvalidArgument(format!("node {node} beyond grid of {n} steps")));
        }
        tail[node] += chain.w(node).transpose() * m;
    }
    // suffix[j] = Σ_{k > j} W_{t_k}ᵀ m_k
    let mut kernel = vec![Vec4::zeros(); n];
    let mut acc = tail[n];
    for j in (0..n).rev() {
        kernel[j] = chain.w_inv(j).transpose() * acc;
        acc += tail[j];
    }
    HVectorField::from_kernel(chain, kernel)
}

/// `ι_φ Z` for `φ = Σ_k ⟨m_k, ·_{t_k}⟩`, by direct evaluation `−Σ_k Z_{t,t_k} m_k`.
pub fn interior_atomic(z: &TwoTensorGrid, atoms: &[(usize, Vec4)]) -> Vec<Vec4> {
    let n = z.n_steps();
    (0..=n)
        .map(|t| atoms.iter().map(|&(k, m)| -(z.ambient_entry(t, k) * m)).sum())
        .collect()
}

/// An operator on `ℋ`: finite rank `Σ c a ⊗ b` or a two-tensor kernel.
#[derive(Debug, Clone)]
pub enum Operator {
    FiniteRank(Vec<(f64, HVectorField, HVectorField)>),
    Kernel(TwoTensorGrid),
}

impl Operator {
    pub fn apply(&self, h: &HVectorField) -> Result<HVectorField> {
        match self {
            Operator::FiniteRank(terms) => {
                let mut out = HVectorField::zero(&h.chain);
                for (c, a, b) in terms {
                    out = out.add_scaled(c * h_inner(b, h)?, a)?;
                }
                Ok(out)
            }
            Operator::Kernel(g) => kernel_op_apply(g, h),
        }
    }
}

/// `⟨S, T⟩ = trace(T* S)` when at least one side has finite rank.
pub fn trace_pairing(s: &Operator, t: &Operator) -> Result<f64> {
    match (s, t) {
        (Operator::FiniteRank(terms), other) => {
            let mut acc = 0.0;
            for (c, a, b) in terms {
                acc += c * h_inner(a, &other.apply(b)?)?;
            }
            Ok(acc)
        }
        (other, Operator::FiniteRank(terms)) => {
            let mut acc = 0.0;
            for (c, a, b) in terms {
                acc += c * h_inner(&other.apply(b)?, a)?;
            }
            Ok(acc)
        }
        _ => Err(Error::UnsupportedPairing("trace pairing needs a finite-rank operand".into())),
    }
}

/// `|⟨k, S h⟩ + ⟨h, S k⟩|`.
pub fn skew_defect(op: &Operator, h: &HVectorField, k: &HVectorField) -> Result<f64> {
    Ok((h_inner(k, &op.apply(h)?)? + h_inner(h, &op.apply(k)?)?).abs())
}

/// Difference between `𝐑(U)` paired as a kernel operator and the direct
/// integral `W_t ∫_0^t W_s⁻¹ ℛ(U_ss) 𝔻h_s ds`, the latter by the trapezoid
/// rule in `s`. Returns the sup over nodes.
pub fn damped_curvature_residual(u: &TwoTensorGrid, h: &HVectorField) -> Result<f64> {
    if !u.chain.same_path(&h.chain) {
        return Err(Error::PathMismatch);
    }
    let chain = &u.chain;
    let spec = chain.spec();
    let n = chain.n_steps();
    let dt = chain.dt();
    let via_kernel = kernel_op_apply(&r_apply(u)?, h)?;
    let f: Vec<Mat4> = (0..=n)
        .map(|s| chain.w_inv(s) * spec.riemann_op(chain.point(s), &u.ambient_entry(s, s)))
        .collect();
    let mut acc = Vec4::zeros();
    let mut worst = 0.0f64;
    for t in 0..=n {
        worst = worst.max((chain.w(t) * acc - via_kernel.values[t]).norm());
        if t < n {
            acc += 0.5 * (f[t] + f[t + 1]) * h.kernel[t] * dt;
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::damped::conditional_ti;
    use crate::linalg::basis_vec;
    use crate::manifold::ManifoldSpec;
    use crate::path::simulate;
    use crate::rng::Driver;

    fn chain(spec: ManifoldSpec, n: usize, seed: u64) -> Arc<DampedChain> {
        let d = Driver::generate(seed, 0, n, 1.0, spec.ambient_dim()).unwrap();
        DampedChain::build(simulate(spec, &d, &spec.base_point()).unwrap()).unwrap()
    }

    fn field(c: &Arc<DampedChain>, a: Vec4, om: f64) -> HVectorField {
        let n = c.n_steps();
        let rates: Vec<Vec4> = (0..n).map(|i| a * (om * c.time(i)).cos() + basis_vec(2) * c.time(i)).collect();
        conditional_ti(c, &rates).unwrap()
    }

    #[test]
    fn primitive_wedge_action() {
        let c = chain(ManifoldSpec::sphere(2).unwrap(), 32, 1);
        let a = field(&c, basis_vec(1), 1.0);
        let b = field(&c, basis_vec(2), 3.0);
        let h = field(&c, Vec4::new(0.0, 1.0, -1.0, 0.0), 2.0);
        let s = kernel_op_apply(&wedge2(&a, &b).unwrap(), &h).unwrap();
        let expect = a.scaled(0.5 * h_inner(&b, &h).unwrap()).add_scaled(-0.5 * h_inner(&a, &h).unwrap(), &b).unwrap();
        let e = s.add_scaled(-1.0, &expect).unwrap().sup_norm(); assert!(e < 1e-12, "{e} {}", s.sup_norm());
        // Dense storage of the same grid acts identically.
        let g = wedge2(&a, &b).unwrap();
        let dense = TwoTensorGrid::dense_transported(&c, |i, j| g.entry(i, j));
        let sd = kernel_op_apply(&dense, &h).unwrap();
        assert!(sd.add_scaled(-1.0, &s).unwrap().sup_norm() < 1e-12);
    }

    #[test]
    fn q_operator_is_skew() {
        let c = chain(ManifoldSpec::sphere(3).unwrap(), 64, 2);
        let a = field(&c, Vec4::new(0.0, 1.0, 0.0, 1.0), 1.0);
        let b = field(&c, basis_vec(3), 3.0);
        let h = field(&c, Vec4::new(0.0, 1.0, -1.0, 0.0), 2.0);
        let k = field(&c, Vec4::new(1.0, 0.0, 0.5, 2.0), 0.5);
        let op = Operator::Kernel(q_apply(&wedge2(&a, &b).unwrap()).unwrap());
        assert!(skew_defect(&op, &h, &k).unwrap() < 1e-12);
    }

    #[test]
    fn riesz_and_lemma_measure_form_agree() {
        let c = chain(ManifoldSpec::sphere(2).unwrap(), 32, 3);
        let a = field(&c, basis_vec(1), 1.0);
        let b = field(&c, basis_vec(2), 3.0);
        let atoms = vec![(10, Vec4::new(0.3, -1.0, 0.5, 0.0)), (32, Vec4::new(1.0, 0.0, 2.0, 0.0))];
        let phi = riesz_atomic(&c, &atoms).unwrap();
        let direct: f64 = atoms.iter().map(|(k, m)| m.dot(&a.values[*k])).sum();
        assert!((h_inner(&phi, &a).unwrap() - direct).abs() < 1e-12);
        let q = q_apply(&wedge2(&a, &b).unwrap()).unwrap();
        let via_s = kernel_op_apply(&q, &phi).unwrap();
        let via_measure = interior_atomic(&q, &atoms);
        for (x, y) in via_s.values.iter().zip(&via_measure) {
            assert!((x + y).norm() < 1e-12, "{} {}", x, y);
        }
    }

    #[test]
    fn trace_pairing_rules() {
        let c = chain(ManifoldSpec::sphere(2).unwrap(), 16, 4);
        let a = field(&c, basis_vec(1), 1.0);
        let b = field(&c, basis_vec(2), 3.0);
        let s = Operator::FiniteRank(vec![(1.0, a.clone(), b.clone())]);
        let t = Operator::FiniteRank(vec![(2.0, a.clone(), a.clone())]);
        let expect = 2.0 * h_inner(&a, &a).unwrap() * h_inner(&b, &a).unwrap();
        assert!((trace_pairing(&s, &t).unwrap() - expect).abs() < 1e-12);
        let g = Operator::Kernel(wedge2(&a, &b).unwrap());
        assert!(matches!(trace_pairing(&g, &g), Err(Error::UnsupportedPairing(_))));
        let sg = trace_pairing(&s, &g).unwrap();
        let gs = trace_pairing(&g, &s).unwrap();
        assert!((sg - gs).abs() < 1e-12);
    }

    #[test]
    fn pairing_identity_on_sphere() {
        let c = chain(ManifoldSpec::sphere(2).unwrap(), 64, 5);
        let u = H2Element::new(WedgeSum::single(field(&c, basis_vec(1), 1.0), field(&c, basis_vec(2), 2.0))).unwrap();
        let v = field(&c, Vec4::new(0.0, 1.0, 1.0, 0.0), 0.7);
        let l = field(&c, Vec4::new(0.0, -1.0, 2.0, 0.0), 1.7);
        assert!(pairing_residual(&v, &l, &u).unwrap() < 1e-10);
    }

    #[test]
    fn multiplier_forms_differ_off_flat() {
        let c = chain(ManifoldSpec::sphere(2).unwrap(), 64, 6);
        let v = wedge2(&field(&c, basis_vec(1), 1.0), &field(&c, basis_vec(2), 2.0)).unwrap();
        let h = field(&c, Vec4::new(0.0, 1.0, 1.0, 0.0), 0.7);
        let adj = mult_conjugate_residual(&v, &h, MultiplierForm::Adjoint).unwrap();
        let inv = mult_conjugate_residual(&v, &h, MultiplierForm::Inverse).unwrap();
        assert!(inv > 5.0 * adj, "{adj} {inv}");
    }
}
