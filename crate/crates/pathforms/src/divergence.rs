//! Vector fields on path space, their brackets and torsion, divergences,
//! and per-sample statistics for the integration-by-parts checks.
//!
//! Divergence follows `∫ d̄f(V) dμ = −∫ f div V dμ`. Brackets use the
//! pointwise connection `∇̃` and are computed by central differences of
//! fields rebuilt on perturbed paths `σ^ε_t = exp_{σ_t}(ε V_t)`.

use std::sync::Arc;

use serde::Serialize;

use crate::cylinder::{CylFn, CylOneForm, Poly};
use crate::damped::{conditional_ti, derivative_flow_vector, script_w, CmPath, DampedChain, FlowPropagator, HVectorField};
use crate::error::{Error, Result};
use crate::linalg::{Mat4, Vec4};
use crate::manifold::{ManifoldKind, ManifoldSpec, Point};
use crate::mc::{collect, summarize, summarize_about, McOptions, McReport};
use crate::operator::{exterior_pair, interior_atomic, riesz_atomic, H2Element, WedgeSum};
use crate::path::{simulate, skorohod_div_adapted, DiscretePath};
use crate::rng::Driver;
use crate::two_tensor::{q_apply, structure_solve, wedge2, TwoTensorGrid};

/// Steps at or below this are treated as roundoff dominated.
pub const MIN_FD_STEP: f64 = 1e-7;

/// Grid, horizon and starting point shared by the samples of an experiment.
#[derive(Debug, Clone, Copy)]
pub struct SimSetup {
    pub spec: ManifoldSpec,
    pub n_steps: usize,
    pub horizon: f64,
    pub x0: Point,
}

impl SimSetup {
    pub fn new(spec: ManifoldSpec, n_steps: usize, horizon: f64) -> Self {
        SimSetup { spec, n_steps, horizon, x0: spec.base_point() }
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.n_steps as f64
    }

    pub fn path(&self, seed: u64, sample: u64) -> Result<DiscretePath> {
        let d = Driver::generate(seed, sample, self.n_steps, self.horizon, self.spec.ambient_dim())?;
        simulate(self.spec, &d, &self.x0)
    }

    pub fn chain(&self, seed: u64, sample: u64) -> Result<Arc<DampedChain>> {
        DampedChain::build(self.path(seed, sample)?)
    }

    pub fn chain_vector_only(&self, seed: u64, sample: u64) -> Result<Arc<DampedChain>> {
        DampedChain::build_vector_only(self.path(seed, sample)?)
    }
}

/// The field `g(σ) · 𝕏(h)(σ)`, with `g ≡ 1` when no coefficient is given.
#[derive(Debug, Clone, PartialEq)]
pub struct HFieldSpec {
    pub coef: Option<CylFn>,
    pub h: CmPath,
}

impl HFieldSpec {
    pub fn adapted(h: CmPath) -> Self {
        HFieldSpec { coef: None, h }
    }

    pub fn with_coef(coef: CylFn, h: CmPath) -> Self {
        HFieldSpec { coef: Some(coef), h }
    }

    fn rates(&self, chain: &DampedChain) -> Vec<Vec4> {
        self.h.cell_rates(chain.n_steps(), chain.dt())
    }

    pub fn realize(&self, chain: &Arc<DampedChain>) -> Result<HVectorField> {
        let base = conditional_ti(chain, &self.rates(chain))?;
        match &self.coef {
            None => Ok(base),
            Some(g) => Ok(base.scaled(g.eval(chain)?)),
        }
    }

    /// `div(g 𝕏h) = −g Σ ⟨ḣ_i, X(x_i) ΔB_i⟩ + d̄g(𝕏h)`.
    pub fn divergence(&self, chain: &Arc<DampedChain>) -> Result<f64> {
        let d = skorohod_div_adapted(&chain.path, &self.rates(chain))?;
        match &self.coef {
            None => Ok(d),
            Some(g) => {
                let base = conditional_ti(chain, &self.rates(chain))?;
                Ok(g.eval(chain)? * d + g.d_cyl(chain, &base.values)?)
            }
        }
    }
}

/// Path `exp_{σ_t}(ε v_t)` and, per node, the transport back to `T_{σ_t}M`.
pub fn perturbed_chain(chain: &DampedChain, v: &[Vec4], eps: f64) -> Result<(Arc<DampedChain>, Vec<Mat4>)> {
    let spec = chain.spec();
    let mut points = Vec::with_capacity(v.len());
    let mut back = Vec::with_capacity(v.len());
    for (i, vi) in v.iter().enumerate() {
        let (y, r) = spec.geodesic_step(chain.point(i), &(eps * vi))?;
        points.push(y);
        back.push(r.transpose());
    }
    let path = DiscretePath::from_points(spec, points, chain.dt())?;
    Ok((DampedChain::build_vector_only(path)?, back))
}

fn richardson<T>(eps: f64, scale: f64, d: impl Fn(f64) -> Result<T>, sub: impl Fn(&T, &T) -> f64, comb: impl Fn(&T, &T) -> T) -> Result<T> {
    if !(eps > MIN_FD_STEP) {
        return Err(Error::RoundoffDominated(eps));
    }
    let d1 = d(eps)?;
    let d2 = d(eps / 2.0)?;
    let gap = sub(&d1, &d2);
    // Roundoff in a central difference is about machine epsilon times scale over step.
    if gap < 1e-3 * f64::EPSILON * scale / eps && f64::EPSILON * scale / eps > 1e-6 * scale.max(1.0) {
        return Err(Error::RoundoffDominated(eps));
    }
    Ok(comb(&d1, &d2))
}

/// `∇̃_v U` at the nodes, for `U = field(σ)`, by Richardson-extrapolated central differences.
pub fn connection_fd(chain: &DampedChain, v: &[Vec4], field: &HFieldSpec, eps: f64) -> Result<Vec<Vec4>> {
    let scale = v.iter().map(|x| x.norm()).fold(1.0, f64::max);
    let diff = |e: f64| -> Result<Vec<Vec4>> {
        let (cp, bp) = perturbed_chain(chain, v, e)?;
        let (cm, bm) = perturbed_chain(chain, v, -e)?;
        let up = field.realize(&cp)?;
        let um = field.realize(&cm)?;
        Ok((0..v.len()).map(|i| (bp[i] * up.values[i] - bm[i] * um.values[i]) / (2.0 * e)).collect())
    };
    richardson(
        eps,
        scale,
        diff,
        |a, b| a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max),
        |a, b| a.iter().zip(b).map(|(x, y)| (4.0 * y - x) / 3.0).collect(),
    )
}

/// Derivative of `σ ↦ F(σ)` along `v`, by Richardson-extrapolated central differences.
pub fn scalar_fd(chain: &DampedChain, v: &[Vec4], eps: f64, f: impl Fn(&Arc<DampedChain>) -> Result<f64>) -> Result<f64> {
    let diff = |e: f64| -> Result<f64> {
        let (cp, _) = perturbed_chain(chain, v, e)?;
        let (cm, _) = perturbed_chain(chain, v, -e)?;
        Ok((f(&cp)? - f(&cm)?) / (2.0 * e))
    };
    richardson(eps, 1.0, diff, |a, b| (a - b).abs(), |a, b| (4.0 * b - a) / 3.0)
}

/// Damped connection `∇_{u¹} u² = 𝕏 d̄[𝕐u²](u¹)` for `u² = g·𝕏(h²)`:
/// `d̄g(u¹) 𝕏(h²) + g 𝒲(∇_{u¹} X(ḣ²))`.
pub fn nabla_damped(chain: &Arc<DampedChain>, u1: &[Vec4], s2: &HFieldSpec) -> Result<Vec<Vec4>> {
    let spec = chain.spec();
    let rates = s2.rates(chain);
    let kernel: Vec<Vec4> = (0..chain.n_steps())
        .map(|r| spec.nabla_matrix(chain.point(r), &rates[r]) * u1[r])
        .collect();
    let nab = script_w(chain, &kernel)?;
    match &s2.coef {
        None => Ok(nab),
        Some(g) => {
            let gv = g.eval(chain)?;
            let dg = g.d_cyl(chain, u1)?;
            let base = conditional_ti(chain, &rates)?;
            Ok(nab.iter().zip(&base.values).map(|(a, b)| gv * a + dg * b).collect())
        }
    }
}

#[derive(Debug, Clone)]
pub struct BracketTorsion {
    pub u1: HVectorField,
    pub u2: HVectorField,
    pub bracket: Vec<Vec4>,
    pub torsion: Vec<Vec4>,
}

/// `[u¹, u²] = ∇̃_{u¹}u² − ∇̃_{u²}u¹` and `𝕋 = ∇_{u¹}u² − ∇_{u²}u¹ − [u¹, u²]`.
pub fn bracket_torsion_fd(chain: &Arc<DampedChain>, s1: &HFieldSpec, s2: &HFieldSpec, eps: f64) -> Result<BracketTorsion> {
    let u1 = s1.realize(chain)?;
    let u2 = s2.realize(chain)?;
    let a = connection_fd(chain, &u1.values, s2, eps)?;
    let b = connection_fd(chain, &u2.values, s1, eps)?;
    let bracket: Vec<Vec4> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
    let n12 = nabla_damped(chain, &u1.values, s2)?;
    let n21 = nabla_damped(chain, &u2.values, s1)?;
    let torsion = (0..bracket.len()).map(|i| n12[i] - n21[i] - bracket[i]).collect();
    Ok(BracketTorsion { u1, u2, bracket, torsion })
}

/// `(dφ(Q(u¹ ∧ u²)), ½ φ(𝕋(u¹, u²)))`; their sum has zero mean for adapted fields.
pub fn torsion_divergence_terms(chain: &Arc<DampedChain>, s1: &HFieldSpec, s2: &HFieldSpec, phi: &CylOneForm, eps: f64) -> Result<(f64, f64)> {
    let bt = bracket_torsion_fd(chain, s1, s2, eps)?;
    let q = q_apply(&wedge2(&bt.u1, &bt.u2)?)?;
    Ok((phi.dform_eval(&q)?, 0.5 * phi.eval(chain, &bt.torsion)?))
}

/// `div(u¹ ∧ u²) = ½[−(div u²) u¹ + (div u¹) u² + [u¹, u²]]`.
pub fn div_wedge(chain: &Arc<DampedChain>, s1: &HFieldSpec, s2: &HFieldSpec, eps: f64) -> Result<Vec<Vec4>> {
    let bt = bracket_torsion_fd(chain, s1, s2, eps)?;
    let d1 = s1.divergence(chain)?;
    let d2 = s2.divergence(chain)?;
    Ok((0..bt.bracket.len())
        .map(|i| 0.5 * (-d2 * bt.u1.values[i] + d1 * bt.u2.values[i] + bt.bracket[i]))
        .collect())
}

#[derive(Debug, Clone)]
pub struct NablaStar {
    /// `div(U ∧ V) + ½ 𝕋(U, V)`.
    pub nabla_star: Vec<Vec4>,
    /// `div(U ∧ V) + div Q(U ∧ V)` with `div Q(U ∧ V) = ½ 𝕋(U, V)` for adapted fields.
    pub div_one_plus_q: Vec<Vec4>,
    pub residual: f64,
}

/// `∇*(U ∧ V) = div(U ∧ V) + ½ 𝕋(U, V)` at the nodes.
pub fn nabla_star_wedge(chain: &Arc<DampedChain>, s1: &HFieldSpec, s2: &HFieldSpec, eps: f64) -> Result<NablaStar> {
    let bt = bracket_torsion_fd(chain, s1, s2, eps)?;
    let d1 = s1.divergence(chain)?;
    let d2 = s2.divergence(chain)?;
    let div: Vec<Vec4> = (0..bt.bracket.len())
        .map(|i| 0.5 * (-d2 * bt.u1.values[i] + d1 * bt.u2.values[i] + bt.bracket[i]))
        .collect();
    let half_t: Vec<Vec4> = bt.torsion.iter().map(|t| 0.5 * t).collect();
    let nabla_star: Vec<Vec4> = div.iter().zip(&half_t).map(|(d, t)| d + t).collect();
    let div_one_plus_q: Vec<Vec4> = div.iter().zip(&half_t).map(|(d, t)| t + d).collect();
    let residual = nabla_star.iter().zip(&div_one_plus_q).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    Ok(NablaStar { nabla_star, div_one_plus_q, residual })
}

/// Rotation integral `∫ ℛ(u¹ ∧ u²) dx` appearing in the wedge divergence.
pub fn wedge_rotation_integral(chain: &Arc<DampedChain>, s1: &HFieldSpec, s2: &HFieldSpec) -> Result<Vec<Vec4>> {
    let spec = chain.spec();
    let u1 = s1.realize(chain)?;
    let u2 = s2.realize(chain)?;
    let tang = chain.path.tangent_increments()?;
    let n = chain.n_steps();
    let mut acc = Vec4::zeros();
    let mut out = Vec::with_capacity(n + 1);
    out.push(acc);
    for s in 0..n {
        let a = spec.riemann_op(chain.point(s), &crate::linalg::wedge(&u1.values[s], &u2.values[s]));
        acc += chain.par[s].transpose() * (a * tang[s]);
        out.push(chain.par[s + 1] * acc);
    }
    Ok(out)
}

/// `ι_{df} Q(U ∧ V)`, the term by which `∇*` and `div (1+Q)` disagree on `f·U ∧ V`.
pub fn scaling_discrepancy(chain: &Arc<DampedChain>, f: &CylFn, s1: &HFieldSpec, s2: &HFieldSpec) -> Result<Vec<Vec4>> {
    let q = q_apply(&wedge2(&s1.realize(chain)?, &s2.realize(chain)?)?)?;
    Ok(interior_atomic(&q, &f.grad(chain)?))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SkewShape {
    /// `P_x K P_x` for an antisymmetric ambient `K`.
    Ambient(Mat4),
    /// `v ↦ x × v` on `T_x S²`.
    Cross,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkewTerm {
    pub coef: Poly,
    pub freq: f64,
    pub shape: SkewShape,
}

/// Adapted skew field `α_s = Σ c(x_s) cos(ω s) A(x_s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SkewField {
    pub terms: Vec<SkewTerm>,
}

impl SkewField {
    pub fn constant(k: Mat4) -> Self {
        SkewField { terms: vec![SkewTerm { coef: Poly::constant(4, 1.0), freq: 0.0, shape: SkewShape::Ambient(k) }] }
    }

    pub fn at(&self, spec: ManifoldSpec, x: &Point, t: f64) -> Result<Mat4> {
        let p = spec.projection(x);
        let mut a = Mat4::zeros();
        for term in &self.terms {
            let shape = match term.shape {
                SkewShape::Ambient(k) => {
                    if (k + k.transpose()).norm() > 1e-12 {
                        return Err(Error::InvalidArgument("rotation generator must be antisymmetric".into()));
                    }
                    p * k * p
                }
                SkewShape::Cross => {
                    if spec.kind != ManifoldKind::Sphere || spec.dim != 2 {
                        return Err(Error::InvalidArgument("cross-product rotations need sphere(2)".into()));
                    }
                    Mat4::new(0.0, -x[2], x[1], 0.0, x[2], 0.0, -x[0], 0.0, -x[1], x[0], 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
                }
            };
            a += term.coef.eval(x.as_slice()) * (term.freq * t).cos() * shape;
        }
        Ok(a)
    }
}

/// `R^α_t = ∥_t Σ_{s<t} ∥_s⁻¹ α_s X(x_s) ΔB_s`.
pub fn rotation_field(chain: &DampedChain, alpha: &SkewField) -> Result<Vec<Vec4>> {
    let spec = chain.spec();
    let tang = chain.path.tangent_increments()?;
    let n = chain.n_steps();
    let mut acc = Vec4::zeros();
    let mut out = Vec::with_capacity(n + 1);
    out.push(Vec4::zeros());
    for s in 0..n {
        let a = alpha.at(spec, chain.point(s), chain.time(s))?;
        acc += chain.par[s].transpose() * (a * tang[s]);
        out.push(chain.par[s + 1] * acc);
    }
    Ok(out)
}

/// `(dφ(V), φ(div V))` for `V_{s,t} = ∫_0^{s∧t} α_r dr` on flat space, where `div V = R^α`.
pub fn flat_rotation_terms(chain: &Arc<DampedChain>, alpha: &SkewField, phi: &CylOneForm) -> Result<(f64, f64)> {
    let spec = chain.spec();
    if !spec.is_flat() {
        return Err(Error::InvalidArgument("flat Wiener identity needs a flat manifold".into()));
    }
    let n = chain.n_steps();
    let dt = chain.dt();
    let mut j = Vec::with_capacity(n + 1);
    let mut acc = Mat4::zeros();
    j.push(acc);
    for r in 0..n {
        acc += alpha.at(spec, chain.point(r), chain.time(r))? * dt;
        j.push(acc);
    }
    let v = TwoTensorGrid::min_kernel(chain, j)?;
    Ok((phi.dform_eval(&v)?, phi.eval(chain, &rotation_field(chain, alpha)?)?))
}

/// `f(σ) ⟨T𝓘(h)_t − 𝕏(h)_t, p⟩`; zero mean by the conditioning identity.
pub fn conditional_one_vector(chain: &Arc<DampedChain>, prop: &FlowPropagator, h: &CmPath, f: &CylFn, node: usize, p: &Vec4) -> Result<f64> {
    let rates = h.cell_rates(chain.n_steps(), chain.dt());
    let v = derivative_flow_vector(chain, prop, &rates)?;
    let ubar = conditional_ti(chain, &rates)?;
    Ok(f.eval(chain)? * p.dot(&(v[node] - ubar.values[node])))
}

/// `f(σ) pᵀ[(T𝓘h¹ ∧ T𝓘h²)_{s,t} − ((1+Q)(𝕏h¹ ∧ 𝕏h²))_{s,t}] q`.
#[allow(clippy::too_many_arguments)]
pub fn conditional_two_vector(
    chain: &Arc<DampedChain>,
    prop: &FlowPropagator,
    h1: &CmPath,
    h2: &CmPath,
    f: &CylFn,
    s: usize,
    t: usize,
    p: &Vec4,
    q: &Vec4,
) -> Result<f64> {
    let (n, dt) = (chain.n_steps(), chain.dt());
    let r1 = h1.cell_rates(n, dt);
    let r2 = h2.cell_rates(n, dt);
    let v1 = derivative_flow_vector(chain, prop, &r1)?;
    let v2 = derivative_flow_vector(chain, prop, &r2)?;
    let flow = 0.5 * (v1[s] * v2[t].transpose() - v2[s] * v1[t].transpose());
    let g = wedge2(&conditional_ti(chain, &r1)?, &conditional_ti(chain, &r2)?)?;
    let cond = structure_solve(&g)?.ambient_entry(s, t);
    Ok(f.eval(chain)? * p.dot(&((flow - cond) * q)))
}

/// `|2dφ(V¹ ∧ V²) − [V¹ φ(V²) − V² φ(V¹) − φ([V¹, V²])]|` along one path.
pub fn cartan_residual(chain: &Arc<DampedChain>, phi: &CylOneForm, s1: &HFieldSpec, s2: &HFieldSpec, eps: f64) -> Result<f64> {
    let bt = bracket_torsion_fd(chain, s1, s2, eps)?;
    let lhs = 2.0 * phi.dform_eval(&wedge2(&bt.u1, &bt.u2)?)?;
    let a = scalar_fd(chain, &bt.u1.values, eps, |c| phi.eval(c, &s2.realize(c)?.values))?;
    let b = scalar_fd(chain, &bt.u2.values, eps, |c| phi.eval(c, &s1.realize(c)?.values))?;
    Ok((lhs - (a - b - phi.eval(chain, &bt.bracket)?)).abs())
}

/// `|d(fφ)(U) − [(d̄f ∧ φ)(U) + f dφ(U)]|` for `U = (1+Q)V`, with the wedge
/// of one-forms evaluated through Riesz representatives.
pub fn derivation_residual(f: &CylFn, phi: &CylOneForm, base: &WedgeSum) -> Result<f64> {
    let chain = base.chain()?.clone();
    let u = H2Element::new(base.clone())?;
    let grid = u.grid()?;
    let lhs = phi.scaled_by(f).dform_eval(&grid)?;
    let df = riesz_atomic(&chain, &f.grad(&chain)?)?;
    let ph = riesz_atomic(&chain, &phi.atoms(&chain)?)?;
    let rhs = exterior_pair(&df, &ph, &u)? + f.eval(&chain)? * phi.dform_eval(&grid)?;
    Ok((lhs - rhs).abs())
}

/// Per-sample statistics of several configurations evaluated on one shared path.
pub fn sample_columns<F>(setup: &SimSetup, opts: &McOptions, width: usize, wedge: bool, f: F) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&Arc<DampedChain>) -> Result<Vec<f64>> + Sync,
{
    collect(opts.samples, width, |k| {
        let chain = if wedge { setup.chain(opts.seed, k)? } else { setup.chain_vector_only(opts.seed, k)? };
        f(&chain)
    })
}

/// `E[d̄f(R^α)]` for each `(α, f)`; zero since rotations are divergence free.
pub fn rotation_div_check(setup: &SimSetup, cases: &[(SkewField, CylFn)], opts: &McOptions) -> Result<Vec<McReport>> {
    let cols = sample_columns(setup, opts, cases.len(), false, |c| {
        cases
            .iter()
            .map(|(a, f)| f.d_cyl(c, &rotation_field(c, a)?))
            .collect()
    })?;
    Ok(cols.iter().map(|v| summarize(v, opts)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlatWienerReport {
    pub dphi: McReport,
    pub phi_div: McReport,
    pub combined: McReport,
}

/// `E[dφ(V)]`, `E[φ(div V)]` against the given targets, and their sum against zero.
pub fn flat_wiener_check(setup: &SimSetup, alpha: &SkewField, phi: &CylOneForm, targets: (f64, f64), opts: &McOptions) -> Result<FlatWienerReport> {
    let cols = sample_columns(setup, opts, 3, false, |c| {
        let (a, b) = flat_rotation_terms(c, alpha, phi)?;
        Ok(vec![a, b, a + b])
    })?;
    let exact = McOptions { bias: 0.0, ..*opts };
    Ok(FlatWienerReport {
        dphi: summarize_about(&cols[0], targets.0, &exact),
        phi_div: summarize_about(&cols[1], targets.1, &exact),
        combined: summarize(&cols[2], opts),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TorsionConfig {
    pub u1: HFieldSpec,
    pub u2: HFieldSpec,
    pub phi: CylOneForm,
}

/// `E[dφ(Q(u¹ ∧ u²))] + ½ E[φ(𝕋(u¹, u²))]` per configuration.
pub fn torsion_divergence_check(setup: &SimSetup, configs: &[TorsionConfig], eps: f64, opts: &McOptions) -> Result<Vec<McReport>> {
    let cols = sample_columns(setup, opts, configs.len(), true, |c| {
        configs
            .iter()
            .map(|k| torsion_divergence_terms(c, &k.u1, &k.u2, &k.phi, eps).map(|(a, b)| a + b))
            .collect()
    })?;
    Ok(cols.iter().map(|v| summarize(v, opts)).collect())
}

/// `E[dφ(u¹ ∧ u²)] + E[φ(div(u¹ ∧ u²))]` per configuration.
pub fn div_wedge_check(setup: &SimSetup, configs: &[TorsionConfig], eps: f64, opts: &McOptions) -> Result<Vec<McReport>> {
    let cols = sample_columns(setup, opts, configs.len(), false, |c| {
        configs
            .iter()
            .map(|k| {
                let g = wedge2(&k.u1.realize(c)?, &k.u2.realize(c)?)?;
                Ok(k.phi.dform_eval(&g)? + k.phi.eval(c, &div_wedge(c, &k.u1, &k.u2, eps)?)?)
            })
            .collect()
    })?;
    Ok(cols.iter().map(|v| summarize(v, opts)).collect())
}

/// `E[dφ((1+Q)(u¹ ∧ u²))] + E[φ(∇*(u¹ ∧ u²))]` per configuration.
pub fn composite_divergence_check(setup: &SimSetup, configs: &[TorsionConfig], eps: f64, opts: &McOptions) -> Result<Vec<McReport>> {
    let cols = sample_columns(setup, opts, configs.len(), true, |c| {
        configs
            .iter()
            .map(|k| {
                let g = wedge2(&k.u1.realize(c)?, &k.u2.realize(c)?)?;
                let full = g.add_scaled(1.0, &q_apply(&g)?)?;
                Ok(k.phi.dform_eval(&full)? + k.phi.eval(c, &nabla_star_wedge(c, &k.u1, &k.u2, eps)?.nabla_star)?)
            })
            .collect()
    })?;
    Ok(cols.iter().map(|v| summarize(v, opts)).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConditionalProbe {
    /// `f · ⟨T𝓘(h)_t − 𝕏(h)_t, p⟩` at node `t`.
    OneVector { h: CmPath, f: CylFn, node: usize, p: Vec4 },
    /// `f · pᵀ[∧²T𝓘 − (1+Q)∧²𝕏]_{s,t} q`.
    TwoVector { h1: CmPath, h2: CmPath, f: CylFn, s: usize, t: usize, p: Vec4, q: Vec4 },
}

/// Weak checks of the conditional expectations of the derivative flow.
pub fn conditional_weak_check(setup: &SimSetup, probes: &[ConditionalProbe], opts: &McOptions) -> Result<Vec<McReport>> {
    let wedge = probes.iter().any(|p| matches!(p, ConditionalProbe::TwoVector { .. }));
    let cols = sample_columns(setup, opts, probes.len(), wedge, |c| {
        let prop = FlowPropagator::new(c)?;
        probes
            .iter()
            .map(|p| match p {
                ConditionalProbe::OneVector { h, f, node, p } => conditional_one_vector(c, &prop, h, f, *node, p),
                ConditionalProbe::TwoVector { h1, h2, f, s, t, p, q } => conditional_two_vector(c, &prop, h1, h2, f, *s, *t, p, q),
            })
            .collect()
    })?;
    Ok(cols.iter().map(|v| summarize(v, opts)).collect())
}

/// `E⟨p, x_T⟩` against `e^{-nT/2}⟨p, x_0⟩` on `S^n` and `⟨p, x_0⟩` on flat kinds.
pub fn heat_mean_check(setup: &SimSetup, p: &Vec4, opts: &McOptions) -> Result<McReport> {
    let n = setup.n_steps;
    let decay = if setup.spec.is_flat() { 1.0 } else { (-(setup.spec.dim as f64) * setup.horizon / 2.0).exp() };
    let target = decay * p.dot(&setup.x0);
    let cols = collect(opts.samples, 1, |k| {
        let path = setup.path(opts.seed, k)?;
        Ok(vec![p.dot(&path.points[n])])
    })?;
    Ok(summarize_about(&cols[0], target, opts))
}

/// `E[div 𝕏(h)] = 0` for deterministic `h`.
pub fn skorohod_mean_check(setup: &SimSetup, h: &CmPath, opts: &McOptions) -> Result<McReport> {
    let cols = collect(opts.samples, 1, |k| {
        let path = setup.path(opts.seed, k)?;
        Ok(vec![skorohod_div_adapted(&path, &h.cell_rates(setup.n_steps, setup.dt()))?])
    })?;
    Ok(summarize(&cols[0], opts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::basis_vec;

    fn s2_chain(n: usize, seed: u64) -> Arc<DampedChain> {
        SimSetup::new(ManifoldSpec::sphere(2).unwrap(), n, 1.0).chain(seed, 0).unwrap()
    }

    #[test]
    fn flat_fields_have_no_bracket_or_torsion() {
        let c = SimSetup::new(ManifoldSpec::euclidean(2).unwrap(), 16, 1.0).chain(1, 0).unwrap();
        let s1 = HFieldSpec::adapted(CmPath::linear(basis_vec(0)));
        let s2 = HFieldSpec::adapted(CmPath::new(vec![(basis_vec(1), 2.0, 0.0)]));
        let bt = bracket_torsion_fd(&c, &s1, &s2, 1e-3).unwrap();
        assert!(bt.bracket.iter().chain(&bt.torsion).all(|v| v.norm() < 1e-12));
    }

    #[test]
    fn torsion_is_antisymmetric() {
        let c = s2_chain(32, 2);
        let s1 = HFieldSpec::adapted(CmPath::linear(Vec4::new(0.0, 1.0, 0.5, 0.0)));
        let s2 = HFieldSpec::adapted(CmPath::new(vec![(Vec4::new(1.0, 0.0, -1.0, 0.0), 2.0, 0.3)]));
        let a = bracket_torsion_fd(&c, &s1, &s2, 1e-3).unwrap();
        let b = bracket_torsion_fd(&c, &s2, &s1, 1e-3).unwrap();
        for (x, y) in a.torsion.iter().zip(&b.torsion) {
            assert!((x + y).norm() < 1e-8);
        }
        assert!(a.torsion.iter().any(|v| v.norm() > 1e-3));
    }

    #[test]
    fn torsion_is_tensorial() {
        let c = s2_chain(32, 3);
        let f = CylFn::linear(1.0, &Vec4::new(0.0, 1.0, 2.0, 0.0)).unwrap();
        let h1 = CmPath::linear(Vec4::new(0.0, 1.0, 0.5, 0.0));
        let s2 = HFieldSpec::adapted(CmPath::new(vec![(Vec4::new(1.0, 0.0, -1.0, 0.0), 2.0, 0.3)]));
        let plain = bracket_torsion_fd(&c, &HFieldSpec::adapted(h1.clone()), &s2, 1e-3).unwrap();
        let scaled = bracket_torsion_fd(&c, &HFieldSpec::with_coef(f.clone(), h1), &s2, 1e-3).unwrap();
        let fv = f.eval(&c).unwrap();
        for (x, y) in plain.torsion.iter().zip(&scaled.torsion) {
            assert!((fv * x - y).norm() < 1e-7, "{}", (fv * x - y).norm());
        }
    }

    #[test]
    fn tiny_step_is_rejected() {
        let c = s2_chain(8, 4);
        let s = HFieldSpec::adapted(CmPath::linear(basis_vec(1)));
        let u = s.realize(&c).unwrap();
        assert!(matches!(connection_fd(&c, &u.values, &s, 1e-9), Err(Error::RoundoffDominated(_))));
    }

    #[test]
    fn cartan_formula_on_sphere() {
        let c = s2_chain(32, 5);
        let phi = CylOneForm::single(CylFn::linear(0.5, &Vec4::new(0.0, 1.0, 0.0, 0.0)).unwrap(), 1.0, Poly::coordinate(4, 2)).unwrap();
        let s1 = HFieldSpec::adapted(CmPath::linear(Vec4::new(0.0, 1.0, 0.5, 0.0)));
        let s2 = HFieldSpec::adapted(CmPath::new(vec![(Vec4::new(1.0, 0.0, -1.0, 0.0), 2.0, 0.3)]));
        let r = cartan_residual(&c, &phi, &s1, &s2, 1e-3).unwrap();
        assert!(r < 1e-8, "{r}");
    }

    #[test]
    fn derivation_rule_on_sphere() {
        let c = s2_chain(32, 6);
        let s1 = HFieldSpec::adapted(CmPath::linear(Vec4::new(0.0, 1.0, 0.5, 0.0)));
        let s2 = HFieldSpec::adapted(CmPath::new(vec![(Vec4::new(1.0, 0.0, -1.0, 0.0), 2.0, 0.3)]));
        let base = WedgeSum::single(s1.realize(&c).unwrap(), s2.realize(&c).unwrap());
        let f = CylFn::linear(0.25, &Vec4::new(1.0, 1.0, 0.0, 0.0)).unwrap();
        let phi = CylOneForm::single(CylFn::linear(0.5, &basis_vec(2)).unwrap(), 1.0, Poly::coordinate(4, 1)).unwrap();
        assert!(derivation_residual(&f, &phi, &base).unwrap() < 1e-12);
    }

    #[test]
    fn rotation_field_flat_is_alpha_b() {
        let setup = SimSetup::new(ManifoldSpec::euclidean(2).unwrap(), 16, 1.0);
        let c = setup.chain(8, 0).unwrap();
        let k = Mat4::new(0.0, 1.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        let r = rotation_field(&c, &SkewField::constant(k)).unwrap();
        assert!((r[16] - k * c.point(16)).norm() < 1e-14);
    }
}
