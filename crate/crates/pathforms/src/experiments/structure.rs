//! Pathwise (non Monte Carlo) checks: flat collapse, curvature identities,
//! closed forms and grid-refinement ratio tests.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::random::ConfigRng;
use crate::damped::{h_inner, DampedChain};
use crate::divergence::{bracket_torsion_fd, cartan_residual, derivation_residual, SimSetup};
use crate::error::Result;
use crate::linalg::{basis_vec, wedge, Vec4};
use crate::manifold::ManifoldSpec;
use crate::operator::{damped_curvature_residual, interior_atomic, kernel_op_apply, riesz_atomic, mult_conjugate_residual, pairing_residual, skew_defect, H2Element, MultiplierForm, Operator, WedgeSum};
use crate::path::simulate;
use crate::rng::{splitmix64, Driver};
use crate::two_tensor::{h2_inner, inverse_residual, q_apply, r_apply, wedge2};

/// Finite-difference step for brackets.
pub const FD_EPS: f64 = 1e-3;

/// Coarse and fine residuals of one refinement sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioOutcome {
    pub coarse: Vec<f64>,
    pub fine: Vec<f64>,
}

impl RatioOutcome {
    pub fn ratios(&self) -> Vec<f64> {
        self.coarse.iter().zip(&self.fine).map(|(c, f)| c / f).collect()
    }

    /// Ratio farthest from 2 among the individual cases.
    pub fn worst_ratio(&self) -> f64 {
        self.ratios().into_iter().fold(2.0, |w, r| if (r - 2.0).abs() > (w - 2.0).abs() || r.is_nan() { r } else { w })
    }

    pub fn max_coarse(&self) -> f64 {
        self.coarse.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_fine(&self) -> f64 {
        self.fine.iter().copied().fold(0.0, f64::max)
    }

    /// Ratio of the sup-norm residuals over the whole ensemble at `N` and `2N`.
    pub fn ensemble_ratio(&self) -> f64 {
        self.max_coarse() / self.max_fine()
    }

    /// Ensemble ratio in `[lo, hi]`, or both residuals already at `floor`.
    pub fn first_order(&self, lo: f64, hi: f64, floor: f64) -> bool {
        self.max_coarse().max(self.max_fine()) <= floor || (lo..=hi).contains(&self.ensemble_ratio())
    }
}

/// Fine chain with `2n` steps and the chain of the pairwise-summed increments.
pub fn chain_pair(spec: ManifoldSpec, n: usize, horizon: f64, seed: u64, sample: u64) -> Result<(Arc<DampedChain>, Arc<DampedChain>)> {
    let fine = Driver::generate(seed, sample, 2 * n, horizon, spec.ambient_dim())?;
    let x0 = spec.base_point();
    let coarse = DampedChain::build(simulate(spec, &fine.coarsen()?, &x0)?)?;
    let fine = DampedChain::build(simulate(spec, &fine, &x0)?)?;
    Ok((coarse, fine))
}

fn sweep<F>(setup: &SimSetup, seed: u64, cases: usize, f: F) -> Result<RatioOutcome>
where
    F: Fn(&Arc<DampedChain>, usize) -> Result<f64>,
{
    let mut out = RatioOutcome { coarse: Vec::with_capacity(cases), fine: Vec::with_capacity(cases) };
    for k in 0..cases {
        let (c, fi) = chain_pair(setup.spec, setup.n_steps, setup.horizon, seed, k as u64)?;
        out.coarse.push(f(&c, k)?);
        out.fine.push(f(&fi, k)?);
    }
    Ok(out)
}

/// `(1+Q)(1−𝐑) − I` on random smooth two-vector grids at `n` and `2n` steps.
pub fn mutual_inverse_sweep(setup: &SimSetup, seed: u64, cases: usize) -> Result<RatioOutcome> {
    let mut r = ConfigRng::new(seed, 3, setup.spec.ambient_dim(), setup.horizon);
    let grids: Vec<_> = (0..cases).map(|_| r.smooth_grid()).collect();
    sweep(setup, seed, cases, |c, k| inverse_residual(&grids[k].realize(c)))
}

/// Kernel action of `Q(V)` against the conjugated multiplier, adjoint form.
pub fn conjugacy_sweep(setup: &SimSetup, seed: u64, cases: usize) -> Result<RatioOutcome> {
    let mut r = ConfigRng::new(seed, 5, setup.spec.ambient_dim(), setup.horizon);
    let inputs: Vec<_> = (0..cases).map(|_| (r.smooth_grid(), r.smooth_field())).collect();
    sweep(setup, seed, cases, |c, k| mult_conjugate_residual(&inputs[k].0.realize(c), &inputs[k].1.realize(c)?, MultiplierForm::Adjoint))
}

/// Kernel pairing of `𝐑(U)` against its direct integral, and the largest skewness defect.
pub fn curvature_sweep(setup: &SimSetup, seed: u64, cases: usize) -> Result<(RatioOutcome, f64)> {
    let mut r = ConfigRng::new(seed, 11, setup.spec.ambient_dim(), setup.horizon);
    let inputs: Vec<_> = (0..cases).map(|_| (r.smooth_grid(), r.smooth_field(), r.smooth_field())).collect();
    let outcome = sweep(setup, seed, cases, |c, k| damped_curvature_residual(&inputs[k].0.realize(c), &inputs[k].1.realize(c)?))?;
    let mut defect = 0.0f64;
    for (k, (g, h, kk)) in inputs.iter().enumerate() {
        let c = setup.chain(seed, k as u64)?;
        let op = Operator::Kernel(r_apply(&g.realize(&c))?);
        defect = defect.max(skew_defect(&op, &h.realize(&c)?, &kk.realize(&c)?)?);
    }
    Ok((outcome, defect))
}

/// Largest `|⟨v ∧ ℓ, U⟩ − λ|` style residual of the exterior pairing over random inputs.
pub fn pairing_check(setup: &SimSetup, seed: u64, cases: usize) -> Result<f64> {
    let mut r = ConfigRng::new(seed, 6, setup.spec.ambient_dim(), setup.horizon);
    let mut worst = 0.0f64;
    for k in 0..cases {
        let c = setup.chain(seed, k as u64)?;
        let u = H2Element::new(WedgeSum::single(r.smooth_field().realize(&c)?, r.smooth_field().realize(&c)?))?;
        worst = worst.max(pairing_residual(&r.smooth_field().realize(&c)?, &r.smooth_field().realize(&c)?, &u)?);
    }
    Ok(worst)
}

/// Largest gap between the interior product by a cylindrical one-form taken
/// through its measure representative and through the kernel action on its
/// Riesz representative.
pub fn interior_check(setup: &SimSetup, seed: u64, cases: usize) -> Result<f64> {
    let mut r = ConfigRng::new(seed, 13, setup.spec.ambient_dim(), setup.horizon);
    let mut worst = 0.0f64;
    for k in 0..cases {
        let c = setup.chain(seed, k as u64)?;
        let q = q_apply(&wedge2(&r.smooth_field().realize(&c)?, &r.smooth_field().realize(&c)?)?)?;
        let atoms = r.one_form()?.atoms(&c)?;
        let via_kernel = kernel_op_apply(&q, &riesz_atomic(&c, &atoms)?)?;
        let via_measure = interior_atomic(&q, &atoms);
        worst = via_kernel.values.iter().zip(&via_measure).fold(worst, |w, (a, b)| w.max((a + b).norm()));
    }
    Ok(worst)
}

/// Largest derivation-rule residual over random `(f, φ, V)`.
pub fn derivation_check(setup: &SimSetup, seed: u64, cases: usize) -> Result<f64> {
    let mut r = ConfigRng::new(seed, 7, setup.spec.ambient_dim(), setup.horizon);
    let mut worst = 0.0f64;
    for k in 0..cases {
        let c = setup.chain(seed, k as u64)?;
        let base = WedgeSum::single(r.smooth_field().realize(&c)?, r.smooth_field().realize(&c)?);
        let (f, phi) = (r.cyl_fn()?, r.one_form()?);
        worst = worst.max(derivation_residual(&f, &phi, &base)?);
    }
    Ok(worst)
}

/// Largest Cartan-formula residual over random `(φ, V¹, V²)`, brackets by finite differences.
pub fn cartan_check(setup: &SimSetup, seed: u64, cases: usize) -> Result<f64> {
    let mut r = ConfigRng::new(seed, 12, setup.spec.ambient_dim(), setup.horizon);
    let mut worst = 0.0f64;
    for k in 0..cases {
        let c = setup.chain_vector_only(seed, k as u64)?;
        let cfg = r.torsion_config()?;
        worst = worst.max(cartan_residual(&c, &cfg.phi, &cfg.u1, &cfg.u2, FD_EPS)?);
    }
    Ok(worst)
}

/// Largest deviation from the flat values of `Q`, `𝐑`, `W`, torsion and the `ℋ²` inner product.
pub fn flat_collapse(spec: ManifoldSpec, n: usize, seed: u64) -> Result<f64> {
    let setup = SimSetup::new(spec, n, 1.0);
    let c = setup.chain(seed, 0)?;
    let mut r = ConfigRng::new(seed, 1, spec.ambient_dim(), 1.0);
    let (a, b, e) = (r.smooth_field().realize(&c)?, r.smooth_field().realize(&c)?, r.smooth_field().realize(&c)?);
    let g = wedge2(&a, &b)?;
    let mut worst = q_apply(&g)?.sup_norm().max(r_apply(&g)?.sup_norm());
    let id = crate::linalg::identity_on(spec.ambient_dim());
    for i in 0..=n {
        worst = worst.max((c.w(i) * id - id).norm()).max((c.par[i] * id - id).norm());
    }
    let cfg = r.torsion_config()?;
    let bt = bracket_torsion_fd(&c, &cfg.u1, &cfg.u2, FD_EPS)?;
    worst = bt.torsion.iter().chain(&bt.bracket).fold(worst, |w, v| w.max(v.norm()));
    let h2 = h2_inner(&g, &wedge2(&e, &b)?)?;
    let ip = |x, y| h_inner(x, y);
    let det = 0.5 * (ip(&a, &e)? * ip(&b, &b)? - ip(&a, &b)? * ip(&b, &e)?);
    Ok(worst.max((h2 - det).abs()))
}

/// Largest Weitzenböck residual at `points` random points of `spec`.
pub fn weitzenbock_check(spec: ManifoldSpec, points: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ 0x5745));
    let m = spec.ambient_dim();
    let mut worst = 0.0f64;
    for _ in 0..points {
        let mut x = Vec4::zeros();
        for i in 0..m {
            x[i] = rng.sample(StandardNormal);
        }
        if !spec.is_flat() {
            x /= x.norm();
        }
        worst = worst.max(spec.weitzenbock_identity_residual(&x)?);
    }
    Ok(worst)
}

/// Largest `‖W_t − e^{−t/2}∥_t‖` and `‖W2_t − ∥_t^{(2)}‖` over random paths on `S²`.
pub fn closed_form_check(n: usize, paths: usize, seed: u64) -> Result<(f64, f64)> {
    let setup = SimSetup::new(ManifoldSpec::sphere(2)?, n, 1.0);
    let a = wedge(&basis_vec(1), &basis_vec(2));
    let (mut w_err, mut w2_err) = (0.0f64, 0.0f64);
    for k in 0..paths {
        let c = setup.chain(seed, k as u64)?;
        let p0 = c.spec().projection(c.point(0));
        for i in 0..=n {
            let t = c.time(i);
            let par = c.par[i] * p0;
            w_err = w_err.max((c.w(i) * p0 - (-t / 2.0).exp() * par).norm());
            let w2 = c.w2_apply(i, &a)?;
            w2_err = w2_err.max((w2 - par * a * par.transpose()).norm());
        }
    }
    Ok((w_err, w2_err))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_kinds_collapse() {
        assert!(flat_collapse(ManifoldSpec::euclidean(2).unwrap(), 16, 1).unwrap() < 1e-10);
        assert!(flat_collapse(ManifoldSpec::flat_torus(2).unwrap(), 16, 1).unwrap() < 1e-10);
    }

    #[test]
    fn ratio_bookkeeping() {
        let o = RatioOutcome { coarse: vec![2.0, 1e-15, 3.5], fine: vec![1.0, 1e-15, 1.0] };
        assert_eq!(o.worst_ratio(), 3.5);
        assert_eq!(o.ensemble_ratio(), 3.5);
        assert!(!o.first_order(1.6, 2.4, 1e-12));
        let o = RatioOutcome { coarse: vec![4.0, 1e-15, 3.5], fine: vec![2.0, 1e-15, 1.0] };
        assert!(o.first_order(1.6, 2.4, 1e-12));
        let o = RatioOutcome { coarse: vec![1e-15], fine: vec![1e-13] };
        assert!(o.first_order(1.6, 2.4, 1e-12));
    }

    #[test]
    fn flat_sweeps_vanish() {
        let setup = SimSetup::new(ManifoldSpec::euclidean(2).unwrap(), 16, 1.0);
        let o = mutual_inverse_sweep(&setup, 1, 2).unwrap();
        assert!(o.max_fine() < 1e-12);
        assert!(pairing_check(&setup, 1, 2).unwrap() < 1e-10);
        assert!(derivation_check(&setup, 1, 2).unwrap() < 1e-10);
    }
}
