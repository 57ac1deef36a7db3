//! Cylindrical functions `f(σ) = F(σ_{t_1}, …, σ_{t_k})` with polynomial `F`,
//! and cylindrical one-forms `φ = Σ_a f_a ρ_{t_a}^* dg_a`.

use log::warn;

use crate::damped::DampedChain;
use crate::error::{Error, Result};
use crate::linalg::{Mat4, Vec4, MAX_AMBIENT};
use crate::two_tensor::TwoTensorGrid;

/// Highest total degree accepted by `Poly::new`.
pub const MAX_DEGREE: u32 = 8;

/// Polynomial in variables `x[k]`; a monomial is a coefficient and `(variable, power)` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    pub nvars: usize,
    pub terms: Vec<(f64, Vec<(usize, u32)>)>,
}

impl Poly {
    pub fn new(nvars: usize, terms: Vec<(f64, Vec<(usize, u32)>)>) -> Result<Self> {
        for (_, mono) in &terms {
            if mono.iter().any(|&(v, _)| v >= nvars) {
                return Err(Error::InvalidArgument("monomial variable out of range".into()));
            }
            if mono.iter().map(|&(_, p)| p).sum::<u32>() > MAX_DEGREE {
                return Err(Error::InvalidArgument(format!("degree above {MAX_DEGREE}")));
            }
        }
        Ok(Poly { nvars, terms })
    }

    pub fn constant(nvars: usize, c: f64) -> Self {
        Poly { nvars, terms: vec![(c, vec![])] }
    }

    /// The coordinate function `x[var]`.
    pub fn coordinate(nvars: usize, var: usize) -> Self {
        Poly { nvars, terms: vec![(1.0, vec![(var, 1)])] }
    }

    /// `Σ p_k x[k]` over the first `MAX_AMBIENT` variables.
    pub fn linear(nvars: usize, p: &Vec4) -> Self {
        let terms = (0..MAX_AMBIENT).filter(|&k| p[k] != 0.0).map(|k| (p[k], vec![(k, 1)])).collect();
        Poly { nvars, terms }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(c, mono)| c * mono.iter().map(|&(v, p)| x[v].powi(p as i32)).product::<f64>())
            .sum()
    }

    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.nvars];
        for (c, mono) in &self.terms {
            for (k, &(v, p)) in mono.iter().enumerate() {
                if p == 0 {
                    continue;
                }
                let mut d = c * p as f64 * x[v].powi(p as i32 - 1);
                for (l, &(w, q)) in mono.iter().enumerate() {
                    if l != k {
                        d *= x[w].powi(q as i32);
                    }
                }
                g[v] += d;
            }
        }
        g
    }

    fn remap(&self, nvars: usize, map: impl Fn(usize) -> usize) -> Poly {
        Poly { nvars, terms: self.terms.iter().map(|(c, m)| (*c, m.iter().map(|&(v, p)| (map(v), p)).collect())).collect() }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (a, ma) in &self.terms {
            for (b, mb) in &other.terms {
                let mut m = ma.clone();
                m.extend(mb.iter().copied());
                terms.push((a * b, m));
            }
        }
        Poly { nvars: self.nvars.max(other.nvars), terms }
    }
}

/// Snaps times to grid nodes, warning when a time is off the grid.
pub fn snap_nodes(times: &[f64], dt: f64, n: usize) -> Result<Vec<usize>> {
    times
        .iter()
        .map(|&t| {
            let k = (t / dt).round();
            if !(0.0..=n as f64).contains(&k) {
                return Err(Error::InvalidArgument(format!("time {t} outside [0, T]")));
            }
            if (t - k * dt).abs() > 1e-9 {
                warn!("time {t} is off the grid; snapped to {}", k * dt);
            }
            Ok(k as usize)
        })
        .collect()
}

/// `f(σ) = F(σ_{t_1}, …, σ_{t_k})`; variable `4a + c` is coordinate `c` of `σ_{t_a}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CylFn {
    pub times: Vec<f64>,
    pub poly: Poly,
}

impl CylFn {
    pub fn new(times: Vec<f64>, poly: Poly) -> Result<Self> {
        if times.windows(2).any(|w| w[0] >= w[1]) || times.first().is_some_and(|&t| t <= 0.0) {
            return Err(Error::InvalidArgument("cylinder times must be increasing in (0, T]".into()));
        }
        if poly.nvars != MAX_AMBIENT * times.len() {
            return Err(Error::Dimension("polynomial arity does not match the times".into()));
        }
        Ok(CylFn { times, poly })
    }

    pub fn constant(c: f64) -> Self {
        CylFn { times: vec![], poly: Poly::constant(0, c) }
    }

    /// `⟨p, σ_t⟩`.
    pub fn linear(t: f64, p: &Vec4) -> Result<Self> {
        CylFn::new(vec![t], Poly::linear(MAX_AMBIENT, p))
    }

    fn coords(&self, chain: &DampedChain, nodes: &[usize]) -> Vec<f64> {
        nodes.iter().flat_map(|&k| chain.point(k).iter().copied().collect::<Vec<_>>()).collect()
    }

    pub fn nodes(&self, chain: &DampedChain) -> Result<Vec<usize>> {
        snap_nodes(&self.times, chain.dt(), chain.n_steps())
    }

    pub fn eval(&self, chain: &DampedChain) -> Result<f64> {
        let nodes = self.nodes(chain)?;
        Ok(self.poly.eval(&self.coords(chain, &nodes)))
    }

    /// Node indices with the tangent gradients `X(σ_{t_i}) ∂_i F`.
    pub fn grad(&self, chain: &DampedChain) -> Result<Vec<(usize, Vec4)>> {
        let nodes = self.nodes(chain)?;
        let g = self.poly.grad(&self.coords(chain, &nodes));
        let spec = chain.spec();
        Ok(nodes
            .iter()
            .enumerate()
            .map(|(a, &k)| {
                let raw = Vec4::from_column_slice(&g[MAX_AMBIENT * a..MAX_AMBIENT * (a + 1)]);
                (k, spec.projection(chain.point(k)) * raw)
            })
            .collect())
    }

    /// `d̄f(v) = Σ_i ⟨∇_i F, v_{t_i}⟩`.
    pub fn d_cyl(&self, chain: &DampedChain, v: &[Vec4]) -> Result<f64> {
        if v.len() != chain.n_steps() + 1 {
            return Err(Error::ResolutionMismatch(v.len().saturating_sub(1), chain.n_steps()));
        }
        Ok(self.grad(chain)?.iter().map(|(k, g)| g.dot(&v[*k])).sum())
    }

    /// Pointwise product, merging the time sets.
    pub fn mul(&self, other: &CylFn) -> CylFn {
        let mut times: Vec<f64> = self.times.iter().chain(&other.times).copied().collect();
        times.sort_by(|a, b| a.partial_cmp(b).unwrap());
        times.dedup();
        let slot = |t: f64| times.iter().position(|&s| s == t).unwrap();
        let nv = MAX_AMBIENT * times.len();
        let a = self.poly.remap(nv, |v| MAX_AMBIENT * slot(self.times[v / MAX_AMBIENT]) + v % MAX_AMBIENT);
        let b = other.poly.remap(nv, |v| MAX_AMBIENT * slot(other.times[v / MAX_AMBIENT]) + v % MAX_AMBIENT);
        let mut poly = a.mul(&b);
        poly.nvars = nv;
        CylFn { times, poly }
    }
}

/// One term `f · ρ_t^* dg` of a cylindrical one-form, `g` a polynomial on `R^4`.
#[derive(Debug, Clone, PartialEq)]
pub struct OneFormTerm {
    pub coef: CylFn,
    pub time: f64,
    pub g: Poly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CylOneForm {
    pub terms: Vec<OneFormTerm>,
}

impl CylOneForm {
    pub fn single(coef: CylFn, time: f64, g: Poly) -> Result<Self> {
        if g.nvars != MAX_AMBIENT {
            return Err(Error::Dimension("g must be a polynomial on the ambient space".into()));
        }
        Ok(CylOneForm { terms: vec![OneFormTerm { coef, time, g }] })
    }

    /// Per term: coefficient value, node, tangent `∇g` at that node.
    fn resolved(&self, chain: &DampedChain) -> Result<Vec<(f64, usize, Vec4, &CylFn)>> {
        let spec = chain.spec();
        self.terms
            .iter()
            .map(|t| {
                let node = snap_nodes(&[t.time], chain.dt(), chain.n_steps())?[0];
                let x = chain.point(node);
                let raw = Vec4::from_column_slice(&t.g.grad(x.as_slice()));
                Ok((t.coef.eval(chain)?, node, spec.projection(x) * raw, &t.coef))
            })
            .collect()
    }

    /// `φ(v) = Σ_a f_a(σ) ⟨∇g_a(σ_{t_a}), v_{t_a}⟩`.
    pub fn eval(&self, chain: &DampedChain, v: &[Vec4]) -> Result<f64> {
        if v.len() != chain.n_steps() + 1 {
            return Err(Error::ResolutionMismatch(v.len().saturating_sub(1), chain.n_steps()));
        }
        Ok(self.resolved(chain)?.iter().map(|(f, k, g, _)| f * g.dot(&v[*k])).sum())
    }

    /// Atoms `(t_a, f_a ∇g_a)` of the measure representing `φ`.
    pub fn atoms(&self, chain: &DampedChain) -> Result<Vec<(usize, Vec4)>> {
        Ok(self.resolved(chain)?.iter().map(|(f, k, g, _)| (*k, *f * g)).collect())
    }

    /// `dφ(U) = Σ_a ½[Σ_i ∇_iF_aᵀ U_{t_i,t_a} ∇g_a − ∇g_aᵀ U_{t_a,t_i} ∇_iF_a]`.
    pub fn dform_eval(&self, u: &TwoTensorGrid) -> Result<f64> {
        let chain = &u.chain;
        let mut s = 0.0;
        for (_, ka, ga, coef) in self.resolved(chain)? {
            for (ki, fi) in coef.grad(chain)? {
                let a: Mat4 = u.ambient_entry(ki, ka);
                let b: Mat4 = u.ambient_entry(ka, ki);
                s += 0.5 * (fi.dot(&(a * ga)) - ga.dot(&(b * fi)));
            }
        }
        Ok(s)
    }

    /// `f · φ`.
    pub fn scaled_by(&self, f: &CylFn) -> CylOneForm {
        CylOneForm {
            terms: self
                .terms
                .iter()
                .map(|t| OneFormTerm { coef: t.coef.mul(f), time: t.time, g: t.g.clone() })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{basis_vec, wedge};
    use crate::manifold::ManifoldSpec;
    use crate::path::simulate;
    use crate::rng::Driver;
    use proptest::prelude::*;

    #[test]
    fn gradient_of_monomial() {
        let p = Poly::new(2, vec![(3.0, vec![(0, 2), (1, 1)])]).unwrap();
        assert_eq!(p.eval(&[2.0, 5.0]), 60.0);
        assert_eq!(p.grad(&[2.0, 5.0]), vec![60.0, 12.0]);
        assert!(Poly::new(1, vec![(1.0, vec![(0, 9)])]).is_err());
    }

    #[test]
    fn product_merges_times() {
        let f = CylFn::linear(0.5, &basis_vec(0)).unwrap();
        let g = CylFn::linear(1.0, &basis_vec(1)).unwrap();
        let h = f.mul(&g).mul(&f);
        assert_eq!(h.times, vec![0.5, 1.0]);
        let x = [2.0, 0.0, 0.0, 0.0, 0.0, 3.0, 0.0, 0.0];
        assert_eq!(h.poly.eval(&x), 12.0);
    }

    #[test]
    fn dform_on_flat_wedge() {
        let spec = ManifoldSpec::euclidean(2).unwrap();
        let d = Driver::generate(1, 0, 8, 1.0, 2).unwrap();
        let chain = crate::damped::DampedChain::build(simulate(spec, &d, &Vec4::zeros()).unwrap()).unwrap();
        // φ = x¹(T) d(x²)(T), U_{T,T} = e1 ∧ e2 · 2 ⇒ dφ(U) = 1.
        let phi = CylOneForm::single(CylFn::linear(1.0, &basis_vec(0)).unwrap(), 1.0, Poly::coordinate(4, 1)).unwrap();
        let u = TwoTensorGrid::dense_transported(&chain, |_, _| 2.0 * wedge(&basis_vec(0), &basis_vec(1)));
        assert!((phi.dform_eval(&u).unwrap() - 1.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn gradient_matches_difference(a in -2.0f64..2.0, b in -2.0f64..2.0, c in -1.0f64..1.0) {
            let p = Poly::new(2, vec![(c, vec![(0, 3)]), (1.0, vec![(0, 1), (1, 2)]), (-0.5, vec![(1, 1)])]).unwrap();
            let h = 1e-6;
            let g = p.grad(&[a, b]);
            let fd0 = (p.eval(&[a + h, b]) - p.eval(&[a - h, b])) / (2.0 * h);
            let fd1 = (p.eval(&[a, b + h]) - p.eval(&[a, b - h])) / (2.0 * h);
            prop_assert!((g[0] - fd0).abs() < 1e-6);
            prop_assert!((g[1] - fd1).abs() < 1e-6);
        }
    }
}
