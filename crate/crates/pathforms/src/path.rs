//! Geodesic Euler paths and the derivative flow along them.

use crate::error::{Error, Result};
use crate::linalg::{Mat4, Vec4};
use crate::manifold::{ManifoldSpec, Point};
use crate::rng::Driver;

/// A discrete path `x_0, …, x_N` together with the per-step transports.
#[derive(Debug, Clone)]
pub struct DiscretePath {
    pub spec: ManifoldSpec,
    pub dt: f64,
    pub points: Vec<Point>,
    /// `steps[i]` carries `T_{x_i}M` to `T_{x_{i+1}}M`.
    pub steps: Vec<Mat4>,
    /// Tangent increments `X(x_i) ΔB_i`, present for simulated paths.
    pub tangent_increments: Option<Vec<Vec4>>,
    /// Kernel components `(I − X(x_i)) ΔB_i`, present for simulated paths.
    pub kernel_increments: Option<Vec<Vec4>>,
}

impl DiscretePath {
    pub fn n_steps(&self) -> usize {
        self.steps.len()
    }

    pub fn horizon(&self) -> f64 {
        self.dt * self.n_steps() as f64
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.dt
    }

    /// Builds a path through given points, joining neighbours by minimal geodesics.
    pub fn from_points(spec: ManifoldSpec, points: Vec<Point>, dt: f64) -> Result<Self> {
        if points.len() < 2 || !(dt > 0.0) {
            return Err(Error::InvalidArgument("a path needs two points and a positive step".into()));
        }
        for x in &points {
            spec.check_point(x)?;
        }
        let steps = points
            .windows(2)
            .map(|w| spec.transport_between(&w[0], &w[1]))
            .collect::<Result<Vec<_>>>()?;
        Ok(DiscretePath { spec, dt, points, steps, tangent_increments: None, kernel_increments: None })
    }

    fn increments(&self) -> Result<(&[Vec4], &[Vec4])> {
        match (&self.tangent_increments, &self.kernel_increments) {
            (Some(t), Some(k)) => Ok((t, k)),
            _ => Err(Error::InvalidArgument("path carries no Brownian driver".into())),
        }
    }

    pub fn tangent_increments(&self) -> Result<&[Vec4]> {
        Ok(self.increments()?.0)
    }

    pub fn kernel_increments(&self) -> Result<&[Vec4]> {
        Ok(self.increments()?.1)
    }
}

/// Geodesic Euler scheme `x_{i+1} = exp_{x_i}(X(x_i) ΔB_i)` for `dx = X(x) ∘ dB`.
pub fn simulate(spec: ManifoldSpec, driver: &Driver, x0: &Point) -> Result<DiscretePath> {
    spec.check_point(x0)?;
    if driver.ambient_dim != spec.ambient_dim() {
        return Err(Error::Dimension(format!(
            "driver is {}-dimensional, {spec} needs {}",
            driver.ambient_dim,
            spec.ambient_dim()
        )));
    }
    let n = driver.n_steps();
    let mut points = Vec::with_capacity(n + 1);
    let mut steps = Vec::with_capacity(n);
    let mut tang = Vec::with_capacity(n);
    let mut kern = Vec::with_capacity(n);
    let mut x = *x0;
    points.push(x);
    for db in &driver.increments {
        let w = spec.projection(&x) * db;
        let (y, r) = spec.geodesic_step(&x, &w)?;
        tang.push(w);
        kern.push(db - w);
        steps.push(r);
        x = y;
        points.push(x);
    }
    Ok(DiscretePath {
        spec,
        dt: driver.dt,
        points,
        steps,
        tangent_increments: Some(tang),
        kernel_increments: Some(kern),
    })
}

/// `∥_i = R_{i−1} ⋯ R_0`, an ambient orthogonal matrix mapping `T_{x_0}M` onto `T_{x_i}M`.
pub fn transport_chain(path: &DiscretePath) -> Vec<Mat4> {
    let mut out = Vec::with_capacity(path.n_steps() + 1);
    let mut acc = Mat4::identity();
    out.push(acc);
    for r in &path.steps {
        acc = r * acc;
        out.push(acc);
    }
    out
}

/// Skorohod divergence of the adapted field with kernel rates `ḣ`:
/// `−Σ ⟨ḣ_i, X(x_i) ΔB_i⟩`.
pub fn skorohod_div_adapted(path: &DiscretePath, hdot: &[Vec4]) -> Result<f64> {
    let tang = path.tangent_increments()?;
    if hdot.len() != tang.len() {
        return Err(Error::ResolutionMismatch(hdot.len(), tang.len()));
    }
    Ok(-hdot.iter().zip(tang).map(|(h, w)| h.dot(w)).sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::basis_vec;

    #[test]
    fn sphere_path_stays_on_sphere() {
        let s2 = ManifoldSpec::sphere(2).unwrap();
        let d = Driver::generate(3, 0, 256, 1.0, 3).unwrap();
        let p = simulate(s2, &d, &s2.base_point()).unwrap();
        for x in &p.points {
            assert!((x.norm() - 1.0).abs() < 1e-12);
        }
        let par = transport_chain(&p);
        let last = par.last().unwrap();
        assert!((last.transpose() * last - Mat4::identity()).norm() < 1e-12);
        // ∥ maps tangent vectors at x_0 to tangent vectors at x_N.
        let v = last * basis_vec(1);
        assert!(v.dot(p.points.last().unwrap()).abs() < 1e-12);
    }

    #[test]
    fn flat_path_is_brownian_motion() {
        let r2 = ManifoldSpec::euclidean(2).unwrap();
        let d = Driver::generate(3, 1, 64, 1.0, 2).unwrap();
        let p = simulate(r2, &d, &Vec4::zeros()).unwrap();
        assert!((p.points[64] - d.brownian()[64]).norm() < 1e-14);
    }

    #[test]
    fn dimension_mismatch() {
        let s2 = ManifoldSpec::sphere(2).unwrap();
        let d = Driver::generate(3, 1, 8, 1.0, 2).unwrap();
        assert!(matches!(simulate(s2, &d, &s2.base_point()), Err(Error::Dimension(_))));
    }

    #[test]
    fn from_points_recovers_steps() {
        let s2 = ManifoldSpec::sphere(2).unwrap();
        let d = Driver::generate(5, 0, 32, 1.0, 3).unwrap();
        let p = simulate(s2, &d, &s2.base_point()).unwrap();
        let q = DiscretePath::from_points(s2, p.points.clone(), p.dt).unwrap();
        for (a, b) in p.steps.iter().zip(&q.steps) {
            assert!((a - b).norm() < 1e-10);
        }
    }
}
