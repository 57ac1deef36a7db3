//! Embedded manifolds: projection `X`, its derivative, Ricci, curvature
//! operators on two-vectors, and geodesic steps with parallel transport.
//!
//! All three kinds are isometric embeddings `M ⊂ R^m` with `m ≤ 4`.
//! A tangent vector at `x` is an ambient vector `v` with `P_x v = v`.
//! Two-vectors are antisymmetric `m × m` matrices, `u ∧ v = ½(u vᵀ − v uᵀ)`.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{basis_vec, identity_on, wedge, Mat4, Vec4, MAX_AMBIENT};

pub type Point = Vec4;
pub type TangentVec = Vec4;

/// Tolerance for `|x| = 1` on spheres.
pub const ON_MANIFOLD_TOL: f64 = 1e-9;

/// Coordinate period of the flat torus `R^n / (2π Z)^n`.
pub const TORUS_PERIOD: f64 = std::f64::consts::TAU;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ManifoldKind {
    Euclidean,
    FlatTorus,
    Sphere,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifoldSpec {
    pub kind: ManifoldKind,
    pub dim: usize,
}

impl ManifoldSpec {
    pub fn new(kind: ManifoldKind, dim: usize) -> Result<Self> {
        let spec = ManifoldSpec { kind, dim };
        if dim == 0 || spec.ambient_dim() > MAX_AMBIENT {
            return Err(Error::Dimension(format!(
                "{spec} needs ambient dimension {} (supported: 1..={MAX_AMBIENT})",
                spec.ambient_dim()
            )));
        }
        Ok(spec)
    }

    pub fn euclidean(n: usize) -> Result<Self> {
        Self::new(ManifoldKind::Euclidean, n)
    }

    pub fn flat_torus(n: usize) -> Result<Self> {
        Self::new(ManifoldKind::FlatTorus, n)
    }

    pub fn sphere(n: usize) -> Result<Self> {
        Self::new(ManifoldKind::Sphere, n)
    }

    pub fn ambient_dim(&self) -> usize {
        match self.kind {
            ManifoldKind::Sphere => self.dim + 1,
            _ => self.dim,
        }
    }

    pub fn is_flat(&self) -> bool {
        self.kind != ManifoldKind::Sphere
    }

    /// Default starting point: `e₁` on spheres, the origin otherwise.
    pub fn base_point(&self) -> Point {
        match self.kind {
            ManifoldKind::Sphere => basis_vec(0),
            _ => Vec4::zeros(),
        }
    }

    pub fn check_point(&self, x: &Point) -> Result<()> {
        let m = self.ambient_dim();
        let stray = (m..MAX_AMBIENT).map(|i| x[i].abs()).fold(0.0, f64::max);
        if stray > 0.0 {
            return Err(Error::Dimension(format!("point has nonzero coordinate beyond R^{m}")));
        }
        if self.kind == ManifoldKind::Sphere {
            let defect = (x.norm() - 1.0).abs();
            if defect > ON_MANIFOLD_TOL {
                return Err(Error::OffManifold(defect));
            }
        }
        Ok(())
    }

    /// Orthogonal projection `P_x = X(x)` onto `T_xM`.
    pub fn projection(&self, x: &Point) -> Mat4 {
        let id = identity_on(self.ambient_dim());
        match self.kind {
            ManifoldKind::Sphere => id - x * x.transpose(),
            _ => id,
        }
    }

    /// `X(x) w`.
    pub fn x_project(&self, x: &Point, w: &Vec4) -> Result<TangentVec> {
        self.check_point(x)?;
        Ok(self.projection(x) * w)
    }

    /// Matrix of `v ↦ ∇_v X(e)` on `T_xM`.
    pub fn nabla_matrix(&self, x: &Point, e: &Vec4) -> Mat4 {
        match self.kind {
            ManifoldKind::Sphere => -x.dot(e) * self.projection(x),
            _ => Mat4::zeros(),
        }
    }

    /// `∇_v X(e) = X(x) dX(v) e`.
    pub fn nabla_x(&self, x: &Point, v: &TangentVec, e: &Vec4) -> TangentVec {
        self.nabla_matrix(x, e) * v
    }

    pub fn ricci_matrix(&self, x: &Point) -> Mat4 {
        match self.kind {
            ManifoldKind::Sphere => (self.dim as f64 - 1.0) * self.projection(x),
            _ => Mat4::zeros(),
        }
    }

    pub fn ricci_sharp(&self, x: &Point, v: &TangentVec) -> TangentVec {
        self.ricci_matrix(x) * v
    }

    /// Curvature operator `ℛ` on two-vectors at `x`.
    pub fn riemann_op(&self, x: &Point, a: &Mat4) -> Mat4 {
        match self.kind {
            ManifoldKind::Sphere => {
                let p = self.projection(x);
                p * a * p
            }
            _ => Mat4::zeros(),
        }
    }

    /// `ℛ²(A) = d∧²(Ric#) A − 2 ℛ(A)`.
    pub fn weitzenbock2(&self, x: &Point, a: &Mat4) -> Mat4 {
        let ric = self.ricci_matrix(x);
        ric * a + a * ric.transpose() - 2.0 * self.riemann_op(x, a)
    }

    /// Exponential step `exp_x(v)` and the ambient orthogonal map carrying
    /// `T_xM` onto `T_yM` by parallel transport along the geodesic.
    pub fn geodesic_step(&self, x: &Point, v: &TangentVec) -> Result<(Point, Mat4)> {
        match self.kind {
            ManifoldKind::Sphere => {
                let theta = v.norm();
                if theta >= std::f64::consts::PI {
                    return Err(Error::CutLocus(theta));
                }
                if theta == 0.0 {
                    return Ok((*x, Mat4::identity()));
                }
                let vh = v / theta;
                let (s, c) = theta.sin_cos();
                let y = c * x + s * vh;
                let r = Mat4::identity() + (c - 1.0) * (x * x.transpose() + vh * vh.transpose())
                    + s * (vh * x.transpose() - x * vh.transpose());
                Ok((y / y.norm(), r))
            }
            _ => Ok((x + v, Mat4::identity())),
        }
    }

    /// Inverse of the exponential map on the injectivity domain.
    pub fn log_map(&self, x: &Point, y: &Point) -> Result<TangentVec> {
        match self.kind {
            ManifoldKind::Sphere => {
                let c = x.dot(y).clamp(-1.0, 1.0);
                let w = y - c * x;
                let wn = w.norm();
                if wn == 0.0 {
                    if c > 0.0 {
                        return Ok(Vec4::zeros());
                    }
                    return Err(Error::CutLocus(std::f64::consts::PI));
                }
                let theta = wn.atan2(c);
                Ok(theta * w / wn)
            }
            _ => Ok(y - x),
        }
    }

    /// Parallel transport along the minimal geodesic from `x` to `y`.
    pub fn transport_between(&self, x: &Point, y: &Point) -> Result<Mat4> {
        let v = self.log_map(x, y)?;
        Ok(self.geodesic_step(x, &v)?.1)
    }

    /// Representative of `x` in the fundamental domain `[0, 2π)^n` (torus only).
    pub fn wrap(&self, x: &Point) -> Point {
        match self.kind {
            ManifoldKind::FlatTorus => x.map(|c| c.rem_euclid(TORUS_PERIOD)),
            _ => *x,
        }
    }

    /// Orthonormal basis of `T_xM`.
    pub fn tangent_basis(&self, x: &Point) -> Vec<TangentVec> {
        let p = self.projection(x);
        let mut basis: Vec<Vec4> = Vec::with_capacity(self.dim);
        for i in 0..self.ambient_dim() {
            let mut v = p * basis_vec(i);
            for b in &basis {
                v -= b.dot(&v) * b;
            }
            let n = v.norm();
            if n > 1e-8 {
                basis.push(v / n);
            }
            if basis.len() == self.dim {
                break;
            }
        }
        basis
    }

    /// Operator norm on `∧²T_xM` of
    /// `−d∧²(½Ric#) + Σᵢ ∇Xⁱ ⊗ ∇Xⁱ + ½ℛ²`, which vanishes identically.
    pub fn weitzenbock_identity_residual(&self, x: &Point) -> Result<f64> {
        self.check_point(x)?;
        let tb = self.tangent_basis(x);
        let mut planes = Vec::new();
        for a in 0..tb.len() {
            for b in a + 1..tb.len() {
                // √2 (τ_a ∧ τ_b) has unit Frobenius norm.
                planes.push(std::f64::consts::SQRT_2 * wedge(&tb[a], &tb[b]));
            }
        }
        if planes.is_empty() {
            return Ok(0.0);
        }
        let ric = self.ricci_matrix(x);
        let nab: Vec<Mat4> = (0..self.ambient_dim()).map(|i| self.nabla_matrix(x, &basis_vec(i))).collect();
        let apply = |a: &Mat4| -> Mat4 {
            let mut out = -0.5 * (ric * a + a * ric.transpose()) + 0.5 * self.weitzenbock2(x, a);
            for n in &nab {
                out += n * a * n.transpose();
            }
            out
        };
        let k = planes.len();
        let mut mat = DMatrix::<f64>::zeros(k, k);
        for (j, pj) in planes.iter().enumerate() {
            let img = apply(pj);
            for (i, pi) in planes.iter().enumerate() {
                mat[(i, j)] = pi.component_mul(&img).sum();
            }
        }
        Ok(mat.singular_values().max())
    }
}

impl fmt::Display for ManifoldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self.kind {
            ManifoldKind::Euclidean => "euclidean",
            ManifoldKind::FlatTorus => "flat_torus",
            ManifoldKind::Sphere => "sphere",
        };
        write!(f, "{name}({})", self.dim)
    }
}

impl FromStr for ManifoldSpec {
    type Err = Error;

    /// Parses `sphere(2)`, `euclidean(3)`, `flat_torus(2)`; `torus(2)` is accepted too.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("cannot parse manifold `{s}`"));
        let s = s.trim();
        let open = s.find('(').ok_or_else(bad)?;
        if !s.ends_with(')') {
            return Err(bad());
        }
        let dim: usize = s[open + 1..s.len() - 1].trim().parse().map_err(|_| bad())?;
        let kind = match &s[..open] {
            "euclidean" | "flat" => ManifoldKind::Euclidean,
            "flat_torus" | "torus" => ManifoldKind::FlatTorus,
            "sphere" => ManifoldKind::Sphere,
            _ => return Err(bad()),
        };
        ManifoldSpec::new(kind, dim)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn e(i: usize) -> Vec4 {
        basis_vec(i)
    }

    #[test]
    fn projection_on_sphere() {
        let s2 = ManifoldSpec::sphere(2).unwrap();
        let w = s2.x_project(&e(0), &Vec4::new(1.0, 2.0, 3.0, 0.0)).unwrap();
        assert_eq!(w, Vec4::new(0.0, 2.0, 3.0, 0.0));
    }

    #[test]
    fn off_manifold_rejected() {
        let s2 = ManifoldSpec::sphere(2).unwrap();
        let r = s2.x_project(&Vec4::new(1.1, 0.0, 0.0, 0.0), &e(1));
        assert!(matches!(r, Err(Error::OffManifold(_))));
    }

    #[test]
    fn nabla_x_on_sphere() {
        let s2 = ManifoldSpec::sphere(2).unwrap();
        assert_eq!(s2.nabla_x(&e(0), &e(1), &e(0)), -e(1));
        assert_eq!(s2.nabla_x(&e(0), &e(1), &e(2)), Vec4::zeros());
    }

    #[test]
    fn ricci_on_sphere() {
        let s2 = ManifoldSpec::sphere(2).unwrap();
        let s3 = ManifoldSpec::sphere(3).unwrap();
        assert_eq!(s2.ricci_sharp(&e(0), &e(1)), e(1));
        assert_eq!(s3.ricci_sharp(&e(0), &e(2)), 2.0 * e(2));
    }

    #[test]
    fn weitzenbock2_values() {
        let s2 = ManifoldSpec::sphere(2).unwrap();
        let s3 = ManifoldSpec::sphere(3).unwrap();
        let a = wedge(&e(1), &e(2));
        assert!(s2.weitzenbock2(&e(0), &a).norm() < 1e-15);
        assert!((s3.weitzenbock2(&e(0), &a) - 2.0 * a).norm() < 1e-15);
        assert_eq!(s2.riemann_op(&e(0), &a), a);
    }

    #[test]
    fn quarter_turn_geodesic() {
        let s2 = ManifoldSpec::sphere(2).unwrap();
        let (y, r) = s2.geodesic_step(&e(0), &(FRAC_PI_2 * e(1))).unwrap();
        assert!((y - e(1)).norm() < 1e-15);
        assert!((r * e(1) + e(0)).norm() < 1e-15);
        assert!((r * e(2) - e(2)).norm() < 1e-15);
    }

    #[test]
    fn cut_locus_is_an_error() {
        let s2 = ManifoldSpec::sphere(2).unwrap();
        assert!(matches!(
            s2.geodesic_step(&e(0), &(std::f64::consts::PI * e(1))),
            Err(Error::CutLocus(_))
        ));
    }

    #[test]
    fn log_inverts_exp() {
        let s3 = ManifoldSpec::sphere(3).unwrap();
        let x = Vec4::new(0.5, 0.5, 0.5, 0.5);
        let v = s3.projection(&x) * Vec4::new(0.3, -1.0, 0.2, 0.4);
        let (y, _) = s3.geodesic_step(&x, &v).unwrap();
        assert!((s3.log_map(&x, &y).unwrap() - v).norm() < 1e-12);
    }

    #[test]
    fn flat_kinds_are_trivial() {
        for spec in [ManifoldSpec::euclidean(2).unwrap(), ManifoldSpec::flat_torus(3).unwrap()] {
            let x = Vec4::new(0.3, -2.0, 0.0, 0.0);
            assert_eq!(spec.ricci_matrix(&x), Mat4::zeros());
            assert_eq!(spec.weitzenbock_identity_residual(&x).unwrap(), 0.0);
            let (_, r) = spec.geodesic_step(&x, &e(1)).unwrap();
            assert_eq!(r, Mat4::identity());
        }
    }

    #[test]
    fn torus_wraps_only_on_request() {
        let t2 = ManifoldSpec::flat_torus(2).unwrap();
        let (y, _) = t2.geodesic_step(&Vec4::new(6.0, 0.0, 0.0, 0.0), &e(0)).unwrap();
        assert_eq!(y[0], 7.0);
        assert!((t2.wrap(&y)[0] - (7.0 - TORUS_PERIOD)).abs() < 1e-15);
    }

    #[test]
    fn parse_and_display() {
        let s: ManifoldSpec = "sphere(2)".parse().unwrap();
        assert_eq!(s.to_string(), "sphere(2)");
        assert!("sphere(4)".parse::<ManifoldSpec>().is_err());
        assert!("klein(2)".parse::<ManifoldSpec>().is_err());
    }
}
