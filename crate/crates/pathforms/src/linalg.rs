//! Fixed-size ambient linear algebra.
//!
//! Every manifold here embeds in at most `R^4`, so vectors and maps are
//! stored padded to four coordinates. Unused coordinates stay zero.

use nalgebra::{SMatrix, SVector};

pub const MAX_AMBIENT: usize = 4;
pub const MAX_WEDGE: usize = 6;

pub type Vec4 = SVector<f64, 4>;
pub type Mat4 = SMatrix<f64, 4, 4>;
pub type Vec6 = SVector<f64, 6>;
pub type Mat6 = SMatrix<f64, 6, 6>;

/// Index pairs `(a, b)`, `a < b`, labelling the basis of antisymmetric matrices.
pub const PAIRS: [(usize, usize); MAX_WEDGE] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

pub fn wedge_dim(m: usize) -> usize {
    m * (m - 1) / 2
}

/// `u ⊗ v` as the matrix `u vᵀ`.
pub fn outer(u: &Vec4, v: &Vec4) -> Mat4 {
    u * v.transpose()
}

/// `u ∧ v = ½(u⊗v − v⊗u)`.
pub fn wedge(u: &Vec4, v: &Vec4) -> Mat4 {
    0.5 * (u * v.transpose() - v * u.transpose())
}

pub fn frob(a: &Mat4, b: &Mat4) -> f64 {
    a.component_mul(b).sum()
}

/// Identity on the first `m` coordinates.
pub fn identity_on(m: usize) -> Mat4 {
    let mut p = Mat4::zeros();
    for i in 0..m {
        p[(i, i)] = 1.0;
    }
    p
}

pub fn basis_vec(i: usize) -> Vec4 {
    let mut e = Vec4::zeros();
    e[i] = 1.0;
    e
}

/// Coordinates of an antisymmetric matrix in the basis `e_a e_bᵀ − e_b e_aᵀ`.
pub fn skew_coords(a: &Mat4) -> Vec6 {
    let mut c = Vec6::zeros();
    for (k, &(i, j)) in PAIRS.iter().enumerate() {
        c[k] = a[(i, j)];
    }
    c
}

pub fn skew_from_coords(c: &Vec6) -> Mat4 {
    let mut a = Mat4::zeros();
    for (k, &(i, j)) in PAIRS.iter().enumerate() {
        a[(i, j)] = c[k];
        a[(j, i)] = -c[k];
    }
    a
}

pub fn skew_basis(k: usize) -> Mat4 {
    let (i, j) = PAIRS[k];
    let mut a = Mat4::zeros();
    a[(i, j)] = 1.0;
    a[(j, i)] = -1.0;
    a
}

/// Matrix of a linear map on antisymmetric `m × m` matrices, in skew coordinates.
/// Columns beyond `wedge_dim(m)` are left zero.
pub fn skew_operator_matrix(m: usize, f: impl Fn(&Mat4) -> Mat4) -> Mat6 {
    let mut out = Mat6::zeros();
    for k in 0..wedge_dim(m) {
        let col = skew_coords(&f(&skew_basis(k)));
        out.set_column(k, &col);
    }
    out
}

/// `∧²S(A) = S A Sᵀ`.
pub fn wedge_power(s: &Mat4, a: &Mat4) -> Mat4 {
    s * a * s.transpose()
}

/// Neumaier compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn skew_coords_round_trip() {
        let a = wedge(&Vec4::new(1.0, 2.0, -1.0, 0.5), &Vec4::new(0.0, 1.0, 3.0, -2.0));
        let back = skew_from_coords(&skew_coords(&a));
        assert!((a - back).norm() < 1e-15);
    }

    #[test]
    fn compensated_sum_keeps_small_terms() {
        let mut s = CompensatedSum::default();
        s.add(1e16);
        for _ in 0..10 {
            s.add(1.0);
        }
        s.add(-1e16);
        assert_eq!(s.value(), 10.0);
    }
}
