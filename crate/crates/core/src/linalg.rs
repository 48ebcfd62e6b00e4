//! Small dense helpers on top of `nalgebra` for 2×2 complex and 4×4 real matrices.

use crate::C64;
use nalgebra::{Matrix2, Matrix4, Vector2};

pub type Mat2 = Matrix2<C64>;
pub type Vec2 = Vector2<C64>;
pub type Mat4 = Matrix4<f64>;

pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// `e^{iφ}`.
#[inline]
pub fn cis(phase: f64) -> C64 {
    C64::from_polar(1.0, phase)
}

pub fn mat2(a: C64, b: C64, c: C64, d: C64) -> Mat2 {
    Mat2::new(a, b, c, d)
}

/// Frobenius norm `sqrt(Tr(X*X))`.
pub fn frobenius(m: &Mat2) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn det2(m: &Mat2) -> C64 {
    m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]
}

pub fn inverse2(m: &Mat2) -> Option<Mat2> {
    let d = det2(m);
    if d.norm() == 0.0 {
        return None;
    }
    Some(Mat2::new(m[(1, 1)], -m[(0, 1)], -m[(1, 0)], m[(0, 0)]) / d)
}

/// Largest entry of `|M* M - 1|`.
pub fn unitarity_defect(m: &Mat2) -> f64 {
    let p = m.adjoint() * m - Mat2::identity();
    p.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Both roots of `λ² - tr λ + det`, ordered by decreasing modulus.
pub fn eigenvalues2(m: &Mat2) -> [C64; 2] {
    let tr = m[(0, 0)] + m[(1, 1)];
    let det = det2(m);
    let disc = (tr * tr - 4.0 * det).sqrt();
    // avoid cancellation: pick the root where tr and disc add constructively
    let q = if (tr.conj() * disc).re >= 0.0 { tr + disc } else { tr - disc };
    let (l1, l2) = if q.norm() == 0.0 {
        (C64::new(0.0, 0.0), C64::new(0.0, 0.0))
    } else {
        let l1 = q / 2.0;
        (l1, det / l1)
    };
    if l1.norm() >= l2.norm() {
        [l1, l2]
    } else {
        [l2, l1]
    }
}

pub fn spectral_radius2(m: &Mat2) -> f64 {
    eigenvalues2(m)[0].norm()
}

/// Largest absolute entry of a 2×2 difference.
pub fn max_abs_diff2(a: &Mat2, b: &Mat2) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}
