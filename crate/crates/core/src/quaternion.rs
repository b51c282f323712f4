//! Quaternions as complex 2×2 matrices commuting with j up to conjugation.
//!
//! ```text
//! j = ( 0  1 ; −1  0 ),   j A = Ā j   ⇔   A = ( a  b ; −b̄  ā )
//! |A|² = det A = |a|² + |b|²,   ℍ ≅ ℝ⁴ via (Re a, Im a, Re b, Im b)
//! ```

use nalgebra::Matrix2;
use num_complex::Complex64 as C64;

pub type Mat2 = Matrix2<C64>;

pub fn j() -> Mat2 {
    Mat2::new(
        C64::new(0.0, 0.0),
        C64::new(1.0, 0.0),
        C64::new(-1.0, 0.0),
        C64::new(0.0, 0.0),
    )
}

/// −j v̄, the quaternionic partner of an eigenvector.
pub fn j_partner(v: &nalgebra::Vector2<C64>) -> nalgebra::Vector2<C64> {
    nalgebra::Vector2::new(-v[1].conj(), v[0].conj())
}

/// ‖jA − Āj‖.
pub fn structure_defect(a: &Mat2) -> f64 {
    (j() * a - a.map(|z| z.conj()) * j()).norm()
}

pub fn to_r4(a: &Mat2) -> [f64; 4] {
    [a[(0, 0)].re, a[(0, 0)].im, a[(0, 1)].re, a[(0, 1)].im]
}

pub fn from_r4(v: [f64; 4]) -> Mat2 {
    let a = C64::new(v[0], v[1]);
    let b = C64::new(v[2], v[3]);
    Mat2::new(a, b, -b.conj(), a.conj())
}

pub fn dot(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sq(a: &[f64; 4]) -> f64 {
    dot(a, a)
}

/// Eigenvector of the trace-free matrix m for the eigenvalue `mu`, taking
/// whichever of the two candidate columns is better conditioned.
pub fn eigvec(m: &Mat2, mu: C64) -> nalgebra::Vector2<C64> {
    let (a, b, c) = (m[(0, 0)], m[(0, 1)], m[(1, 0)]);
    let v1 = nalgebra::Vector2::new(b, mu - a);
    let v2 = nalgebra::Vector2::new(mu + a, c);
    let v = if v1.norm() >= v2.norm() { v1 } else { v2 };
    v / C64::from(v.norm())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_norm() {
        let q = from_r4([0.3, -1.2, 0.5, 2.0]);
        assert!(structure_defect(&q) < 1e-15);
        assert!((q.determinant().re - norm_sq(&to_r4(&q))).abs() < 1e-14);
        let p = from_r4([1.0, 0.2, -0.7, 0.1]);
        assert!(structure_defect(&(q * p)) < 1e-14);
    }
}
