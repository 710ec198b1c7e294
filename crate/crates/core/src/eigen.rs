//! Closed-form eigen-decomposition of symmetric 2×2 matrices.

use nalgebra::Vector2;

use crate::{Error, Result};

/// A symmetric 2×2 matrix stored by its three unique entries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sym2 {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl Sym2 {
    pub const IDENTITY: Sym2 = Sym2 { xx: 1.0, xy: 0.0, yy: 1.0 };

    pub fn new(xx: f64, xy: f64, yy: f64) -> Self {
        Sym2 { xx, xy, yy }
    }

    pub fn det(&self) -> f64 {
        self.xx.mul_add(self.yy, -self.xy * self.xy)
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy
    }

    pub fn scaled(&self, k: f64) -> Sym2 {
        Sym2 { xx: self.xx * k, xy: self.xy * k, yy: self.yy * k }
    }

    /// Adds `d` to both diagonal entries.
    pub fn dilated(&self, d: f64) -> Sym2 {
        Sym2 { xx: self.xx + d, xy: self.xy, yy: self.yy + d }
    }

    pub fn mul_vec(&self, v: Vector2<f64>) -> Vector2<f64> {
        Vector2::new(self.xx * v.x + self.xy * v.y, self.xy * v.x + self.yy * v.y)
    }

    /// `vᵀ M⁻¹ v`; `None` when the matrix is singular.
    pub fn inv_quad_form(&self, v: Vector2<f64>) -> Option<f64> {
        let det = self.det();
        if !(det > 0.0) {
            return None;
        }
        Some((self.yy * v.x * v.x - 2.0 * self.xy * v.x * v.y + self.xx * v.y * v.y) / det)
    }

    pub fn frobenius(&self) -> f64 {
        (self.xx * self.xx + 2.0 * self.xy * self.xy + self.yy * self.yy).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.xx.is_finite() && self.xy.is_finite() && self.yy.is_finite()
    }
}

/// Eigenpairs of a positive-definite [`Sym2`], major axis first.
///
/// `e1` and `e2` are unit length and orthogonal; each has its largest
/// magnitude component positive (x wins a tie) so results are reproducible.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigen2 {
    pub lambda1: f64,
    pub lambda2: f64,
    pub e1: Vector2<f64>,
    pub e2: Vector2<f64>,
}

impl Eigen2 {
    pub fn sigma1(&self) -> f64 {
        self.lambda1.sqrt()
    }

    pub fn sigma2(&self) -> f64 {
        self.lambda2.sqrt()
    }

    /// `λ₁e₁e₁ᵀ + λ₂e₂e₂ᵀ`
    pub fn reconstruct(&self) -> Sym2 {
        let (a, b) = (self.e1, self.e2);
        Sym2 {
            xx: self.lambda1 * a.x * a.x + self.lambda2 * b.x * b.x,
            xy: self.lambda1 * a.x * a.y + self.lambda2 * b.x * b.y,
            yy: self.lambda1 * a.y * a.y + self.lambda2 * b.y * b.y,
        }
    }
}

fn canonical_sign(v: Vector2<f64>) -> Vector2<f64> {
    let lead = if v.x.abs() >= v.y.abs() { v.x } else { v.y };
    if lead < 0.0 {
        -v
    } else {
        v
    }
}

/// Decomposes a symmetric positive-definite 2×2 matrix.
///
/// Uses the trace/determinant closed form; the minor eigenvalue comes from
/// `det/λ₁` so it keeps relative precision at large condition numbers.
/// Matrices that are not positive definite are reported, never clamped.
pub fn eigen2x2(cov: &Sym2) -> Result<Eigen2> {
    let Sym2 { xx: a, xy: b, yy: c } = *cov;
    let degenerate = || Error::DegenerateCovariance { xx: a, xy: b, yy: c };
    if !cov.is_finite() {
        return Err(degenerate());
    }
    let half_diff = 0.5 * (a - c);
    let mean = 0.5 * (a + c);
    let radius = half_diff.hypot(b);
    let lambda1 = mean + radius;
    let det = cov.det();
    if !(lambda1 > 0.0) || !(det > 0.0) {
        return Err(degenerate());
    }
    let lambda2 = (det / lambda1).min(lambda1);
    if !(lambda2 > 0.0) {
        return Err(degenerate());
    }

    let e1 = if radius == 0.0 {
        Vector2::new(1.0, 0.0)
    } else if half_diff >= 0.0 {
        Vector2::new(half_diff + radius, b).normalize()
    } else {
        Vector2::new(b, radius - half_diff).normalize()
    };
    let e1 = canonical_sign(e1);
    let e2 = canonical_sign(Vector2::new(-e1.y, e1.x));
    Ok(Eigen2 { lambda1, lambda2, e1, e2 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity() {
        let e = eigen2x2(&Sym2::IDENTITY).unwrap();
        assert_eq!((e.lambda1, e.lambda2), (1.0, 1.0));
        assert_eq!(e.e1, Vector2::new(1.0, 0.0));
        assert_eq!(e.e2, Vector2::new(0.0, 1.0));
    }

    #[test]
    fn diagonal_major_axis_first() {
        let e = eigen2x2(&Sym2::new(4.0, 0.0, 1.0)).unwrap();
        assert_eq!((e.lambda1, e.lambda2), (4.0, 1.0));
        assert_eq!(e.e1, Vector2::new(1.0, 0.0));

        let e = eigen2x2(&Sym2::new(1.0, 0.0, 4.0)).unwrap();
        assert_eq!(e.lambda1, 4.0);
        assert_eq!(e.e1, Vector2::new(0.0, 1.0));
    }

    #[test]
    fn coupled_matrix_residuals() {
        let m = Sym2::new(2.0, 1.0, 2.0);
        let e = eigen2x2(&m).unwrap();
        for (l, v) in [(e.lambda1, e.e1), (e.lambda2, e.e2)] {
            let r = m.mul_vec(v) - v * l;
            assert!(r.norm() <= 1e-9, "residual {r}");
        }
        assert!((e.lambda1 - 3.0).abs() < 1e-12 && (e.lambda2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn non_positive_definite_is_reported() {
        assert!(eigen2x2(&Sym2::new(1.0, 2.0, 1.0)).is_err());
        assert!(eigen2x2(&Sym2::new(0.0, 0.0, 0.0)).is_err());
        assert!(eigen2x2(&Sym2::new(-1.0, 0.0, -1.0)).is_err());
        assert!(eigen2x2(&Sym2::new(f64::NAN, 0.0, 1.0)).is_err());
    }

    #[test]
    fn signs_are_canonical() {
        let e = eigen2x2(&Sym2::new(1.0, -0.9, 1.0)).unwrap();
        for v in [e.e1, e.e2] {
            let lead = if v.x.abs() >= v.y.abs() { v.x } else { v.y };
            assert!(lead > 0.0);
        }
    }
}
