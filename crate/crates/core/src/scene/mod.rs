//! Scene representation and the 3D → screen-space projection of splats.

mod camera;
mod ply;
mod sh;

use nalgebra::{Matrix2x3, Matrix3, UnitQuaternion, Vector2, Vector3};

pub use camera::{Camera, CameraFile};
pub use ply::{read_ply, read_ply_bytes, write_ply, write_ply_bytes};
pub use sh::{eval_sh, sh_degree, SH_C0};

use crate::eigen::Sym2;
use crate::{Error, Result};

/// Screen-space diagonal dilation (pixels²) applied by the legacy
/// center-sampled renderer so sub-pixel splats never vanish.
pub const LOWPASS_DILATION: f64 = 0.3;

/// One 3D Gaussian primitive, always stored post-activation.
#[derive(Debug, Clone, PartialEq)]
pub struct Splat3D {
    pub mu: Vector3<f64>,
    /// Per-axis standard deviation in world units.
    pub scale: Vector3<f64>,
    pub rot: UnitQuaternion<f64>,
    pub opacity: f64,
    /// Band-major SH coefficients: `sh[i]` is the RGB triple of basis `i`.
    pub sh: Vec<[f64; 3]>,
}

impl Splat3D {
    /// Builds a splat, checking scale, opacity and SH band count.
    pub fn new(
        mu: Vector3<f64>,
        scale: Vector3<f64>,
        rot: UnitQuaternion<f64>,
        opacity: f64,
        sh: Vec<[f64; 3]>,
    ) -> Result<Self> {
        if !scale.iter().all(|s| *s > 0.0 && s.is_finite()) {
            return Err(Error::InvalidArgument(format!("splat scale must be positive, got {scale:?}")));
        }
        if !(0.0..=1.0).contains(&opacity) {
            return Err(Error::InvalidArgument(format!("opacity {opacity} outside [0, 1]")));
        }
        sh_degree(sh.len())?;
        Ok(Splat3D { mu, scale, rot, opacity, sh })
    }

    /// A splat with a flat (view-independent) linear RGB color.
    pub fn with_color(
        mu: Vector3<f64>,
        scale: Vector3<f64>,
        rot: UnitQuaternion<f64>,
        opacity: f64,
        rgb: [f64; 3],
    ) -> Result<Self> {
        let dc = rgb.map(|c| (c - 0.5) / SH_C0);
        Splat3D::new(mu, scale, rot, opacity, vec![dc])
    }

    pub fn covariance(&self) -> Matrix3<f64> {
        build_covariance(&self.scale, &self.rot)
    }
}

/// `R S Sᵀ Rᵀ`
pub fn build_covariance(scale: &Vector3<f64>, rot: &UnitQuaternion<f64>) -> Matrix3<f64> {
    let r = rot.to_rotation_matrix().into_inner();
    let m = r * Matrix3::from_diagonal(scale);
    let cov = m * m.transpose();
    // exact symmetry
    (cov + cov.transpose()) * 0.5
}

/// A splat projected to screen space.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedSplat {
    /// Mean in pixel coordinates; pixel `(i, j)` spans `[i, i+1] × [j, j+1]`.
    pub mu2d: Vector2<f64>,
    pub cov2d: Sym2,
    /// Camera-space z.
    pub depth: f64,
    pub opacity: f64,
    /// Linear RGB for this view.
    pub color: [f64; 3],
}

impl ProjectedSplat {
    /// Screen-space influence `o·exp(−½ dᵀΣ⁻¹d)` at `x`, without clamps.
    pub fn alpha_at(&self, x: Vector2<f64>) -> f64 {
        match self.cov2d.inv_quad_form(x - self.mu2d) {
            Some(q) => self.opacity * (-0.5 * q).exp(),
            None => 0.0,
        }
    }
}

/// Why a splat produced no screen-space footprint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cull {
    /// Camera-space depth at or in front of the near plane.
    NearPlane,
    /// Projection produced NaN or infinity.
    NonFinite,
    /// Screen covariance not positive definite.
    Degenerate,
}

/// Projects a splat through the camera.
///
/// `lowpass` is added to both diagonal entries of the screen covariance
/// after the Jacobian transform. The color is the SH evaluated along the
/// ray from the camera center to the splat.
pub fn project_splat(splat: &Splat3D, cam: &Camera, lowpass: f64) -> Result<ProjectedSplat, Cull> {
    let p = cam.rotation * splat.mu + cam.translation;
    let (x, y, z) = (p.x, p.y, p.z);
    if !(z > cam.near) {
        return if z.is_nan() { Err(Cull::NonFinite) } else { Err(Cull::NearPlane) };
    }
    let mu2d = Vector2::new(cam.fx * x / z + cam.cx, cam.fy * y / z + cam.cy);

    let jac = perspective_jacobian(cam, &p);
    let t = jac * cam.rotation;
    let cov = t * splat.covariance() * t.transpose();
    let cov2d = Sym2::new(cov[(0, 0)], 0.5 * (cov[(0, 1)] + cov[(1, 0)]), cov[(1, 1)]).dilated(lowpass);

    if !(mu2d.x.is_finite() && mu2d.y.is_finite() && cov2d.is_finite()) {
        return Err(Cull::NonFinite);
    }
    if !(cov2d.xx > 0.0 && cov2d.det() > 0.0) {
        return Err(Cull::Degenerate);
    }

    let dir = (splat.mu - cam.center()).normalize();
    let color = eval_sh(&splat.sh, &dir);
    Ok(ProjectedSplat { mu2d, cov2d, depth: z, opacity: splat.opacity, color })
}

/// Jacobian of `(fx·x/z + cx, fy·y/z + cy)` at camera-space point `p`.
pub fn perspective_jacobian(cam: &Camera, p: &Vector3<f64>) -> Matrix2x3<f64> {
    let (x, y, z) = (p.x, p.y, p.z);
    let iz = 1.0 / z;
    Matrix2x3::new(
        cam.fx * iz,
        0.0,
        -cam.fx * x * iz * iz,
        0.0,
        cam.fy * iz,
        -cam.fy * y * iz * iz,
    )
}
