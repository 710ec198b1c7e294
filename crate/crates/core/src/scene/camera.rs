use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Pinhole camera: rigid world→camera pose plus pixel intrinsics.
///
/// The camera looks down +z; pixel `(i, j)` spans `[i, i+1] × [j, j+1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Camera {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
    pub near: f64,
}

impl Camera {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        rotation: Matrix3<f64>,
        translation: Vector3<f64>,
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        width: u32,
        height: u32,
        near: f64,
    ) -> Result<Self> {
        let cam = Camera { rotation, translation, fx, fy, cx, cy, width, height, near };
        cam.validate()?;
        Ok(cam)
    }

    fn validate(&self) -> Result<()> {
        let gram = self.rotation.transpose() * self.rotation;
        if (gram - Matrix3::identity()).abs().max() > 1e-6 || self.rotation.determinant() <= 0.0 {
            return Err(Error::Camera("rotation block is not a proper orthonormal matrix".into()));
        }
        if !self.translation.iter().all(|t| t.is_finite()) {
            return Err(Error::Camera("non-finite translation".into()));
        }
        if !(self.fx > 0.0 && self.fy > 0.0) || !self.fx.is_finite() || !self.fy.is_finite() {
            return Err(Error::Camera(format!("focal lengths must be positive, got ({}, {})", self.fx, self.fy)));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::Camera(format!("empty image {}x{}", self.width, self.height)));
        }
        if !(self.cx > 0.0 && self.cx < self.width as f64 && self.cy > 0.0 && self.cy < self.height as f64) {
            return Err(Error::Camera(format!(
                "principal point ({}, {}) outside the {}x{} image",
                self.cx, self.cy, self.width, self.height
            )));
        }
        if !(self.near > 0.0) {
            return Err(Error::Camera(format!("near plane must be positive, got {}", self.near)));
        }
        Ok(())
    }

    /// Same pose with intrinsics and resolution multiplied by `k`.
    ///
    /// Image dimensions are rounded to the nearest pixel, at least one.
    pub fn scaled(&self, k: f64) -> Result<Camera> {
        if !(k > 0.0) || !k.is_finite() {
            return Err(Error::Camera(format!("scale must be positive, got {k}")));
        }
        let dim = |d: u32| ((d as f64 * k).round() as u32).max(1);
        Camera::new(
            self.rotation,
            self.translation,
            self.fx * k,
            self.fy * k,
            self.cx * k,
            self.cy * k,
            dim(self.width),
            dim(self.height),
            self.near,
        )
    }

    /// Camera center in world coordinates.
    pub fn center(&self) -> Vector3<f64> {
        -(self.rotation.transpose() * self.translation)
    }

    pub fn from_file(file: &CameraFile) -> Result<Camera> {
        let w = &file.world_to_cam;
        let rotation = Matrix3::new(w[0], w[1], w[2], w[4], w[5], w[6], w[8], w[9], w[10]);
        let translation = Vector3::new(w[3], w[7], w[11]);
        let base = Camera::new(
            rotation,
            translation,
            file.fx,
            file.fy,
            file.cx,
            file.cy,
            file.width,
            file.height,
            file.near,
        )?;
        match file.scale {
            Some(k) => base.scaled(k),
            None => Ok(base),
        }
    }

    pub fn to_file(&self) -> CameraFile {
        let (r, t) = (&self.rotation, &self.translation);
        CameraFile {
            fx: self.fx,
            fy: self.fy,
            cx: self.cx,
            cy: self.cy,
            width: self.width,
            height: self.height,
            world_to_cam: [
                r[(0, 0)],
                r[(0, 1)],
                r[(0, 2)],
                t.x,
                r[(1, 0)],
                r[(1, 1)],
                r[(1, 2)],
                t.y,
                r[(2, 0)],
                r[(2, 1)],
                r[(2, 2)],
                t.z,
            ],
            near: self.near,
            scale: None,
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Camera> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: CameraFile = serde_json::from_str(&text)?;
        Camera::from_file(&file)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(&self.to_file())?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

/// On-disk camera description. `world_to_cam` is the 3×4 rigid transform in
/// row-major order; `scale`, when present, multiplies the intrinsics and the
/// resolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraFile {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
    pub world_to_cam: [f64; 12],
    pub near: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
}
