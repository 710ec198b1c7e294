//! Deterministic synthetic scenes used as rendering fixtures.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix3, UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scene::{Camera, Splat3D, SH_C0};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SceneKind {
    /// A dense opaque disc in front of a contrasting backdrop.
    TwoPlane,
    /// A two-color checkerboard wall.
    Checker,
    /// `n` random anisotropic splats.
    Cloud(usize),
}

impl fmt::Display for SceneKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SceneKind::TwoPlane => f.write_str("two-plane"),
            SceneKind::Checker => f.write_str("checker"),
            SceneKind::Cloud(n) => write!(f, "cloud{n}"),
        }
    }
}

impl FromStr for SceneKind {
    type Err = Error;

    /// `two-plane`, `checker`, `cloud` (2000 splats) or `cloudN`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two-plane" | "twoplane" => Ok(SceneKind::TwoPlane),
            "checker" => Ok(SceneKind::Checker),
            "cloud" => Ok(SceneKind::Cloud(2000)),
            _ => s
                .strip_prefix("cloud")
                .and_then(|n| n.parse().ok())
                .map(SceneKind::Cloud)
                .ok_or_else(|| Error::InvalidArgument(format!("unknown scene {s:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthScene {
    pub splats: Vec<Splat3D>,
    pub camera: Camera,
}

/// Base resolution of every synthetic camera.
pub const BASE_SIZE: u32 = 128;

/// 128×128 pinhole at the origin looking down +z with a 53° field of view.
pub fn default_camera() -> Camera {
    let s = BASE_SIZE as f64;
    Camera::new(Matrix3::identity(), Vector3::zeros(), s, s, s / 2.0, s / 2.0, BASE_SIZE, BASE_SIZE, 0.01)
        .expect("valid built-in camera")
}

pub fn generate(kind: SceneKind, seed: u64) -> SynthScene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let splats = match kind {
        SceneKind::TwoPlane => two_plane(&mut rng),
        SceneKind::Checker => checker(&mut rng),
        SceneKind::Cloud(n) => cloud(&mut rng, n),
    };
    SynthScene { splats, camera: default_camera() }
}

/// Facing the camera, flattened along z.
fn disc(mu: Vector3<f64>, radius: f64, opacity: f64, rgb: [f64; 3]) -> Splat3D {
    Splat3D::with_color(mu, Vector3::new(radius, radius, radius * 0.1), UnitQuaternion::identity(), opacity, rgb)
        .expect("valid synthetic splat")
}

fn jitter(rng: &mut ChaCha8Rng, amount: f64) -> f64 {
    rng.random_range(-amount..amount)
}

/// Splats on a jittered grid covering `[-half, half]²` at depth `z`, with
/// about `pixels` pixels between neighbors at base resolution.
fn plane(
    rng: &mut ChaCha8Rng,
    z: f64,
    half: f64,
    pixels: f64,
    opacity: f64,
    mut color: impl FnMut(f64, f64) -> Option<[f64; 3]>,
) -> Vec<Splat3D> {
    let spacing = pixels * z / BASE_SIZE as f64;
    let n = (2.0 * half / spacing).ceil() as i64;
    let mut out = Vec::new();
    for j in 0..=n {
        for i in 0..=n {
            let x = -half + i as f64 * spacing + jitter(rng, 0.2 * spacing);
            let y = -half + j as f64 * spacing + jitter(rng, 0.2 * spacing);
            if let Some(rgb) = color(x, y) {
                let shade = 1.0 + jitter(rng, 0.05);
                out.push(disc(Vector3::new(x, y, z), 0.7 * spacing, opacity, rgb.map(|c| (c * shade).clamp(0.0, 1.0))));
            }
        }
    }
    out
}

fn two_plane(rng: &mut ChaCha8Rng) -> Vec<Splat3D> {
    let (cx, cy, r) = (0.3, -0.2, 1.0);
    let mut splats = plane(rng, 4.0, 1.2, 1.5, 1.0, |x, y| {
        ((x - cx).powi(2) + (y - cy).powi(2) <= r * r).then_some([0.6, 0.05, 0.05])
    });
    splats.extend(plane(rng, 8.0, 4.5, 1.5, 1.0, |_, _| Some([0.9, 0.9, 0.8])));
    splats
}

fn checker(rng: &mut ChaCha8Rng) -> Vec<Splat3D> {
    let cell = 0.5;
    plane(rng, 6.0, 3.5, 1.5, 1.0, |x, y| {
        let parity = ((x / cell).floor() as i64 + (y / cell).floor() as i64).rem_euclid(2);
        Some(if parity == 0 { [0.95, 0.95, 0.95] } else { [0.05, 0.1, 0.3] })
    })
}

fn cloud(rng: &mut ChaCha8Rng, n: usize) -> Vec<Splat3D> {
    (0..n)
        .map(|_| {
            let z = rng.random_range(3.0..9.0);
            let mu = Vector3::new(rng.random_range(-0.5..0.5) * z, rng.random_range(-0.5..0.5) * z, z);
            let scale = Vector3::from_fn(|_, _| 0.01 * z * rng.random_range(0.2f64..3.0));
            let axis = Vector3::from_fn(|_, _| rng.random_range(-1.0..1.0));
            let rot = UnitQuaternion::from_scaled_axis(axis * std::f64::consts::PI);
            let opacity = rng.random_range(0.2..1.0);
            let mut sh = vec![[0.0; 3]; 4];
            sh[0] = std::array::from_fn(|_| (rng.random_range(0.0..1.0) - 0.5) / SH_C0);
            for band in &mut sh[1..] {
                *band = std::array::from_fn(|_| rng.random_range(-0.2..0.2));
            }
            Splat3D::new(mu, scale, rot, opacity, sh).expect("valid synthetic splat")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_scene() {
        for kind in [SceneKind::TwoPlane, SceneKind::Checker, SceneKind::Cloud(50)] {
            assert_eq!(generate(kind, 7).splats, generate(kind, 7).splats);
        }
        assert_ne!(generate(SceneKind::Cloud(50), 7).splats, generate(SceneKind::Cloud(50), 8).splats);
    }

    #[test]
    fn cloud_has_requested_size() {
        assert_eq!(generate(SceneKind::Cloud(123), 1).splats.len(), 123);
    }

    #[test]
    fn scene_names_round_trip() {
        for kind in [SceneKind::TwoPlane, SceneKind::Checker, SceneKind::Cloud(40)] {
            assert_eq!(kind.to_string().parse::<SceneKind>().unwrap(), kind);
        }
        assert_eq!("cloud".parse::<SceneKind>().unwrap(), SceneKind::Cloud(2000));
        assert!("cloudy".parse::<SceneKind>().is_err());
    }
}
