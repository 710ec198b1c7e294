//! Per-pixel blending kernels.
//!
//! All kernels composite a depth-sorted list of screen-space splats over one
//! unit pixel and differ only in how they model alpha and transmittance:
//!
//! * [`BlendMode::ScalarCenter`]: alpha sampled at the pixel center, scalar
//!   transmittance, legacy clamps.
//! * [`BlendMode::ScalarIntegrated`]: alpha integrated over the pixel, scalar
//!   transmittance.
//! * [`BlendMode::GaussianBlending`]: transmittance tracked as a uniform
//!   window refitted after every splat (see [`window`]).
//! * [`BlendMode::Supersample`]: `K×K` center-sampled sub-pixel blends,
//!   the physically correct limit as `K` grows.

pub mod window;

use std::fmt;
use std::str::FromStr;

use nalgebra::Vector2;

pub use window::{
    compute_moments, init_window, integrated_weight, to_splat_frame, update_window, GaussianMoments, SplatFrame,
    TransmittanceWindow,
};

use crate::eigen::{eigen2x2, Eigen2, Sym2};
use crate::scene::ProjectedSplat;
use crate::{Error, Result};

/// Largest alpha the center-sampled kernel will use.
pub const ALPHA_MAX: f64 = 0.99;
/// Center-sampled contributions below this alpha are skipped.
pub const ALPHA_MIN: f64 = 1.0 / 255.0;
/// Default transmittance below which a pixel stops blending.
pub const DEFAULT_EPSILON: f64 = 1e-4;

/// A projected splat with its eigen-decomposition and inverse covariance
/// precomputed.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedSplat {
    pub splat: ProjectedSplat,
    pub eig: Eigen2,
    /// `Σ⁻¹`
    pub conic: Sym2,
}

impl PreparedSplat {
    pub fn new(splat: ProjectedSplat) -> Result<Self> {
        let eig = eigen2x2(&splat.cov2d)?;
        let c = splat.cov2d;
        let det = c.det();
        let conic = Sym2::new(c.yy / det, -c.xy / det, c.xx / det);
        Ok(PreparedSplat { splat, eig, conic })
    }

    /// Raw Gaussian influence `o·exp(−½ dᵀΣ⁻¹d)` at `x`.
    #[inline]
    pub fn alpha_at(&self, x: Vector2<f64>) -> f64 {
        let d = x - self.splat.mu2d;
        let q = self.conic.xx * d.x * d.x + 2.0 * self.conic.xy * d.x * d.y + self.conic.yy * d.y * d.y;
        self.splat.opacity * (-0.5 * q).exp()
    }

    pub fn color(&self) -> [f64; 3] {
        self.splat.color
    }
}

/// Center-sampled alpha, clamped to [`ALPHA_MAX`]. Callers skip values
/// below [`ALPHA_MIN`].
pub fn scalar_alpha_center(pixel_center: Vector2<f64>, splat: &PreparedSplat) -> f64 {
    splat.alpha_at(pixel_center).min(ALPHA_MAX)
}

/// Alpha integrated over the unit pixel centered at `pixel_center`.
///
/// The pixel is rotated into the splat's principal frame (by at most 45°)
/// and integrated exactly there as `o·I⁰_{σ₁}·I⁰_{σ₂}`.
pub fn scalar_alpha_integrated(pixel_center: Vector2<f64>, splat: &PreparedSplat) -> f64 {
    let frame = to_splat_frame(&init_window(pixel_center), splat);
    integrated_weight(&frame, 1.0, splat.splat.opacity)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BlendMode {
    ScalarCenter,
    ScalarIntegrated,
    GaussianBlending,
    /// `k×k` sub-samples per pixel.
    Supersample(u32),
}

impl BlendMode {
    /// Screen-space low-pass dilation this mode uses unless overridden.
    pub fn default_lowpass(self) -> f64 {
        match self {
            BlendMode::ScalarCenter => crate::scene::LOWPASS_DILATION,
            _ => 0.0,
        }
    }

    pub fn short_name(self) -> String {
        match self {
            BlendMode::ScalarCenter => "center".into(),
            BlendMode::ScalarIntegrated => "integrated".into(),
            BlendMode::GaussianBlending => "gb".into(),
            BlendMode::Supersample(k) => format!("ss{k}"),
        }
    }
}

impl fmt::Display for BlendMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.short_name())
    }
}

impl FromStr for BlendMode {
    type Err = Error;

    /// Accepts `center`, `integrated`, `gb`, `ss` (K = 16) and `ssK`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "center" => Ok(BlendMode::ScalarCenter),
            "integrated" => Ok(BlendMode::ScalarIntegrated),
            "gb" => Ok(BlendMode::GaussianBlending),
            "ss" => Ok(BlendMode::Supersample(16)),
            _ => s
                .strip_prefix("ss")
                .and_then(|k| k.parse::<u32>().ok())
                .filter(|k| *k >= 1)
                .map(BlendMode::Supersample)
                .ok_or_else(|| Error::InvalidArgument(format!("unknown blend mode '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlendParams {
    pub epsilon: f64,
    pub background: [f64; 3],
}

impl Default for BlendParams {
    fn default() -> Self {
        BlendParams { epsilon: DEFAULT_EPSILON, background: [0.0; 3] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelResult {
    pub color: [f64; 3],
    /// Scalar T for the scalar modes, window mass for Gaussian Blending, mean
    /// sub-sample T for supersampling.
    pub residual: f64,
}

#[inline]
fn accumulate(acc: &mut [f64; 3], c: [f64; 3], w: f64) {
    for k in 0..3 {
        acc[k] += c[k] * w;
    }
}

fn finish(mut color: [f64; 3], residual: f64, params: &BlendParams) -> PixelResult {
    accumulate(&mut color, params.background, residual);
    PixelResult { color, residual }
}

/// Composites `splats` (front to back) over the unit pixel centered at
/// `pixel_center`.
pub fn blend_pixel(splats: &[&PreparedSplat], pixel_center: Vector2<f64>, mode: BlendMode, params: &BlendParams) -> PixelResult {
    match mode {
        BlendMode::ScalarCenter => {
            let (color, t) = blend_center(splats, pixel_center, params.epsilon, true);
            finish(color, t, params)
        }
        BlendMode::ScalarIntegrated => {
            let mut color = [0.0; 3];
            let mut t = 1.0;
            for s in splats {
                let alpha = scalar_alpha_integrated(pixel_center, s);
                accumulate(&mut color, s.color(), alpha * t);
                t *= 1.0 - alpha;
                if t < params.epsilon {
                    break;
                }
            }
            finish(color, t, params)
        }
        BlendMode::GaussianBlending => {
            let mut color = [0.0; 3];
            let mut win = init_window(pixel_center);
            for s in splats {
                let (weight, next) = update_window(&win, s);
                accumulate(&mut color, s.color(), weight);
                win = next;
                if win.mass() < params.epsilon {
                    break;
                }
            }
            finish(color, win.mass(), params)
        }
        BlendMode::Supersample(k) => {
            let k = k.max(1);
            let origin = pixel_center - Vector2::new(0.5, 0.5);
            let step = 1.0 / k as f64;
            let mut color = [0.0; 3];
            let mut t_sum = 0.0;
            for a in 0..k {
                let y = origin.y + (a as f64 + 0.5) * step;
                for b in 0..k {
                    let x = origin.x + (b as f64 + 0.5) * step;
                    let (c, t) = blend_center(splats, Vector2::new(x, y), params.epsilon, false);
                    accumulate(&mut color, c, 1.0);
                    t_sum += t;
                }
            }
            let n = (k * k) as f64;
            finish(color.map(|c| c / n), t_sum / n, params)
        }
    }
}

/// Center-sampled scalar compositing at one point. `legacy` enables the
/// [`ALPHA_MAX`] clamp and [`ALPHA_MIN`] skip.
#[inline]
fn blend_center(splats: &[&PreparedSplat], x: Vector2<f64>, epsilon: f64, legacy: bool) -> ([f64; 3], f64) {
    let mut color = [0.0; 3];
    let mut t = 1.0;
    for s in splats {
        let mut alpha = s.alpha_at(x);
        if legacy {
            if alpha < ALPHA_MIN {
                continue;
            }
            alpha = alpha.min(ALPHA_MAX);
        }
        accumulate(&mut color, s.color(), alpha * t);
        t *= 1.0 - alpha;
        if t < epsilon {
            break;
        }
    }
    (color, t)
}
