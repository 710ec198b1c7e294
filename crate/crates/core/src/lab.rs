//! Transmittance-error harnesses and image metrics.

use std::io::Write;

use nalgebra::Vector2;
use rayon::prelude::*;

use crate::blend::{blend_pixel, BlendMode, BlendParams, PreparedSplat};
use crate::eigen::Sym2;
use crate::quadrature::integrate_2d;
use crate::raster::Framebuffer;
use crate::scene::ProjectedSplat;
use crate::special::moment0;
use crate::{Error, Result};

/// PSNR reported for identical images.
pub const PSNR_CAP: f64 = 99.0;

/// Largest splat count the inclusion–exclusion expansion is used for.
pub const CLOSED_FORM_MAX: usize = 8;

/// Isotropic screen-space Gaussian `o·exp(−|x − μ|² / 2σ²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsoSplat2 {
    pub mu: Vector2<f64>,
    pub sigma: f64,
    pub opacity: f64,
}

impl IsoSplat2 {
    pub fn new(mu: Vector2<f64>, sigma: f64, opacity: f64) -> Self {
        IsoSplat2 { mu, sigma, opacity }
    }

    pub fn alpha_at(&self, x: Vector2<f64>) -> f64 {
        self.opacity * (-(x - self.mu).norm_squared() / (2.0 * self.sigma * self.sigma)).exp()
    }

    /// As a white splat at `depth`.
    pub fn prepare(&self, depth: f64) -> Result<PreparedSplat> {
        let v = self.sigma * self.sigma;
        PreparedSplat::new(ProjectedSplat {
            mu2d: self.mu,
            cov2d: Sym2::new(v, 0.0, v),
            depth,
            opacity: self.opacity,
            color: [1.0; 3],
        })
    }
}

/// `∫_p Π(1 − αⱼ(x)) dx` over the unit pixel centered at `pixel_center`.
///
/// Up to [`CLOSED_FORM_MAX`] splats the product is expanded into signed
/// products of Gaussians, each again a Gaussian integrated exactly; larger
/// lists fall back to [`true_residual_transmittance_quadrature`].
pub fn true_residual_transmittance(splats: &[IsoSplat2], pixel_center: Vector2<f64>) -> f64 {
    if splats.len() > CLOSED_FORM_MAX {
        return true_residual_transmittance_quadrature(splats, pixel_center);
    }
    let lo = pixel_center - Vector2::new(0.5, 0.5);
    let hi = pixel_center + Vector2::new(0.5, 0.5);
    let mut total = 0.0;
    for subset in 0u32..(1 << splats.len()) {
        let members: Vec<&IsoSplat2> = (0..splats.len()).filter(|j| subset & (1 << j) != 0).map(|j| &splats[j]).collect();
        let sign = if members.len() % 2 == 0 { 1.0 } else { -1.0 };
        if members.is_empty() {
            total += 1.0;
            continue;
        }
        let w: Vec<f64> = members.iter().map(|s| 1.0 / (s.sigma * s.sigma)).collect();
        let precision: f64 = w.iter().sum();
        let mean = members.iter().zip(&w).map(|(s, wj)| s.mu * *wj).sum::<Vector2<f64>>() / precision;
        // Σ wⱼ|μⱼ|² − P|m|² written pairwise so it stays non-negative.
        let mut spread = 0.0;
        for i in 0..members.len() {
            for j in i + 1..members.len() {
                spread += w[i] * w[j] * (members[i].mu - members[j].mu).norm_squared();
            }
        }
        let scale = members.iter().map(|s| s.opacity).product::<f64>() * (-0.5 * spread / precision).exp();
        let sigma = precision.sqrt().recip();
        let ix = moment0(sigma, lo.x - mean.x, hi.x - mean.x);
        let iy = moment0(sigma, lo.y - mean.y, hi.y - mean.y);
        total += sign * scale * ix * iy;
    }
    total
}

/// Same integral by adaptive 2D quadrature to 1e-10.
pub fn true_residual_transmittance_quadrature(splats: &[IsoSplat2], pixel_center: Vector2<f64>) -> f64 {
    let f = |x: f64, y: f64| {
        let p = Vector2::new(x, y);
        splats.iter().map(|s| 1.0 - s.alpha_at(p)).product::<f64>()
    };
    integrate_2d(
        f,
        (pixel_center.x - 0.5, pixel_center.x + 0.5),
        (pixel_center.y - 0.5, pixel_center.y + 0.5),
        1e-10,
        1e-12,
    )
}

/// Residual transmittance a mode reports after blending `splats` (first in
/// front) over the pixel, without early termination.
pub fn mode_residual_transmittance(mode: BlendMode, splats: &[IsoSplat2], pixel_center: Vector2<f64>) -> Result<f64> {
    let prepared = splats.iter().enumerate().map(|(i, s)| s.prepare(i as f64 + 1.0)).collect::<Result<Vec<_>>>()?;
    let refs: Vec<&PreparedSplat> = prepared.iter().collect();
    let params = BlendParams { epsilon: 0.0, background: [0.0; 3] };
    Ok(blend_pixel(&refs, pixel_center, mode, &params).residual)
}

/// `ΔT = T_mode − T_true`. Negative values mean the mode over-occludes.
pub fn transmittance_error(mode: BlendMode, splats: &[IsoSplat2], pixel_center: Vector2<f64>) -> Result<f64> {
    Ok(mode_residual_transmittance(mode, splats, pixel_center)? - true_residual_transmittance(splats, pixel_center))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVar {
    MuX,
    Sigma,
}

impl SweepVar {
    pub fn name(self) -> &'static str {
        match self {
            SweepVar::MuX => "mu_x",
            SweepVar::Sigma => "sigma",
        }
    }
}

impl std::str::FromStr for SweepVar {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mu_x" | "mux" | "mu" => Ok(SweepVar::MuX),
            "sigma" => Ok(SweepVar::Sigma),
            _ => Err(Error::InvalidArgument(format!("unknown sweep variable {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SweepGrid {
    /// `start, start + step, …` up to and including `end`.
    Linear { start: f64, end: f64, step: f64 },
    /// `count` log-spaced points from `start` to `end` inclusive.
    Log { start: f64, end: f64, count: usize },
}

impl SweepGrid {
    pub fn values(&self) -> Result<Vec<f64>> {
        match *self {
            SweepGrid::Linear { start, end, step } => {
                if !(step > 0.0) || !(end >= start) {
                    return Err(Error::InvalidArgument(format!("empty linear grid [{start}, {end}] step {step}")));
                }
                let n = ((end - start) / step + 1e-9).floor() as usize;
                Ok((0..=n).map(|i| start + i as f64 * step).collect())
            }
            SweepGrid::Log { start, end, count } => {
                if count == 0 || !(start > 0.0) || !(end >= start) {
                    return Err(Error::InvalidArgument(format!("empty log grid [{start}, {end}] x{count}")));
                }
                if count == 1 {
                    return Ok(vec![start]);
                }
                let (a, b) = (start.ln(), end.ln());
                Ok((0..count).map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp()).collect())
            }
        }
    }
}

/// Two splats at `(μx, ∓y_offset)` over the unit pixel at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub modes: Vec<BlendMode>,
    pub var: SweepVar,
    pub grid: SweepGrid,
    pub mu_x: f64,
    pub sigma: f64,
    pub y_offset: f64,
    pub opacity: [f64; 2],
}

impl SweepConfig {
    pub fn default_modes() -> Vec<BlendMode> {
        vec![BlendMode::ScalarCenter, BlendMode::ScalarIntegrated, BlendMode::GaussianBlending, BlendMode::Supersample(256)]
    }

    /// μx ∈ [−3, 3] step 0.05 with σ = 1.
    pub fn mu_x_sweep() -> Self {
        SweepConfig {
            modes: Self::default_modes(),
            var: SweepVar::MuX,
            grid: SweepGrid::Linear { start: -3.0, end: 3.0, step: 0.05 },
            mu_x: 0.5,
            sigma: 1.0,
            y_offset: 0.1,
            opacity: [1.0, 1.0],
        }
    }

    /// σ log-spaced over [0.05, 5] with μx = 0.5.
    pub fn sigma_sweep() -> Self {
        SweepConfig {
            var: SweepVar::Sigma,
            grid: SweepGrid::Log { start: 0.05, end: 5.0, count: 101 },
            ..Self::mu_x_sweep()
        }
    }

    pub fn splats_at(&self, value: f64) -> [IsoSplat2; 2] {
        let (mu_x, sigma) = match self.var {
            SweepVar::MuX => (value, self.sigma),
            SweepVar::Sigma => (self.mu_x, value),
        };
        [
            IsoSplat2::new(Vector2::new(mu_x, -self.y_offset), sigma, self.opacity[0]),
            IsoSplat2::new(Vector2::new(mu_x, self.y_offset), sigma, self.opacity[1]),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub var: SweepVar,
    pub value: f64,
    pub mode: BlendMode,
    pub delta_t: f64,
}

/// One row per (grid point, mode), grid-major in mode-list order.
pub fn run_sweep(config: &SweepConfig) -> Result<Vec<SweepRow>> {
    if config.modes.is_empty() {
        return Err(Error::InvalidArgument("sweep needs at least one mode".into()));
    }
    let values = config.grid.values()?;
    let per_point: Vec<Result<Vec<SweepRow>>> = values
        .par_iter()
        .map(|&value| {
            let splats = config.splats_at(value);
            let truth = true_residual_transmittance(&splats, Vector2::zeros());
            config
                .modes
                .iter()
                .map(|&mode| {
                    let t = mode_residual_transmittance(mode, &splats, Vector2::zeros())?;
                    Ok(SweepRow { var: config.var, value, mode, delta_t: t - truth })
                })
                .collect()
        })
        .collect();
    let mut rows = Vec::with_capacity(values.len() * config.modes.len());
    for r in per_point {
        rows.extend(r?);
    }
    Ok(rows)
}

pub fn write_sweep_csv<W: Write>(mut out: W, rows: &[SweepRow]) -> std::io::Result<()> {
    writeln!(out, "sweep_var,value,mode,delta_t")?;
    for r in rows {
        writeln!(out, "{},{},{},{:e}", r.var.name(), r.value, r.mode.short_name(), r.delta_t)?;
    }
    Ok(())
}

/// Mean |ΔT| per mode, in first-appearance order.
pub fn mean_abs_error(rows: &[SweepRow]) -> Vec<(BlendMode, f64)> {
    let mut acc: Vec<(BlendMode, f64, usize)> = Vec::new();
    for r in rows {
        match acc.iter_mut().find(|(m, _, _)| *m == r.mode) {
            Some(e) => {
                e.1 += r.delta_t.abs();
                e.2 += 1;
            }
            None => acc.push((r.mode, r.delta_t.abs(), 1)),
        }
    }
    acc.into_iter().map(|(m, s, n)| (m, s / n as f64)).collect()
}

/// `10·log₁₀(1 / MSE)` over linear rgb clamped to [0, 1], capped at
/// [`PSNR_CAP`].
pub fn psnr(a: &Framebuffer, b: &Framebuffer) -> Result<f64> {
    if (a.width, a.height) != (b.width, b.height) {
        return Err(Error::DimensionMismatch { a: (a.width, a.height), b: (b.width, b.height) });
    }
    if a.rgb.is_empty() {
        return Ok(PSNR_CAP);
    }
    let sum: f64 = a
        .rgb
        .iter()
        .zip(&b.rgb)
        .flat_map(|(p, q)| (0..3).map(move |c| (p[c].clamp(0.0, 1.0) - q[c].clamp(0.0, 1.0)).powi(2)))
        .sum();
    let mse = sum / (3 * a.rgb.len()) as f64;
    if mse == 0.0 {
        return Ok(PSNR_CAP);
    }
    Ok((-10.0 * mse.log10()).min(PSNR_CAP))
}
