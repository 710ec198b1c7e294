//! Transmittance window state machine.
//!
//! A pixel's remaining transmittance is modelled as a uniform box: a center,
//! two side lengths and a constant value. Each splat is integrated over the
//! box in the splat's principal-axis frame; the box is then refitted so the
//! mass, mean and per-axis variance of `t·(1 − α)` are preserved.

use nalgebra::Vector2;

use super::PreparedSplat;
use crate::special::{moment0, moment1, moment2};

/// Window sides below this length (pixels) are clamped.
pub const MIN_SIDE: f64 = 1e-6;

/// The moment update is only trusted while every side lies in
/// `[GUARD_LOW·σ, GUARD_HIGH·σ]` of the paired splat axis.
pub const GUARD_LOW: f64 = 0.1;
pub const GUARD_HIGH: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransmittanceWindow {
    pub center: Vector2<f64>,
    /// `sides[0]` pairs with the splat axis nearest screen x, `sides[1]`
    /// with the one nearest screen y.
    pub sides: Vector2<f64>,
    pub value: f64,
}

impl TransmittanceWindow {
    /// The fully transparent unit window of the pixel centered at
    /// `pixel_center`.
    pub fn new(pixel_center: Vector2<f64>) -> Self {
        TransmittanceWindow { center: pixel_center, sides: Vector2::new(1.0, 1.0), value: 1.0 }
    }

    /// Integrated transmittance `value·sides₁·sides₂`.
    pub fn mass(&self) -> f64 {
        self.value * self.sides.x * self.sides.y
    }

    pub fn area(&self) -> f64 {
        self.sides.x * self.sides.y
    }
}

/// Alias matching the operation name used in the docs.
pub fn init_window(pixel_center: Vector2<f64>) -> TransmittanceWindow {
    TransmittanceWindow::new(pixel_center)
}

/// The window expressed in a splat's principal-axis frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplatFrame {
    pub u: f64,
    pub v: f64,
    pub u1: f64,
    pub u2: f64,
    pub v1: f64,
    pub v2: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    /// Screen-space unit vectors of the frame's first and second axes.
    pub axis1: Vector2<f64>,
    pub axis2: Vector2<f64>,
}

impl SplatFrame {
    pub fn sides(&self) -> Vector2<f64> {
        Vector2::new(self.u2 - self.u1, self.v2 - self.v1)
    }

    /// Whether the window is neither too small nor too large for the splat.
    pub fn within_guard(&self) -> bool {
        let ok = |l: f64, s: f64| l >= GUARD_LOW * s && l <= GUARD_HIGH * s;
        ok(self.u2 - self.u1, self.sigma1) && ok(self.v2 - self.v1, self.sigma2)
    }
}

/// Mass, first and per-axis second moments of `t·(1 − α)` over the window,
/// in splat-frame coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianMoments {
    pub m0: f64,
    pub m1: Vector2<f64>,
    pub m2: Vector2<f64>,
}

impl GaussianMoments {
    pub fn mean(&self) -> Vector2<f64> {
        self.m1 / self.m0
    }

    /// Per-axis variance before clamping.
    pub fn variance(&self) -> Vector2<f64> {
        let mean = self.mean();
        self.m2 / self.m0 - mean.component_mul(&mean)
    }
}

/// Re-expresses the window around the splat mean along its eigen axes.
///
/// The box is kept axis-aligned in the splat frame. Eigen axes are paired
/// with the window sides so the implied rotation is at most 45°: the axis
/// with the larger screen-x component takes `sides[0]`.
pub fn to_splat_frame(win: &TransmittanceWindow, splat: &PreparedSplat) -> SplatFrame {
    let eig = &splat.eig;
    let (axis1, sigma1, axis2, sigma2) = if eig.e1.x.abs() >= eig.e2.x.abs() {
        (eig.e1, eig.lambda1.sqrt(), eig.e2, eig.lambda2.sqrt())
    } else {
        (eig.e2, eig.lambda2.sqrt(), eig.e1, eig.lambda1.sqrt())
    };
    let d = win.center - splat.splat.mu2d;
    let (u, v) = (d.dot(&axis1), d.dot(&axis2));
    let (hu, hv) = (0.5 * win.sides.x, 0.5 * win.sides.y);
    SplatFrame { u, v, u1: u - hu, u2: u + hu, v1: v - hv, v2: v + hv, sigma1, sigma2, axis1, axis2 }
}

/// `t·o·I⁰_{σ₁}(u₁, u₂)·I⁰_{σ₂}(v₁, v₂)`
pub fn integrated_weight(frame: &SplatFrame, t: f64, o: f64) -> f64 {
    t * o * moment0(frame.sigma1, frame.u1, frame.u2) * moment0(frame.sigma2, frame.v1, frame.v2)
}

pub fn compute_moments(frame: &SplatFrame, t: f64, o: f64) -> GaussianMoments {
    let (s1, s2) = (frame.sigma1, frame.sigma2);
    let (i0u, i0v) = (moment0(s1, frame.u1, frame.u2), moment0(s2, frame.v1, frame.v2));
    let (i1u, i1v) = (moment1(s1, frame.u1, frame.u2), moment1(s2, frame.v1, frame.v2));
    let (i2u, i2v) = (moment2(s1, frame.u1, frame.u2), moment2(s2, frame.v1, frame.v2));
    let sides = frame.sides();
    let box_mass = t * sides.x * sides.y;
    let to = t * o;
    let m0 = box_mass - to * i0u * i0v;
    let m1 = Vector2::new(box_mass * frame.u - to * i1u * i0v, box_mass * frame.v - to * i0u * i1v);
    let m2 = Vector2::new(
        box_mass * (frame.u * frame.u + sides.x * sides.x / 12.0) - to * i2u * i0v,
        box_mass * (frame.v * frame.v + sides.y * sides.y / 12.0) - to * i0u * i2v,
    );
    GaussianMoments { m0, m1, m2 }
}

/// Blends one splat into the window.
///
/// Returns the splat's integrated weight and the refitted window. Outside
/// the stability guard the geometry is frozen and the splat is blended as a
/// scalar alpha sampled at the window center.
pub fn update_window(win: &TransmittanceWindow, splat: &PreparedSplat) -> (f64, TransmittanceWindow) {
    let o = splat.splat.opacity;
    let frame = to_splat_frame(win, splat);

    if !frame.within_guard() {
        let alpha = splat.alpha_at(win.center);
        let weight = win.value * alpha * win.area();
        let next = TransmittanceWindow { value: win.value * (1.0 - alpha), ..*win };
        return (weight, next);
    }

    let weight = integrated_weight(&frame, win.value, o);
    let m = compute_moments(&frame, win.value, o);
    if !(m.m0 > 0.0) {
        return (weight, TransmittanceWindow { value: 0.0, ..*win });
    }

    let mean = m.mean();
    let var = m.variance().map(|v| v.max(0.0));
    let mut sides = var.map(|v| (12.0 * v).sqrt().max(MIN_SIDE));
    let mut value = m.m0 / (sides.x * sides.y);
    if value > 1.0 {
        // keep the mass, spread it so the box density stays a transmittance
        sides *= value.sqrt();
        value = m.m0 / (sides.x * sides.y);
    }
    let center = splat.splat.mu2d + frame.axis1 * mean.x + frame.axis2 * mean.y;
    (weight, TransmittanceWindow { center, sides, value: value.min(1.0) })
}
