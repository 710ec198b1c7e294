//! Error function and the truncated moments of the unnormalised 1D Gaussian
//!
//! `I^k_σ(a, b) = ∫ₐᵇ xᵏ exp(−x²/2σ²) dx` for k ∈ {0, 1, 2}.
//!
//! Every blending kernel reduces to products of these integrals once the
//! integration domain is expressed in a splat's principal-axis frame. The
//! evaluation keeps full relative precision across the whole `±10σ` range:
//! tail intervals go through `erfc`, exponential differences through
//! `expm1`, and the second moment switches to a power series near the
//! origin where the closed form cancels.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::{Error, Result};

/// `√(π/2)`
const SQRT_HALF_PI: f64 = 1.253_314_137_315_500_3;

/// The error function, accurate to about one ulp.
#[inline]
pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

/// The complementary error function `1 − erf(x)`, accurate in the far tail.
#[inline]
pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Order of a truncated Gaussian moment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentOrder {
    Zeroth,
    First,
    Second,
}

impl TryFrom<u32> for MomentOrder {
    type Error = Error;

    fn try_from(k: u32) -> Result<Self> {
        match k {
            0 => Ok(MomentOrder::Zeroth),
            1 => Ok(MomentOrder::First),
            2 => Ok(MomentOrder::Second),
            _ => Err(Error::InvalidArgument(format!("moment order {k} not in {{0, 1, 2}}"))),
        }
    }
}

/// Checked `I^k_σ(a, b)`.
///
/// Rejects `σ ≤ 0`, `a > b` and non-finite arguments; those are caller bugs.
pub fn gaussian_moment(k: MomentOrder, sigma: f64, a: f64, b: f64) -> Result<f64> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidArgument(format!("sigma must be positive and finite, got {sigma}")));
    }
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidArgument(format!("bounds must be finite, got [{a}, {b}]")));
    }
    if a > b {
        return Err(Error::InvalidArgument(format!("lower bound {a} exceeds upper bound {b}")));
    }
    Ok(match k {
        MomentOrder::Zeroth => moment0(sigma, a, b),
        MomentOrder::First => moment1(sigma, a, b),
        MomentOrder::Second => moment2(sigma, a, b),
    })
}

/// `I⁰_σ(a, b) = √(π/2)·σ·[erf(b/√2σ) − erf(a/√2σ)]`.
///
/// Preconditions (unchecked): `σ > 0`, `a ≤ b`.
#[inline]
pub fn moment0(sigma: f64, a: f64, b: f64) -> f64 {
    debug_assert!(sigma > 0.0 && a <= b, "moment0({sigma}, {a}, {b})");
    let scale = FRAC_1_SQRT_2 / sigma;
    let (za, zb) = (a * scale, b * scale);
    let diff = if za >= 0.0 {
        erfc(za) - erfc(zb)
    } else if zb <= 0.0 {
        erfc(-zb) - erfc(-za)
    } else {
        erf(zb) - erf(za)
    };
    SQRT_HALF_PI * sigma * diff
}

/// `I¹_σ(a, b) = σ²·[exp(−a²/2σ²) − exp(−b²/2σ²)]`.
///
/// Preconditions (unchecked): `σ > 0`, `a ≤ b`.
#[inline]
pub fn moment1(sigma: f64, a: f64, b: f64) -> f64 {
    debug_assert!(sigma > 0.0 && a <= b, "moment1({sigma}, {a}, {b})");
    let inv = 0.5 / (sigma * sigma);
    // b² − a² without cancellation
    let d = (b - a) * (b + a) * inv;
    let s2 = sigma * sigma;
    if a.abs() <= b.abs() {
        -s2 * (-a * a * inv).exp() * (-d).exp_m1()
    } else {
        s2 * (-b * b * inv).exp() * d.exp_m1()
    }
}

/// `I²_σ(a, b) = σ²·[I⁰_σ(a, b) + a·exp(−a²/2σ²) − b·exp(−b²/2σ²)]`.
///
/// The interval is split at `±σ`: outside, all terms of the closed form are
/// non-negative; inside, the closed form cancels and a series is used.
///
/// Preconditions (unchecked): `σ > 0`, `a ≤ b`.
pub fn moment2(sigma: f64, a: f64, b: f64) -> f64 {
    debug_assert!(sigma > 0.0 && a <= b, "moment2({sigma}, {a}, {b})");
    let mut total = 0.0;
    if a < -sigma {
        // mirror onto the positive tail
        total += moment2_tail(sigma, -b.min(-sigma), -a);
    }
    let (lo, hi) = (a.max(-sigma), b.min(sigma));
    if lo < hi {
        total += moment2_core(sigma, hi) - moment2_core(sigma, lo);
    }
    if b > sigma {
        total += moment2_tail(sigma, a.max(sigma), b);
    }
    total
}

/// Closed form on `σ ≤ a ≤ b`.
fn moment2_tail(sigma: f64, a: f64, b: f64) -> f64 {
    let inv = 0.5 / (sigma * sigma);
    let ea = a * (-a * a * inv).exp();
    let eb = b * (-b * b * inv).exp();
    sigma * sigma * (moment0(sigma, a, b) + (ea - eb))
}

/// `∫₀ᶜ x² exp(−x²/2σ²) dx` for `|c| ≤ σ` by its alternating power series.
fn moment2_core(sigma: f64, c: f64) -> f64 {
    let tau = c / sigma;
    let tau2 = tau * tau;
    // term_n = (−1)ⁿ τ^{2n+3} / (2ⁿ n!), summed over (2n+3)
    let mut term = tau * tau2;
    let mut sum = term / 3.0;
    for n in 1..40 {
        term *= -tau2 / (2.0 * n as f64);
        let contrib = term / (2 * n + 3) as f64;
        sum += contrib;
        if contrib.abs() <= 1e-18 * sum.abs() {
            break;
        }
    }
    sigma * sigma * sigma * sum
}

/// Total mass of the unnormalised 1D Gaussian, `√(2π)·σ`.
#[inline]
pub fn full_mass(sigma: f64) -> f64 {
    (2.0 * PI).sqrt() * sigma
}
