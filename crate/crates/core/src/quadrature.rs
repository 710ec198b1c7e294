//! Globally adaptive Gauss–Kronrod (G7/K15) quadrature in one and two
//! dimensions.
//!
//! This is deliberately independent of the closed-form moment code in
//! [`crate::special`]: it only ever evaluates the integrand pointwise, so it
//! serves as the reference the closed forms are checked against, and as the
//! general-case path for true pixel transmittance.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the odd Kronrod nodes (1, 3, 5) and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

const MAX_INTERVALS: usize = 4096;
const INITIAL_PIECES: usize = 16;

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Segment {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(centre - dx) + f(centre + dx);
        kron += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Segment { a, b, value: kron * half, error: ((kron - gauss) * half).abs() }
}

/// `∫ₐᵇ f(x) dx` to within `max(abs_tol, rel_tol·|result|)`.
///
/// Bisects the interval with the largest error estimate until the summed
/// estimate meets the tolerance or the interval budget runs out.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, rel_tol: f64, abs_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    if a > b {
        return -integrate(f, b, a, rel_tol, abs_tol);
    }
    let mut heap = BinaryHeap::with_capacity(MAX_INTERVALS);
    let step = (b - a) / INITIAL_PIECES as f64;
    for i in 0..INITIAL_PIECES {
        let hi = if i + 1 == INITIAL_PIECES { b } else { a + (i + 1) as f64 * step };
        heap.push(kronrod(&mut f, a + i as f64 * step, hi));
    }
    let mut total: f64 = heap.iter().map(|s| s.value).sum();
    let mut error: f64 = heap.iter().map(|s| s.error).sum();
    while error > abs_tol.max(rel_tol * total.abs()) && heap.len() < MAX_INTERVALS {
        let worst = heap.pop().expect("heap never empties");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            heap.push(worst);
            break;
        }
        let left = kronrod(&mut f, worst.a, mid);
        let right = kronrod(&mut f, mid, worst.b);
        total += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }
    // re-sum to shed accumulated rounding from the running updates
    heap.iter().map(|s| s.value).sum()
}

/// `∫∫ f(x, y) dy dx` over the rectangle `[x0, x1] × [y0, y1]` by nesting
/// [`integrate`].
pub fn integrate_2d<F: Fn(f64, f64) -> f64>(
    f: F,
    x: (f64, f64),
    y: (f64, f64),
    rel_tol: f64,
    abs_tol: f64,
) -> f64 {
    integrate(
        |xv| integrate(|yv| f(xv, yv), y.0, y.1, rel_tol * 0.1, abs_tol * 0.1),
        x.0,
        x.1,
        rel_tol,
        abs_tol,
    )
}
