//! Real spherical-harmonic color evaluation up to degree 3, using the basis
//! ordering and sign conventions of trained splat files.

use nalgebra::Vector3;

use crate::{Error, Result};

pub const SH_C0: f64 = 0.282_094_791_773_878_14;
const SH_C1: f64 = 0.488_602_511_902_919_9;
const SH_C2: [f64; 5] = [
    1.092_548_430_592_079_2,
    -1.092_548_430_592_079_2,
    0.315_391_565_252_520_05,
    -1.092_548_430_592_079_2,
    0.546_274_215_296_039_6,
];
const SH_C3: [f64; 7] = [
    -0.590_043_589_926_643_5,
    2.890_611_442_640_554,
    -0.457_045_799_464_465_8,
    0.373_176_332_590_115_4,
    -0.457_045_799_464_465_8,
    1.445_305_721_320_277,
    -0.590_043_589_926_643_5,
];

/// SH degree for a per-channel coefficient count.
pub fn sh_degree(coeffs: usize) -> Result<usize> {
    match coeffs {
        1 => Ok(0),
        4 => Ok(1),
        9 => Ok(2),
        16 => Ok(3),
        n => Err(Error::ShBands(n)),
    }
}

/// Evaluates band-major coefficients along unit direction `dir`.
///
/// Adds the 0.5 DC offset and clamps each channel at zero. The coefficient
/// count must be a complete band set; [`crate::scene::Splat3D::new`] enforces
/// that at ingest.
pub fn eval_sh(sh: &[[f64; 3]], dir: &Vector3<f64>) -> [f64; 3] {
    debug_assert!(sh_degree(sh.len()).is_ok());
    let (x, y, z) = (dir.x, dir.y, dir.z);
    let mut basis = [0.0; 16];
    basis[0] = SH_C0;
    if sh.len() > 1 {
        basis[1] = -SH_C1 * y;
        basis[2] = SH_C1 * z;
        basis[3] = -SH_C1 * x;
    }
    if sh.len() > 4 {
        let (xx, yy, zz) = (x * x, y * y, z * z);
        basis[4] = SH_C2[0] * x * y;
        basis[5] = SH_C2[1] * y * z;
        basis[6] = SH_C2[2] * (2.0 * zz - xx - yy);
        basis[7] = SH_C2[3] * x * z;
        basis[8] = SH_C2[4] * (xx - yy);
    }
    if sh.len() > 9 {
        let (xx, yy, zz) = (x * x, y * y, z * z);
        basis[9] = SH_C3[0] * y * (3.0 * xx - yy);
        basis[10] = SH_C3[1] * x * y * z;
        basis[11] = SH_C3[2] * y * (4.0 * zz - xx - yy);
        basis[12] = SH_C3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * yy);
        basis[13] = SH_C3[4] * x * (4.0 * zz - xx - yy);
        basis[14] = SH_C3[5] * z * (xx - yy);
        basis[15] = SH_C3[6] * x * (xx - 3.0 * yy);
    }
    let mut rgb = [0.5; 3];
    for (coeff, b) in sh.iter().zip(basis) {
        for c in 0..3 {
            rgb[c] += b * coeff[c];
        }
    }
    rgb.map(|v| v.max(0.0))
}
