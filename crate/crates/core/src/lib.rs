//! CPU reference renderer for Gaussian splats with four per-pixel blending
//! kernels: scalar center sampling, scalar pixel-integrated alpha, spatial
//! Gaussian Blending (transmittance tracked as a moment-matched uniform
//! window), and a supersampled oracle.
//!
//! The crate is organised bottom-up:
//!
//! * [`special`], [`eigen`], [`quadrature`]: closed-form Gaussian moments,
//!   the 2×2 symmetric eigen-solver and an adaptive Gauss–Kronrod integrator
//!   used as an independent oracle.
//! * [`scene`]: splats, cameras, projection, SH color and PLY ingestion.
//! * [`blend`]: per-pixel kernels and the transmittance window state machine.
//! * [`raster`]: tile binning and parallel full-frame rendering.
//! * [`lab`]: two-splat transmittance-error sweeps and image metrics.
//! * [`synth`]: deterministic synthetic fixtures.

pub mod blend;
pub mod eigen;
pub mod error;
pub mod image_io;
pub mod lab;
pub mod quadrature;
pub mod raster;
pub mod scene;
pub mod special;
pub mod synth;

pub use error::{Error, Result};
