//! 8-bit sRGB image output.

use std::io::BufWriter;
use std::path::Path;

use crate::raster::Framebuffer;
use crate::{Error, Result};

/// Linear → sRGB transfer, input clamped to [0, 1].
pub fn linear_to_srgb(v: f64) -> f64 {
    let v = v.clamp(0.0, 1.0);
    if v <= 0.003_130_8 {
        12.92 * v
    } else {
        1.055 * v.powf(1.0 / 2.4) - 0.055
    }
}

fn to_u8(v: f64) -> u8 {
    (linear_to_srgb(v) * 255.0).round() as u8
}

/// Interleaved 8-bit sRGB bytes, row-major.
pub fn srgb_bytes(fb: &Framebuffer) -> Vec<u8> {
    fb.rgb.iter().flat_map(|p| p.map(to_u8)).collect()
}

/// Binary PPM (P6) bytes.
pub fn ppm_bytes(fb: &Framebuffer) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", fb.width, fb.height).into_bytes();
    out.extend(srgb_bytes(fb));
    out
}

pub fn write_ppm(path: impl AsRef<Path>, fb: &Framebuffer) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, ppm_bytes(fb)).map_err(|e| Error::io(path, e))
}

pub fn write_png(path: impl AsRef<Path>, fb: &Framebuffer) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut enc = png::Encoder::new(BufWriter::new(file), fb.width as u32, fb.height as u32);
    enc.set_color(png::ColorType::Rgb);
    enc.set_depth(png::BitDepth::Eight);
    enc.set_source_srgb(png::SrgbRenderingIntent::Perceptual);
    let to_io = |e: png::EncodingError| Error::io(path, std::io::Error::other(e));
    let mut writer = enc.write_header().map_err(to_io)?;
    writer.write_image_data(&srgb_bytes(fb)).map_err(to_io)?;
    writer.finish().map_err(to_io)
}

/// Per-pixel absolute difference `|a − b|` averaged over channels, scaled
/// by `gain` and mapped to a black → red → yellow ramp.
pub fn difference_heat(a: &Framebuffer, b: &Framebuffer, gain: f64) -> Result<Framebuffer> {
    if (a.width, a.height) != (b.width, b.height) {
        return Err(Error::DimensionMismatch { a: (a.width, a.height), b: (b.width, b.height) });
    }
    let mut out = Framebuffer::new(a.width, a.height, [0.0; 3]);
    for (i, (pa, pb)) in a.rgb.iter().zip(&b.rgb).enumerate() {
        let d = (0..3).map(|c| (pa[c] - pb[c]).abs()).sum::<f64>() / 3.0;
        let h = (d * gain).clamp(0.0, 1.0);
        out.rgb[i] = [(2.0 * h).min(1.0), (2.0 * h - 1.0).max(0.0), 0.0];
    }
    Ok(out)
}
