//! Binary little-endian PLY in the layout written by splat trainers.
//!
//! Vertex properties: `x y z`, `nx ny nz` (ignored), `f_dc_0..2`,
//! `f_rest_*` (channel-major, 0/9/24/45 entries), `opacity` (logit),
//! `scale_0..2` (log), `rot_0..3` (w, x, y, z; unnormalised).

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use nalgebra::{Quaternion, UnitQuaternion, Vector3};

use super::Splat3D;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(name: &str) -> Option<Scalar> {
        Some(match name {
            "char" | "int8" => Scalar::I8,
            "uchar" | "uint8" => Scalar::U8,
            "short" | "int16" => Scalar::I16,
            "ushort" | "uint16" => Scalar::U16,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Scalar::I8 | Scalar::U8 => 1,
            Scalar::I16 | Scalar::U16 => 2,
            Scalar::I32 | Scalar::U32 | Scalar::F32 => 4,
            Scalar::F64 => 8,
        }
    }

    fn read(self, b: &[u8]) -> f64 {
        match self {
            Scalar::I8 => b[0] as i8 as f64,
            Scalar::U8 => b[0] as f64,
            Scalar::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::I32 => i32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Scalar::U32 => u32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Scalar::F32 => f32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Scalar::F64 => f64::from_le_bytes(b[..8].try_into().unwrap()),
        }
    }
}

struct Element {
    name: String,
    count: usize,
    props: Vec<(String, Scalar)>,
}

impl Element {
    fn stride(&self) -> usize {
        self.props.iter().map(|(_, s)| s.size()).sum()
    }
}

fn err(offset: usize, message: impl Into<String>) -> Error {
    Error::Ply { offset: offset as u64, message: message.into() }
}

/// Parses the header, returning its elements and the payload start offset.
fn parse_header(bytes: &[u8]) -> Result<(Vec<Element>, usize)> {
    let mut pos = 0;
    let next_line = |pos: &mut usize| -> Result<(usize, String)> {
        let start = *pos;
        let end = bytes[start..]
            .iter()
            .position(|&b| b == b'\n')
            .map(|i| start + i)
            .ok_or_else(|| err(start, "unterminated header"))?;
        *pos = end + 1;
        let line = std::str::from_utf8(&bytes[start..end]).map_err(|_| err(start, "header is not UTF-8"))?;
        Ok((start, line.trim_end_matches('\r').to_string()))
    };

    let (at, magic) = next_line(&mut pos)?;
    if magic != "ply" {
        return Err(err(at, "missing 'ply' magic"));
    }
    let mut elements: Vec<Element> = Vec::new();
    let mut format_seen = false;
    loop {
        let (at, line) = next_line(&mut pos)?;
        let words: Vec<&str> = line.split_whitespace().collect();
        match words.as_slice() {
            ["format", "binary_little_endian", _] => format_seen = true,
            ["format", other, ..] => return Err(err(at, format!("unsupported encoding '{other}'; expected binary_little_endian"))),
            ["comment", ..] | ["obj_info", ..] | [] => {}
            ["element", name, count] => {
                let count = count.parse().map_err(|_| err(at, format!("bad element count '{count}'")))?;
                elements.push(Element { name: name.to_string(), count, props: Vec::new() });
            }
            ["property", "list", ..] => return Err(err(at, "list properties are not supported")),
            ["property", ty, name] => {
                let scalar = Scalar::parse(ty).ok_or_else(|| err(at, format!("unknown property type '{ty}'")))?;
                let elem = elements.last_mut().ok_or_else(|| err(at, "property before any element"))?;
                elem.props.push((name.to_string(), scalar));
            }
            ["end_header"] => break,
            _ => return Err(err(at, format!("unrecognised header line '{line}'"))),
        }
    }
    if !format_seen {
        return Err(err(0, "missing format line"));
    }
    Ok((elements, pos))
}

/// Parses splats from an in-memory PLY file, applying activations.
pub fn read_ply_bytes(bytes: &[u8]) -> Result<Vec<Splat3D>> {
    let (elements, mut offset) = parse_header(bytes)?;
    let mut vertex = None;
    for elem in &elements {
        if elem.name == "vertex" {
            vertex = Some(elem);
            break;
        }
        // skip elements stored ahead of the vertices
        offset += elem.count * elem.stride();
    }
    let vertex = vertex.ok_or_else(|| err(offset, "no 'vertex' element"))?;

    let mut index: HashMap<&str, (usize, Scalar)> = HashMap::new();
    let mut cursor = 0;
    for (name, ty) in &vertex.props {
        index.insert(name.as_str(), (cursor, *ty));
        cursor += ty.size();
    }
    let stride = cursor;

    let lookup = |name: &str| -> Result<(usize, Scalar)> {
        index.get(name).copied().ok_or_else(|| err(0, format!("missing required vertex property '{name}'")))
    };
    let pos = ["x", "y", "z"].map(lookup);
    let dc = ["f_dc_0", "f_dc_1", "f_dc_2"].map(lookup);
    let opacity = lookup("opacity")?;
    let scale = ["scale_0", "scale_1", "scale_2"].map(lookup);
    let rot = ["rot_0", "rot_1", "rot_2", "rot_3"].map(lookup);
    let [pos, dc, scale] = [pos, dc, scale].map(|a| a.into_iter().collect::<Result<Vec<_>>>());
    let (pos, dc, scale) = (pos?, dc?, scale?);
    let rot = rot.into_iter().collect::<Result<Vec<_>>>()?;

    let rest_count = vertex.props.iter().filter(|(n, _)| n.starts_with("f_rest_")).count();
    let rest: Vec<(usize, Scalar)> = (0..rest_count)
        .map(|i| index.get(format!("f_rest_{i}").as_str()).copied())
        .collect::<Option<_>>()
        .ok_or_else(|| err(0, "f_rest_* properties are not numbered contiguously from 0"))?;
    if rest_count % 3 != 0 {
        return Err(err(0, format!("{rest_count} f_rest properties is not a multiple of 3")));
    }
    let per_channel = rest_count / 3;
    super::sh_degree(per_channel + 1).map_err(|_| err(0, format!("unsupported f_rest count {rest_count}")))?;

    let needed = vertex.count.checked_mul(stride).and_then(|n| n.checked_add(offset));
    match needed {
        Some(end) if end <= bytes.len() => {}
        _ => {
            let complete = bytes.len().saturating_sub(offset) / stride.max(1);
            return Err(err(
                offset + complete * stride,
                format!("truncated payload: vertex {complete} of {} is incomplete", vertex.count),
            ));
        }
    }

    let mut splats = Vec::with_capacity(vertex.count);
    for v in 0..vertex.count {
        let base = offset + v * stride;
        let rec = &bytes[base..base + stride];
        let get = |(at, ty): (usize, Scalar)| ty.read(&rec[at..]);

        let mu = Vector3::new(get(pos[0]), get(pos[1]), get(pos[2]));
        let scale = Vector3::new(get(scale[0]).exp(), get(scale[1]).exp(), get(scale[2]).exp());
        let q = Quaternion::new(get(rot[0]), get(rot[1]), get(rot[2]), get(rot[3]));
        if !(q.norm() > 0.0) || !q.norm().is_finite() {
            return Err(err(base, format!("vertex {v} has a zero or non-finite rotation")));
        }
        let opacity = logistic(get(opacity));

        let mut sh = Vec::with_capacity(per_channel + 1);
        sh.push([get(dc[0]), get(dc[1]), get(dc[2])]);
        for j in 0..per_channel {
            sh.push([0, 1, 2].map(|c| get(rest[c * per_channel + j])));
        }
        let splat = Splat3D::new(mu, scale, UnitQuaternion::from_quaternion(q), opacity, sh)
            .map_err(|e| err(base, format!("vertex {v}: {e}")))?;
        splats.push(splat);
    }
    Ok(splats)
}

pub fn read_ply(path: impl AsRef<Path>) -> Result<Vec<Splat3D>> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    read_ply_bytes(&bytes)
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Serialises splats with inverse activations. All splats must carry the
/// same SH degree.
pub fn write_ply_bytes(splats: &[Splat3D]) -> Result<Vec<u8>> {
    let coeffs = splats.first().map_or(1, |s| s.sh.len());
    if let Some(bad) = splats.iter().find(|s| s.sh.len() != coeffs) {
        return Err(Error::InvalidArgument(format!(
            "mixed SH degrees: {} and {} coefficients",
            coeffs,
            bad.sh.len()
        )));
    }
    let rest = 3 * (coeffs - 1);

    let mut out = Vec::new();
    let mut header = String::from("ply\nformat binary_little_endian 1.0\n");
    header += &format!("element vertex {}\n", splats.len());
    for name in ["x", "y", "z", "nx", "ny", "nz", "f_dc_0", "f_dc_1", "f_dc_2"] {
        header += &format!("property float {name}\n");
    }
    for i in 0..rest {
        header += &format!("property float f_rest_{i}\n");
    }
    for name in ["opacity", "scale_0", "scale_1", "scale_2", "rot_0", "rot_1", "rot_2", "rot_3"] {
        header += &format!("property float {name}\n");
    }
    header += "end_header\n";
    out.extend_from_slice(header.as_bytes());

    for s in splats {
        let q = s.rot.quaternion();
        let mut rec: Vec<f64> = vec![s.mu.x, s.mu.y, s.mu.z, 0.0, 0.0, 0.0];
        rec.extend_from_slice(&s.sh[0]);
        for c in 0..3 {
            rec.extend(s.sh[1..].iter().map(|coef| coef[c]));
        }
        rec.push(logit(s.opacity));
        rec.extend(s.scale.iter().map(|v| v.ln()));
        rec.extend([q.w, q.i, q.j, q.k]);
        for v in rec {
            out.write_all(&(v as f32).to_le_bytes()).expect("Vec write");
        }
    }
    Ok(out)
}

pub fn write_ply(path: impl AsRef<Path>, splats: &[Splat3D]) -> Result<()> {
    let path = path.as_ref();
    let bytes = write_ply_bytes(splats)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
