//! Single-channel PFM ("Pf") float maps, rows stored bottom to top.
//!
//! A negative scale marks little-endian data, a positive one big-endian.
//! Values are stored as `f32`.

use std::path::Path;

use triview_core::Field;

use crate::error::{self, Error, Result};

pub fn encode_pfm(field: &Field) -> Vec<u8> {
    let (w, h) = field.dims();
    let mut out = format!("Pf\n{w} {h}\n-1.0\n").into_bytes();
    out.reserve(4 * w * h);
    for v in (0..h).rev() {
        for u in 0..w {
            out.extend_from_slice(&(field.get(u, v) as f32).to_le_bytes());
        }
    }
    out
}

pub fn save_pfm(field: &Field, path: &Path) -> Result<()> {
    error::write(path, &encode_pfm(field))
}

/// Splits off the next whitespace-delimited header token.
fn token<'a>(bytes: &'a [u8], pos: &mut usize) -> Option<&'a str> {
    while bytes.get(*pos).is_some_and(u8::is_ascii_whitespace) {
        *pos += 1;
    }
    let start = *pos;
    while bytes.get(*pos).is_some_and(|b| !b.is_ascii_whitespace()) {
        *pos += 1;
    }
    std::str::from_utf8(&bytes[start..*pos]).ok().filter(|s| !s.is_empty())
}

pub fn decode_pfm(bytes: &[u8], path: &Path) -> Result<Field> {
    let bad = |msg: &str| Error::format(path, msg);
    let mut pos = 0;
    match token(bytes, &mut pos) {
        Some("Pf") => {}
        Some("PF") => return Err(bad("3-channel PFM (PF) cannot hold a single field")),
        _ => return Err(bad("not a PFM file")),
    }
    let mut number = |what: &str| -> Result<&str> {
        token(bytes, &mut pos).ok_or_else(|| Error::format(path, format!("missing PFM {what}")))
    };
    let width: usize = number("width")?.parse().map_err(|_| bad("malformed PFM width"))?;
    let height: usize = number("height")?.parse().map_err(|_| bad("malformed PFM height"))?;
    let scale: f64 = number("scale")?.parse().map_err(|_| bad("malformed PFM scale"))?;
    if width == 0 || height == 0 {
        return Err(bad("PFM has zero size"));
    }
    if scale == 0.0 || !scale.is_finite() {
        return Err(bad("PFM scale must be finite and non-zero"));
    }
    // One whitespace byte ends the header.
    let raster = bytes.get(pos + 1..).ok_or_else(|| bad("truncated PFM"))?;
    let n = width * height;
    if raster.len() < 4 * n {
        return Err(bad("truncated PFM raster"));
    }
    let little = scale < 0.0;
    let mut data = vec![0.0; n];
    for (i, b) in raster[..4 * n].chunks_exact(4).enumerate() {
        let b = [b[0], b[1], b[2], b[3]];
        let x = if little { f32::from_le_bytes(b) } else { f32::from_be_bytes(b) };
        if !x.is_finite() {
            return Err(bad("PFM contains a non-finite value"));
        }
        let (u, row_from_bottom) = (i % width, i / width);
        data[(height - 1 - row_from_bottom) * width + u] = f64::from(x);
    }
    Ok(Field::new(width, height, data)?)
}

pub fn load_pfm(path: &Path) -> Result<Field> {
    decode_pfm(&error::read(path)?, path)
}
