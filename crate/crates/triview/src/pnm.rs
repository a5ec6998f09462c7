//! Binary PGM (`P5`) and PPM (`P6`) images, 8 or 16 bits per sample.

use std::path::Path;

use triview_core::{Image, Mask};

use crate::error::{self, Error, Result};

struct Header {
    channels: usize,
    width: usize,
    height: usize,
    maxval: u32,
    data_start: usize,
}

fn parse_header(bytes: &[u8], path: &Path) -> Result<Header> {
    let channels = match bytes.get(..2) {
        Some(b"P5") => 1,
        Some(b"P6") => 3,
        _ => return Err(Error::format(path, "not a binary PGM/PPM (expected P5 or P6)")),
    };
    let mut pos = 2;
    let mut fields = [0u32; 3];
    for field in &mut fields {
        // Whitespace and comments may separate header tokens.
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::format(path, "malformed PNM header"))?;
    }
    // Exactly one whitespace byte separates the header from the raster.
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(Error::format(path, "malformed PNM header"));
    }
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err(Error::format(path, "PNM image has zero size"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::format(path, format!("unsupported PNM maxval {maxval}")));
    }
    Ok(Header {
        channels,
        width: width as usize,
        height: height as usize,
        maxval,
        data_start: pos + 1,
    })
}

/// Reads raw samples normalized by the file's maxval.
fn read_samples(path: &Path) -> Result<(Header, Vec<f64>)> {
    let bytes = error::read(path)?;
    let header = parse_header(&bytes, path)?;
    let n = header.width * header.height * header.channels;
    let wide = header.maxval > 255;
    let raster = &bytes[header.data_start..];
    let need = if wide { 2 * n } else { n };
    if raster.len() < need {
        return Err(Error::format(path, "truncated PNM raster"));
    }
    let max = f64::from(header.maxval);
    let samples: Vec<f64> = if wide {
        raster[..need]
            .chunks_exact(2)
            .map(|b| f64::from(u16::from_be_bytes([b[0], b[1]])))
            .collect()
    } else {
        raster[..n].iter().map(|&b| f64::from(b)).collect()
    };
    if samples.iter().any(|&s| s > max) {
        return Err(Error::format(path, "PNM sample exceeds maxval"));
    }
    Ok((header, samples.into_iter().map(|s| s / max).collect()))
}

pub fn load_pnm(path: &Path) -> Result<Image> {
    let (h, data) = read_samples(path)?;
    Ok(Image::new(h.width, h.height, h.channels, data)?)
}

/// Quantizes to 8 bits with rounding.
fn to_u8(x: f64) -> u8 {
    (x.clamp(0.0, 1.0) * 255.0).round() as u8
}

pub fn save_pnm(img: &Image, path: &Path) -> Result<()> {
    let magic = match img.channels() {
        1 => "P5",
        3 => "P6",
        c => return Err(Error::format(path, format!("cannot store {c} channels as PNM"))),
    };
    let (w, h) = img.dims();
    let mut out = format!("{magic}\n{w} {h}\n255\n").into_bytes();
    out.extend(img.data().iter().map(|&x| to_u8(x)));
    error::write(path, &out)
}

/// Masks are stored as PGM: 255 where set, 0 elsewhere.
pub fn save_mask(mask: &Mask, path: &Path) -> Result<()> {
    let (w, h) = mask.dims();
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    out.extend(mask.data().iter().map(|&m| if m { 255u8 } else { 0 }));
    error::write(path, &out)
}

/// Reads a mask PGM; any sample above half range counts as set.
pub fn load_mask(path: &Path) -> Result<Mask> {
    let (h, data) = read_samples(path)?;
    if h.channels != 1 {
        return Err(Error::format(path, "mask must be a PGM"));
    }
    Ok(Mask::new(h.width, h.height, data.iter().map(|&x| x > 0.5).collect())?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_with_comments() {
        let bytes = b"P5\n# made by hand\n2 1\n# max\n255\n\x00\xff";
        let h = parse_header(bytes, Path::new("x")).unwrap();
        assert_eq!((h.width, h.height, h.maxval, h.channels), (2, 1, 255, 1));
        assert_eq!(&bytes[h.data_start..], b"\x00\xff");
    }

    #[test]
    fn rejects_bad_headers() {
        for bad in [&b"P3\n1 1\n255\n0"[..], b"P5\n1 1\n0\n\x00", b"P5\n1 1\n70000\n\x00", b"P5\n0 1\n255\n"] {
            assert!(parse_header(bad, Path::new("x")).is_err());
        }
    }
}
