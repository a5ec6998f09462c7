//! Format-dispatching image loading and PNG output.

use std::path::Path;

use image::{DynamicImage, ImageReader};
use triview_core::Image;

use crate::error::{Error, Result};
use crate::pnm;

fn extension(path: &Path) -> String {
    path.extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .unwrap_or_default()
}

/// Loads a PGM/PPM or PNG file as a normalized image. Gray and gray-alpha
/// PNGs become one channel, everything else RGB; alpha is dropped.
pub fn load_image(path: &Path) -> Result<Image> {
    match extension(path).as_str() {
        "pgm" | "ppm" | "pnm" => pnm::load_pnm(path),
        "png" => load_png(path),
        other => Err(Error::format(path, format!("unsupported image extension `{other}`"))),
    }
}

fn load_png(path: &Path) -> Result<Image> {
    let decoded = ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .decode()
        .map_err(|e| Error::format(path, e.to_string()))?;
    let (w, h) = (decoded.width() as usize, decoded.height() as usize);
    let gray = matches!(
        decoded,
        DynamicImage::ImageLuma8(_) | DynamicImage::ImageLumaA8(_) | DynamicImage::ImageLuma16(_) | DynamicImage::ImageLumaA16(_)
    );
    let image = if gray {
        let buf = decoded.into_luma16();
        Image::new(w, h, 1, buf.into_raw().iter().map(|&x| f64::from(x) / 65535.0).collect())?
    } else {
        let buf = decoded.into_rgb16();
        Image::new(w, h, 3, buf.into_raw().iter().map(|&x| f64::from(x) / 65535.0).collect())?
    };
    Ok(image)
}

/// Writes an 8-bit RGB PNG from interleaved bytes.
pub fn save_rgb_png(width: usize, height: usize, rgb: Vec<u8>, path: &Path) -> Result<()> {
    let buf = image::RgbImage::from_raw(width as u32, height as u32, rgb)
        .ok_or_else(|| Error::format(path, "RGB buffer does not match the image size"))?;
    buf.save(path).map_err(|e| match e {
        image::ImageError::IoError(io) => Error::io(path, io),
        other => Error::format(path, other.to_string()),
    })
}
