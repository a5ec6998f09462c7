//! Jet color mapping of scalar fields.

use std::path::Path;

use triview_core::Field;

use crate::error::Result;
use crate::image_io::save_rgb_png;

/// Jet colormap: dark blue at 0, through cyan, yellow, to dark red at 1.
pub fn jet(t: f64) -> [u8; 3] {
    let t = t.clamp(0.0, 1.0);
    let ramp = |center: f64| ((1.5 - (4.0 * t - center).abs()).clamp(0.0, 1.0) * 255.0).round() as u8;
    [ramp(3.0), ramp(2.0), ramp(1.0)]
}

/// Min-max normalized Jet rendering as interleaved RGB bytes. A constant
/// field maps every pixel to the bottom of the colormap.
pub fn colorize(field: &Field) -> Vec<u8> {
    let (lo, hi) = field.min_max();
    let span = hi - lo;
    field
        .data()
        .iter()
        .flat_map(|&x| jet(if span > 0.0 { (x - lo) / span } else { 0.0 }))
        .collect()
}

pub fn save_colorized(field: &Field, path: &Path) -> Result<()> {
    let (w, h) = field.dims();
    save_rgb_png(w, h, colorize(field), path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jet_endpoints() {
        assert_eq!(jet(0.0), [0, 0, 128]);
        assert_eq!(jet(0.5), [128, 255, 128]);
        assert_eq!(jet(1.0), [128, 0, 0]);
    }
}
