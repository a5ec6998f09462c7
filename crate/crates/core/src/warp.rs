//! Backward warping of the side views onto the center view.
//!
//! A scene point seen at column `u` of the center view appears at `u + d` in
//! the left view and at `u - d` in the right view, where `d` is the shared
//! center-view disparity. Samples falling outside the source image are marked
//! invalid rather than clamped.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_dims, Result};
use crate::frame::MultiscopicFrame;
use crate::grid::{DisparityField, Image, Mask, MAX_CHANNELS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    /// Sign of the horizontal offset applied to the center column.
    #[inline]
    pub fn direction(self) -> f64 {
        match self {
            Side::Left => 1.0,
            Side::Right => -1.0,
        }
    }
}

/// Bilinear sample together with its horizontal derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub valid: bool,
    pub value: [f64; MAX_CHANNELS],
    pub dvalue_dx: [f64; MAX_CHANNELS],
}

impl Sample {
    const INVALID: Sample = Sample {
        valid: false,
        value: [0.0; MAX_CHANNELS],
        dvalue_dx: [0.0; MAX_CHANNELS],
    };
}

/// Splits a coordinate into a cell index and the offset inside that cell.
/// The last node belongs to the cell on its left so that `x = len - 1` is
/// still interpolated (with offset 1).
#[inline]
fn cell(x: f64, len: usize) -> (usize, f64) {
    if len == 1 {
        return (0, 0.0);
    }
    // x >= 0 here, so truncation is floor.
    let i = (x as usize).min(len - 2);
    (i, x - i as f64)
}

/// Bilinear interpolation of `img` at `(x, y)`. Valid iff
/// `0 <= x <= width - 1` and `0 <= y <= height - 1`.
pub fn sample_bilinear(img: &Image, x: f64, y: f64) -> Sample {
    let (w, h) = img.dims();
    if !(x >= 0.0 && x <= (w - 1) as f64 && y >= 0.0 && y <= (h - 1) as f64) {
        return Sample::INVALID;
    }
    let (x0, fx) = cell(x, w);
    let (y0, fy) = cell(y, h);
    let x1 = (x0 + 1).min(w - 1);
    let y1 = (y0 + 1).min(h - 1);
    let mut out = Sample {
        valid: true,
        ..Sample::INVALID
    };
    for c in 0..img.channels() {
        let i00 = img.get(x0, y0, c);
        let i10 = img.get(x1, y0, c);
        let i01 = img.get(x0, y1, c);
        let i11 = img.get(x1, y1, c);
        // Convex-combination form keeps node values exact at fx, fy in {0, 1}.
        let top = (1.0 - fx) * i00 + fx * i10;
        let bottom = (1.0 - fx) * i01 + fx * i11;
        out.value[c] = (1.0 - fy) * top + fy * bottom;
        out.dvalue_dx[c] = (1.0 - fy) * (i10 - i00) + fy * (i11 - i01);
    }
    out
}

/// Reconstruction of the center view from one side view.
#[derive(Debug, Clone, PartialEq)]
pub struct WarpResult {
    /// Reconstructed image; invalid pixels hold 0.
    pub image: Image,
    pub valid: Mask,
    /// Derivative of each reconstructed channel value with respect to the
    /// disparity at that pixel, laid out like the image data. Zero where
    /// invalid.
    pub ddisp: Vec<f64>,
}

/// Samples `src` at `(u + d, v)` for the left view or `(u - d, v)` for the
/// right view.
pub fn warp_to_center(src: &Image, disp: &DisparityField, side: Side) -> Result<WarpResult> {
    check_dims("warp_to_center", src.dims(), disp.dims())?;
    let (w, h) = src.dims();
    let c = src.channels();
    let dir = side.direction();
    let mut data = vec![0.0; w * h * c];
    let mut ddisp = vec![0.0; w * h * c];
    let mut valid = Vec::with_capacity(w * h);
    for v in 0..h {
        for u in 0..w {
            let x = u as f64 + dir * disp.get(u, v);
            let s = sample_bilinear(src, x, v as f64);
            valid.push(s.valid);
            if s.valid {
                let base = (v * w + u) * c;
                for ch in 0..c {
                    data[base + ch] = s.value[ch];
                    ddisp[base + ch] = dir * s.dvalue_dx[ch];
                }
            }
        }
    }
    Ok(WarpResult {
        image: Image::from_raw(w, h, c, data),
        valid: Mask::new(w, h, valid)?,
        ddisp,
    })
}

/// The four center-view reconstructions. The first letter pair names the
/// source view (`cl`: from the left image, `cr`: from the right image), the
/// suffix names the disparity field that drove the warp.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossWarp {
    pub cl_l: WarpResult,
    pub cl_r: WarpResult,
    pub cr_r: WarpResult,
    pub cr_l: WarpResult,
}

pub fn cross_warp(
    frame: &MultiscopicFrame,
    d_l: &DisparityField,
    d_r: &DisparityField,
) -> Result<CrossWarp> {
    Ok(CrossWarp {
        cl_l: warp_to_center(&frame.left, d_l, Side::Left)?,
        cl_r: warp_to_center(&frame.left, d_r, Side::Left)?,
        cr_r: warp_to_center(&frame.right, d_r, Side::Right)?,
        cr_l: warp_to_center(&frame.right, d_l, Side::Right)?,
    })
}
