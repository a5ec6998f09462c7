//! Dense 2D grids: images, scalar fields and masks.
//!
//! All grids are row-major. Images interleave their channels, so the value of
//! channel `c` at `(u, v)` lives at `(v * width + u) * channels + c`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_dims, Error, Result};

pub const MAX_CHANNELS: usize = 3;

/// Normalized intensity image with 1 or 3 interleaved channels.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Image {
    /// Builds an image, rejecting wrong lengths, unsupported channel counts and
    /// values that are not finite or fall outside `[0, 1]`.
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::invalid(alloc::format!(
                "image must have 1 or 3 channels, got {channels}"
            )));
        }
        if width == 0 || height == 0 {
            return Err(Error::invalid("image dimensions must be non-zero"));
        }
        if data.len() != width * height * channels {
            return Err(Error::invalid(alloc::format!(
                "image data length {} does not match {width}x{height}x{channels}",
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(Error::invalid(alloc::format!(
                "image intensity {bad} outside [0, 1]"
            )));
        }
        Ok(Self::from_raw(width, height, channels, data))
    }

    pub(crate) fn from_raw(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), width * height * channels);
        Self {
            width,
            height,
            channels,
            data,
        }
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f64) -> Result<Self> {
        Self::new(width, height, channels, vec![value; width * height * channels])
    }

    /// Builds an image from a per-pixel function returning one value per channel.
    /// Values are clamped into `[0, 1]`.
    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height * channels);
        for v in 0..height {
            for u in 0..width {
                for c in 0..channels {
                    data.push(f(u, v, c).clamp(0.0, 1.0));
                }
            }
        }
        Self::new(width, height, channels, data)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize, c: usize) -> f64 {
        self.data[(v * self.width + u) * self.channels + c]
    }

    /// Mean over channels of the pixel at `(u, v)`.
    pub fn luminance(&self, u: usize, v: usize) -> f64 {
        let base = (v * self.width + u) * self.channels;
        self.data[base..base + self.channels].iter().sum::<f64>() / self.channels as f64
    }

    /// Extracts one channel as a standalone single-channel plane.
    pub fn channel(&self, c: usize) -> Vec<f64> {
        self.data
            .iter()
            .skip(c)
            .step_by(self.channels)
            .copied()
            .collect()
    }

    pub fn flip_horizontal(&self) -> Self {
        let (w, c) = (self.width, self.channels);
        let mut data = Vec::with_capacity(self.data.len());
        for v in 0..self.height {
            for u in (0..w).rev() {
                let base = (v * w + u) * c;
                data.extend_from_slice(&self.data[base..base + c]);
            }
        }
        Self::from_raw(w, self.height, c, data)
    }

    /// 2x2 box average. Odd trailing rows or columns are dropped.
    pub fn downsample(&self) -> Result<Self> {
        let (w, h) = half_dims(self.width, self.height)?;
        let c = self.channels;
        let mut data = Vec::with_capacity(w * h * c);
        for v in 0..h {
            for u in 0..w {
                for ch in 0..c {
                    let s = self.get(2 * u, 2 * v, ch)
                        + self.get(2 * u + 1, 2 * v, ch)
                        + self.get(2 * u, 2 * v + 1, ch)
                        + self.get(2 * u + 1, 2 * v + 1, ch);
                    data.push(0.25 * s);
                }
            }
        }
        Ok(Self::from_raw(w, h, c, data))
    }
}

/// Dense scalar field. Used for disparities (pixels), log-uncertainties and
/// gradients with respect to either.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

/// Horizontal disparity of the center view, in pixels.
pub type DisparityField = Field;

/// Log-uncertainty `s = ln(sigma)` per pixel.
pub type UncertaintyField = Field;

impl Field {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("field dimensions must be non-zero"));
        }
        if data.len() != width * height {
            return Err(Error::invalid(alloc::format!(
                "field data length {} does not match {width}x{height}",
                data.len()
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("field contains non-finite values"));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        assert!(width > 0 && height > 0, "field dimensions must be non-zero");
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::filled(width, height, 0.0)
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(width > 0 && height > 0, "field dimensions must be non-zero");
        let mut data = Vec::with_capacity(width * height);
        for v in 0..height {
            for u in 0..width {
                data.push(f(u, v));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.data[v * self.width + u]
    }

    #[inline]
    pub fn set(&mut self, u: usize, v: usize, value: f64) {
        self.data[v * self.width + u] = value;
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn clamp_in_place(&mut self, lo: f64, hi: f64) {
        for x in &mut self.data {
            *x = x.clamp(lo, hi);
        }
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
                (lo.min(x), hi.max(x))
            })
    }

    pub fn flip_horizontal(&self) -> Self {
        let w = self.width;
        Self::from_fn(w, self.height, |u, v| self.get(w - 1 - u, v))
    }

    /// 2x2 box average without rescaling (for log-uncertainties and other
    /// unit-free fields).
    pub fn downsample_mean(&self) -> Result<Self> {
        let (w, h) = half_dims(self.width, self.height)?;
        Ok(Self::from_fn(w, h, |u, v| {
            0.25 * (self.get(2 * u, 2 * v)
                + self.get(2 * u + 1, 2 * v)
                + self.get(2 * u, 2 * v + 1)
                + self.get(2 * u + 1, 2 * v + 1))
        }))
    }

    /// 2x2 box average followed by a factor 0.5, so values stay in pixel units
    /// of the coarser grid.
    pub fn downsample_disparity(&self) -> Result<Self> {
        let mut out = self.downsample_mean()?;
        for x in &mut out.data {
            *x *= 0.5;
        }
        Ok(out)
    }

    /// Bilinear upsampling onto a `width x height` grid (about twice this
    /// field's size), multiplying every value by `scale`. Pixel centers are
    /// aligned and coordinates beyond the border are clamped.
    pub fn upsample_to(&self, width: usize, height: usize, scale: f64) -> Self {
        let coord = |x: usize, n: usize| {
            let c = ((x as f64 + 0.5) * 0.5 - 0.5).clamp(0.0, (n - 1) as f64);
            let i = (c as usize).min(n.saturating_sub(2));
            (i, (i + 1).min(n - 1), c - i as f64)
        };
        Self::from_fn(width, height, |u, v| {
            let (u0, u1, fu) = coord(u, self.width);
            let (v0, v1, fv) = coord(v, self.height);
            let top = (1.0 - fu) * self.get(u0, v0) + fu * self.get(u1, v0);
            let bottom = (1.0 - fu) * self.get(u0, v1) + fu * self.get(u1, v1);
            scale * ((1.0 - fv) * top + fv * bottom)
        })
    }
}

pub fn downsample_disparity(d: &DisparityField) -> Result<DisparityField> {
    d.downsample_disparity()
}

pub fn downsample(img: &Image) -> Result<Image> {
    img.downsample()
}

fn half_dims(width: usize, height: usize) -> Result<(usize, usize)> {
    if width < 2 || height < 2 {
        return Err(Error::invalid(alloc::format!(
            "cannot downsample a {width}x{height} grid; both dimensions must be at least 2"
        )));
    }
    Ok((width / 2, height / 2))
}

/// Per-pixel validity flags.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl Mask {
    pub fn new(width: usize, height: usize, data: Vec<bool>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::invalid(alloc::format!(
                "mask data length {} does not match {width}x{height}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: bool) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for v in 0..height {
            for u in 0..width {
                data.push(f(u, v));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn data(&self) -> &[bool] {
        &self.data
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> bool {
        self.data[v * self.width + u]
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.data.iter().any(|&b| b)
    }

    pub fn not(&self) -> Self {
        Self {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&b| !b).collect(),
        }
    }

    pub fn and(&self, other: &Mask) -> Result<Self> {
        check_dims("Mask::and", self.dims(), other.dims())?;
        Ok(self.zip_with(other, |a, b| a && b))
    }

    pub fn or(&self, other: &Mask) -> Result<Self> {
        check_dims("Mask::or", self.dims(), other.dims())?;
        Ok(self.zip_with(other, |a, b| a || b))
    }

    fn zip_with(&self, other: &Mask, f: impl Fn(bool, bool) -> bool) -> Self {
        Self {
            width: self.width,
            height: self.height,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn flip_horizontal(&self) -> Self {
        let w = self.width;
        Self::from_fn(w, self.height, |u, v| self.get(w - 1 - u, v))
    }
}
