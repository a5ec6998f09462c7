//! Windowed structural similarity with analytic gradients.
//!
//! Local statistics use a square box window truncated at the image border and
//! restricted to the valid pixels of the first image. SSIM is computed per
//! channel and averaged over channels.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_dims, Error, Result};
use crate::grid::{Image, Mask};
use crate::losses::LossConfig;

/// Box filter over a `(2r+1) x (2r+1)` window clipped to the grid, using
/// running sums along each axis. Holds its scratch rows so repeated calls do
/// not allocate.
pub(crate) struct BoxSum {
    width: usize,
    height: usize,
    r: usize,
    tmp: Vec<f64>,
    acc: Vec<f64>,
}

impl BoxSum {
    pub(crate) fn new(width: usize, height: usize, r: usize) -> Self {
        Self {
            width,
            height,
            r,
            tmp: vec![0.0; width * height],
            acc: vec![0.0; width],
        }
    }

    pub(crate) fn apply(&mut self, src: &[f64], out: &mut Vec<f64>) {
        let (width, height, r) = (self.width, self.height, self.r);
        debug_assert_eq!(src.len(), width * height);
        for (row, dst) in src.chunks_exact(width).zip(self.tmp.chunks_exact_mut(width)) {
            if width > 2 * r {
                // Interior: a sum of shifted slices, which vectorizes.
                let body = &mut dst[r..width - r];
                body.copy_from_slice(&row[..width - 2 * r]);
                for k in 1..=2 * r {
                    for (d, x) in body.iter_mut().zip(&row[k..k + width - 2 * r]) {
                        *d += x;
                    }
                }
                for u in (0..r).chain(width - r..width) {
                    dst[u] = row[u.saturating_sub(r)..=(u + r).min(width - 1)].iter().sum();
                }
            } else {
                for u in 0..width {
                    dst[u] = row[u.saturating_sub(r)..=(u + r).min(width - 1)].iter().sum();
                }
            }
        }
        let tmp = &self.tmp;
        let acc = &mut self.acc;
        acc.fill(0.0);
        for row in tmp.chunks_exact(width).take(r + 1) {
            for (a, x) in acc.iter_mut().zip(row) {
                *a += x;
            }
        }
        out.clear();
        out.extend_from_slice(acc);
        for v in 1..height {
            if v + r < height {
                for (a, x) in acc.iter_mut().zip(&tmp[(v + r) * width..(v + r + 1) * width]) {
                    *a += x;
                }
            }
            if v > r {
                for (a, x) in acc.iter_mut().zip(&tmp[(v - r - 1) * width..(v - r) * width]) {
                    *a -= x;
                }
            }
            out.extend_from_slice(acc);
        }
    }
}

/// Per-pixel SSIM between two images plus what is needed to back-propagate a
/// weighted sum of SSIM values into the first image.
#[derive(Debug, Clone)]
pub struct SsimMap {
    width: usize,
    height: usize,
    channels: usize,
    radius: usize,
    mask: Vec<bool>,
    values: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
    // Per pixel and channel: coefficients of the SSIM derivative with respect
    // to a pixel q of the window, d S / d a_q = e1 + 2 a_q e2 + b_q e3.
    e1: Vec<f64>,
    e2: Vec<f64>,
    e3: Vec<f64>,
}

/// SSIM over the whole image (every pixel valid).
pub fn ssim_map(a: &Image, b: &Image, cfg: &LossConfig) -> Result<SsimMap> {
    let (w, h) = a.dims();
    ssim_map_masked(a, b, &Mask::filled(w, h, true), cfg)
}

/// SSIM where window statistics only include pixels valid in `mask`. Invalid
/// pixels get SSIM 0 and receive no gradient.
pub fn ssim_map_masked(a: &Image, b: &Image, mask: &Mask, cfg: &LossConfig) -> Result<SsimMap> {
    check_dims("ssim_map", a.dims(), b.dims())?;
    check_dims("ssim_map mask", a.dims(), mask.dims())?;
    if a.channels() != b.channels() {
        return Err(Error::invalid("ssim_map: channel counts differ"));
    }
    cfg.validate()?;
    let (w, h) = a.dims();
    let ch = a.channels();
    let n_px = w * h;
    let r = cfg.ssim_window / 2;
    let (c1, c2) = (cfg.ssim_c1, cfg.ssim_c2);
    let m = mask.data();

    let ind: Vec<f64> = m.iter().map(|&x| if x { 1.0 } else { 0.0 }).collect();
    let mut boxes = BoxSum::new(w, h, r);
    let mut count = Vec::with_capacity(n_px);
    boxes.apply(&ind, &mut count);

    let mut values = vec![0.0; n_px];
    let mut e1 = vec![0.0; n_px * ch];
    let mut e2 = vec![0.0; n_px * ch];
    let mut e3 = vec![0.0; n_px * ch];

    // Reciprocal window counts, shared by every channel.
    let inv_count: Vec<f64> = count.iter().map(|&n| if n > 0.0 { 1.0 / n } else { 0.0 }).collect();
    let inv_ch = 1.0 / ch as f64;
    let mut planes: [Vec<f64>; 5] = core::array::from_fn(|_| vec![0.0; n_px]);
    let mut sums: [Vec<f64>; 5] = core::array::from_fn(|_| Vec::with_capacity(n_px));
    for c in 0..ch {
        let [pa, pb, paa, pbb, pab] = &mut planes;
        for i in 0..n_px {
            let k = i * ch + c;
            let (x, y) = if m[i] { (a.data()[k], b.data()[k]) } else { (0.0, 0.0) };
            pa[i] = x;
            pb[i] = y;
            paa[i] = x * x;
            pbb[i] = y * y;
            pab[i] = x * y;
        }
        for (p, s) in planes.iter().zip(sums.iter_mut()) {
            boxes.apply(p, s);
        }
        let [sa, sb, saa, sbb, sab] = &sums;
        for i in 0..n_px {
            if !m[i] {
                continue;
            }
            let inv_n = inv_count[i];
            let mu_a = sa[i] * inv_n;
            let mu_b = sb[i] * inv_n;
            let var_a = saa[i] * inv_n - mu_a * mu_a;
            let var_b = sbb[i] * inv_n - mu_b * mu_b;
            let cov = sab[i] * inv_n - mu_a * mu_b;
            let a1 = 2.0 * mu_a * mu_b + c1;
            let a2 = 2.0 * cov + c2;
            let b1 = mu_a * mu_a + mu_b * mu_b + c1;
            let b2 = var_a + var_b + c2;
            let inv_den = 1.0 / (b1 * b2);
            let s = a1 * a2 * inv_den;
            values[i] += s * inv_ch;

            // 1/b1 = b2/den and 1/b2 = b1/den.
            let ds_dmu = 2.0 * inv_den * (mu_b * a2 - mu_a * s * b2);
            let ds_dvar = -s * b1 * inv_den;
            let ds_dcov = 2.0 * a1 * inv_den;
            let k = i * ch + c;
            e1[k] = (ds_dmu - 2.0 * ds_dvar * mu_a - ds_dcov * mu_b) * inv_n;
            e2[k] = ds_dvar * inv_n;
            e3[k] = ds_dcov * inv_n;
        }
    }

    Ok(SsimMap {
        width: w,
        height: h,
        channels: ch,
        radius: r,
        mask: m.to_vec(),
        values,
        a: a.data().to_vec(),
        b: b.data().to_vec(),
        e1,
        e2,
        e3,
    })
}

impl SsimMap {
    /// Channel-averaged SSIM per pixel (0 at invalid pixels).
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// Gradient of `sum_p weights[p] * SSIM(p)` with respect to every value of
    /// the first image, laid out like the image data.
    pub fn backprop(&self, weights: &[f64]) -> Vec<f64> {
        let (w, h, ch) = (self.width, self.height, self.channels);
        let n_px = w * h;
        assert_eq!(weights.len(), n_px, "one weight per pixel");
        let mut grad = vec![0.0; n_px * ch];
        let mut k: [Vec<f64>; 3] = [vec![0.0; n_px], vec![0.0; n_px], vec![0.0; n_px]];
        let mut acc: [Vec<f64>; 3] = Default::default();
        let inv_ch = 1.0 / ch as f64;
        let mut boxes = BoxSum::new(w, h, self.radius);
        for c in 0..ch {
            for i in 0..n_px {
                let j = i * ch + c;
                let wi = if self.mask[i] { weights[i] } else { 0.0 };
                k[0][i] = wi * self.e1[j];
                k[1][i] = wi * self.e2[j];
                k[2][i] = wi * self.e3[j];
            }
            for (src, dst) in k.iter().zip(acc.iter_mut()) {
                boxes.apply(src, dst);
            }
            for i in 0..n_px {
                if !self.mask[i] {
                    continue;
                }
                let j = i * ch + c;
                grad[j] = inv_ch * (acc[0][i] + 2.0 * self.a[j] * acc[1][i] + self.b[j] * acc[2][i]);
            }
        }
        grad
    }
}
