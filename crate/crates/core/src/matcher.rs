//! Non-learned cost-volume matcher used to initialize the refiner.
//!
//! Costs are `(1 - SSIM) / 2` between the center view and a side view shifted
//! by an integer disparity. The multiscopic volume averages the center-left
//! and center-right costs, falling back to whichever side is in view.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::frame::MultiscopicFrame;
use crate::grid::{DisparityField, Field, Image, Mask};
use crate::losses::LossConfig;
use crate::ssim::ssim_map_masked;
use crate::warp::Side;

/// Cost stored for out-of-view entries; the largest possible valid cost.
pub const INVALID_COST: f64 = 1.0;

/// Default soft-argmin temperature on `(1 - SSIM) / 2` costs.
pub const DEFAULT_TAU: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct CostVolume {
    width: usize,
    height: usize,
    d_max: usize,
    cost: Vec<f64>,
    valid: Vec<bool>,
}

impl CostVolume {
    /// Builds a volume from explicit per-pixel cost rows, laid out as
    /// `((v * width + u) * (d_max + 1) + d)`.
    pub fn from_parts(
        width: usize,
        height: usize,
        d_max: usize,
        cost: Vec<f64>,
        valid: Vec<bool>,
    ) -> Result<Self> {
        let n = width * height * (d_max + 1);
        if cost.len() != n || valid.len() != n {
            return Err(Error::invalid(format!(
                "cost volume needs {n} entries, got {} costs and {} flags",
                cost.len(),
                valid.len()
            )));
        }
        if cost.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(Error::invalid("costs must be finite and non-negative"));
        }
        Ok(Self {
            width,
            height,
            d_max,
            cost,
            valid,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn d_max(&self) -> usize {
        self.d_max
    }

    #[inline]
    fn index(&self, u: usize, v: usize, d: usize) -> usize {
        (v * self.width + u) * (self.d_max + 1) + d
    }

    pub fn cost(&self, u: usize, v: usize, d: usize) -> f64 {
        self.cost[self.index(u, v, d)]
    }

    pub fn is_valid(&self, u: usize, v: usize, d: usize) -> bool {
        self.valid[self.index(u, v, d)]
    }

    /// Cost row and validity flags of one pixel.
    pub fn row(&self, u: usize, v: usize) -> (&[f64], &[bool]) {
        let start = self.index(u, v, 0);
        let end = start + self.d_max + 1;
        (&self.cost[start..end], &self.valid[start..end])
    }
}

/// Which pairs contribute to a volume.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pairs {
    Both,
    Only(Side),
}

/// Side view shifted by an integer disparity, with the in-view mask.
fn shifted(src: &Image, d: usize, side: Side) -> (Image, Mask) {
    let (w, h) = src.dims();
    let ch = src.channels();
    let mut data = vec![0.0; w * h * ch];
    let mask = Mask::from_fn(w, h, |u, _| match side {
        Side::Left => u + d < w,
        Side::Right => u >= d,
    });
    for v in 0..h {
        for u in 0..w {
            if !mask.get(u, v) {
                continue;
            }
            let x = match side {
                Side::Left => u + d,
                Side::Right => u - d,
            };
            for c in 0..ch {
                data[(v * w + u) * ch + c] = src.get(x, v, c);
            }
        }
    }
    (Image::from_raw(w, h, ch, data), mask)
}

/// Multiscopic cost volume over integer disparities `0..=d_max`.
pub fn build_cost_volume(frame: &MultiscopicFrame, d_max: usize, cfg: &LossConfig) -> Result<CostVolume> {
    build_cost_volume_for(frame, d_max, cfg, Pairs::Both)
}

pub fn build_cost_volume_for(
    frame: &MultiscopicFrame,
    d_max: usize,
    cfg: &LossConfig,
    pairs: Pairs,
) -> Result<CostVolume> {
    cfg.validate()?;
    let (w, h) = frame.dims();
    if d_max < 1 || d_max >= w {
        return Err(Error::invalid(format!(
            "d_max must lie in [1, {}), got {d_max}",
            w
        )));
    }
    let sides: &[Side] = match pairs {
        Pairs::Both => &[Side::Left, Side::Right],
        Pairs::Only(Side::Left) => &[Side::Left],
        Pairs::Only(Side::Right) => &[Side::Right],
    };
    let nd = d_max + 1;
    let mut sum = vec![0.0; w * h * nd];
    let mut count = vec![0u8; w * h * nd];
    for d in 0..=d_max {
        for &side in sides {
            let src = match side {
                Side::Left => &frame.left,
                Side::Right => &frame.right,
            };
            let (img, mask) = shifted(src, d, side);
            let map = ssim_map_masked(&img, &frame.center, &mask, cfg)?;
            for i in 0..w * h {
                if mask.data()[i] {
                    // Round-off can push SSIM a hair above 1.
                    sum[i * nd + d] += (0.5 * (1.0 - map.values()[i])).max(0.0);
                    count[i * nd + d] += 1;
                }
            }
        }
    }
    let valid: Vec<bool> = count.iter().map(|&c| c > 0).collect();
    let cost = sum
        .iter()
        .zip(&count)
        .map(|(&s, &c)| if c > 0 { s / c as f64 } else { INVALID_COST })
        .collect();
    CostVolume::from_parts(w, h, d_max, cost, valid)
}

/// Index of the smallest valid cost, ties going to the smaller disparity.
fn argmin(costs: &[f64], valid: &[bool]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (d, (&c, &ok)) in costs.iter().zip(valid).enumerate() {
        if ok && best.is_none_or(|b| c < costs[b]) {
            best = Some(d);
        }
    }
    best
}

/// Vertex offset of the parabola through `(-1, left)`, `(0, mid)`, `(1, right)`.
pub fn parabola_offset(left: f64, mid: f64, right: f64) -> f64 {
    let curvature = left + right - 2.0 * mid;
    if curvature > 0.0 {
        (left - right) / (2.0 * curvature)
    } else {
        0.0
    }
}

/// Winner-take-all disparity with parabolic sub-pixel refinement.
pub fn wta_disparity(vol: &CostVolume) -> DisparityField {
    let d_max = vol.d_max as f64;
    Field::from_fn(vol.width, vol.height, |u, v| {
        let (costs, valid) = vol.row(u, v);
        let Some(best) = argmin(costs, valid) else {
            return 0.0;
        };
        let mut d = best as f64;
        if best >= 1 && best < vol.d_max && valid[best - 1] && valid[best + 1] {
            d += parabola_offset(costs[best - 1], costs[best], costs[best + 1]);
        }
        d.clamp(0.0, d_max)
    })
}

/// Expected disparity under `softmax(-cost / tau)` over valid entries.
pub fn soft_argmin(vol: &CostVolume, tau: f64) -> Result<DisparityField> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::invalid(format!("tau must be positive, got {tau}")));
    }
    let mut data = Vec::with_capacity(vol.width * vol.height);
    for v in 0..vol.height {
        for u in 0..vol.width {
            let (costs, valid) = vol.row(u, v);
            let min = costs
                .iter()
                .zip(valid)
                .filter(|(_, &ok)| ok)
                .map(|(&c, _)| c)
                .fold(f64::INFINITY, f64::min);
            if !min.is_finite() {
                return Err(Error::Degenerate(format!(
                    "every disparity is invalid at pixel ({u}, {v})"
                )));
            }
            let (mut z, mut m) = (0.0, 0.0);
            for (d, (&c, &ok)) in costs.iter().zip(valid).enumerate() {
                if ok {
                    let p = libm::exp(-(c - min) / tau);
                    z += p;
                    m += p * d as f64;
                }
            }
            data.push(m / z);
        }
    }
    Field::new(vol.width, vol.height, data)
}
