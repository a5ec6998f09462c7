//! The self-supervised objective and its analytic gradients.
//!
//! ```text
//! L = l1 * L_P + l2 * L_sigma + l3 * L_M + l4 * L_S
//! ```
//!
//! * `L_P`: mean over reconstructions of the mean `(1 - SSIM) / 2`.
//! * `L_sigma`: heteroscedastic L1 term `sqrt(2) * exp(-s) * |r| + s`.
//! * `L_M`: uncertainty-gated L1 consistency between the two disparity fields.
//! * `L_S`: edge-aware smoothness with a step penalty on discontinuities.
//!
//! Every term is averaged over the pixels it covers, so magnitudes do not
//! depend on resolution.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_dims, Error, Result};
use crate::frame::MultiscopicFrame;
use crate::grid::{DisparityField, Field, Image, UncertaintyField};
use crate::ssim::ssim_map_masked;
use crate::warp::{cross_warp, CrossWarp, WarpResult};

const SQRT_2: f64 = core::f64::consts::SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub lambda4: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            lambda1: 1.0,
            lambda2: 0.01,
            lambda3: 0.03,
            lambda4: 0.03,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        let all = [self.lambda1, self.lambda2, self.lambda3, self.lambda4];
        if all.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::invalid(format!(
                "loss weights must be finite and non-negative, got {all:?}"
            )));
        }
        Ok(())
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            lambda1: k * self.lambda1,
            lambda2: k * self.lambda2,
            lambda3: k * self.lambda3,
            lambda4: k * self.lambda4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossConfig {
    /// Odd side length of the SSIM box window.
    pub ssim_window: usize,
    pub ssim_c1: f64,
    pub ssim_c2: f64,
    /// Edge sensitivity of the smoothness weights.
    pub gamma: f64,
    /// Extra penalty for a disparity step above `disc_threshold`.
    pub k_discontinuity: f64,
    pub disc_threshold: f64,
    /// Uncertainty threshold: a branch with `sigma >= t_sigma` is uncertain.
    pub t_sigma: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            ssim_window: 5,
            ssim_c1: 0.01 * 0.01,
            ssim_c2: 0.03 * 0.03,
            gamma: 10.0,
            k_discontinuity: 10.0,
            disc_threshold: 0.5,
            t_sigma: core::f64::consts::E,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ssim_window < 3 || self.ssim_window % 2 == 0 {
            return Err(Error::invalid(format!(
                "ssim_window must be odd and >= 3, got {}",
                self.ssim_window
            )));
        }
        if !(self.ssim_c1 > 0.0 && self.ssim_c2 > 0.0) {
            return Err(Error::invalid("SSIM stabilizers must be positive"));
        }
        if !(self.t_sigma > 0.0) {
            return Err(Error::invalid("t_sigma must be positive"));
        }
        if !(self.disc_threshold > 0.0) {
            return Err(Error::invalid("disc_threshold must be positive"));
        }
        if !(self.gamma >= 0.0 && self.k_discontinuity >= 0.0) {
            return Err(Error::invalid("gamma and k_discontinuity must be non-negative"));
        }
        Ok(())
    }
}

/// Which reconstructions feed the photometric and uncertainty terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Mode {
    /// Each field only warps its own side view (`I_cl_l`, `I_cr_r`).
    Stereo,
    /// All four cross-warped reconstructions.
    #[default]
    Multiscopic,
}

/// The optimized fields.
#[derive(Debug, Clone, PartialEq)]
pub struct Fields {
    pub d_l: DisparityField,
    pub d_r: DisparityField,
    pub s_l: UncertaintyField,
    pub s_r: UncertaintyField,
}

impl Fields {
    /// Disparities as given, log-uncertainties at 0 (sigma = 1).
    pub fn with_neutral_uncertainty(d_l: DisparityField, d_r: DisparityField) -> Self {
        let (w, h) = d_l.dims();
        Self {
            d_l,
            d_r,
            s_l: Field::zeros(w, h),
            s_r: Field::zeros(w, h),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        self.d_l.dims()
    }

    fn check(&self, dims: (usize, usize)) -> Result<()> {
        check_dims("d_l", dims, self.d_l.dims())?;
        check_dims("d_r", dims, self.d_r.dims())?;
        check_dims("s_l", dims, self.s_l.dims())?;
        check_dims("s_r", dims, self.s_r.dims())
    }
}

/// Which disparity field drove a reconstruction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Branch {
    Left,
    Right,
}

struct Recon<'a> {
    name: &'static str,
    warp: &'a WarpResult,
    branch: Branch,
}

fn reconstructions(warps: &CrossWarp, mode: Mode) -> Vec<Recon<'_>> {
    let cl_l = Recon {
        name: "I_cl_l",
        warp: &warps.cl_l,
        branch: Branch::Left,
    };
    let cr_r = Recon {
        name: "I_cr_r",
        warp: &warps.cr_r,
        branch: Branch::Right,
    };
    match mode {
        Mode::Stereo => vec![cl_l, cr_r],
        Mode::Multiscopic => vec![
            cl_l,
            Recon {
                name: "I_cl_r",
                warp: &warps.cl_r,
                branch: Branch::Right,
            },
            Recon {
                name: "I_cr_l",
                warp: &warps.cr_l,
                branch: Branch::Left,
            },
            cr_r,
        ],
    }
}

#[inline]
fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Cross photometric loss and its gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotometricLoss {
    pub value: f64,
    pub grad_d_l: Field,
    pub grad_d_r: Field,
}

pub fn photometric_loss(
    warps: &CrossWarp,
    center: &Image,
    cfg: &LossConfig,
    mode: Mode,
) -> Result<PhotometricLoss> {
    let (w, h) = center.dims();
    let ch = center.channels();
    let recons = reconstructions(warps, mode);
    let k = recons.len() as f64;
    let mut value = 0.0;
    let mut grad_d_l = Field::zeros(w, h);
    let mut grad_d_r = Field::zeros(w, h);
    for rec in &recons {
        check_dims("photometric_loss", center.dims(), rec.warp.image.dims())?;
        let n_valid = rec.warp.valid.count();
        if n_valid == 0 {
            return Err(Error::Degenerate(format!(
                "reconstruction {} has no valid pixels",
                rec.name
            )));
        }
        let map = ssim_map_masked(&rec.warp.image, center, &rec.warp.valid, cfg)?;
        let norm = 1.0 / (n_valid as f64 * k);
        let term: f64 = map
            .values()
            .iter()
            .zip(rec.warp.valid.data())
            .filter(|(_, &ok)| ok)
            .map(|(s, _)| 0.5 * (1.0 - s))
            .sum();
        value += term * norm;

        // d/dS of (1 - S) / 2 is -1/2.
        let weights = vec![-0.5 * norm; w * h];
        let grad_img = map.backprop(&weights);
        let grad = match rec.branch {
            Branch::Left => &mut grad_d_l,
            Branch::Right => &mut grad_d_r,
        };
        for (i, g) in grad.data_mut().iter_mut().enumerate() {
            let mut acc = 0.0;
            for c in 0..ch {
                acc += grad_img[i * ch + c] * rec.warp.ddisp[i * ch + c];
            }
            *g += acc;
        }
    }
    Ok(PhotometricLoss {
        value,
        grad_d_l,
        grad_d_r,
    })
}

/// Heteroscedastic uncertainty loss and its gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertaintyLoss {
    pub value: f64,
    pub grad_d_l: Field,
    pub grad_d_r: Field,
    pub grad_s_l: Field,
    pub grad_s_r: Field,
}

/// Per-pixel heteroscedastic L1 term for residual `r` and log-uncertainty `s`.
#[inline]
pub fn uncertainty_term(r: f64, s: f64) -> f64 {
    SQRT_2 * libm::exp(-s) * r + s
}

pub fn uncertainty_loss(
    warps: &CrossWarp,
    center: &Image,
    s_l: &UncertaintyField,
    s_r: &UncertaintyField,
    mode: Mode,
) -> Result<UncertaintyLoss> {
    let (w, h) = center.dims();
    check_dims("uncertainty_loss s_l", center.dims(), s_l.dims())?;
    check_dims("uncertainty_loss s_r", center.dims(), s_r.dims())?;
    let ch = center.channels();
    let inv_ch = 1.0 / ch as f64;
    let recons = reconstructions(warps, mode);
    let k = recons.len() as f64;
    let mut out = UncertaintyLoss {
        value: 0.0,
        grad_d_l: Field::zeros(w, h),
        grad_d_r: Field::zeros(w, h),
        grad_s_l: Field::zeros(w, h),
        grad_s_r: Field::zeros(w, h),
    };
    let cdata = center.data();
    for rec in &recons {
        check_dims("uncertainty_loss", center.dims(), rec.warp.image.dims())?;
        let n_valid = rec.warp.valid.count();
        if n_valid == 0 {
            continue;
        }
        let norm = 1.0 / (n_valid as f64 * k);
        let (s, gd, gs) = match rec.branch {
            Branch::Left => (s_l, &mut out.grad_d_l, &mut out.grad_s_l),
            Branch::Right => (s_r, &mut out.grad_d_r, &mut out.grad_s_r),
        };
        let rdata = rec.warp.image.data();
        let mut sum = 0.0;
        for i in 0..w * h {
            if !rec.warp.valid.data()[i] {
                continue;
            }
            let mut r = 0.0;
            let mut dr_dd = 0.0;
            for c in 0..ch {
                let diff = rdata[i * ch + c] - cdata[i * ch + c];
                r += diff.abs();
                dr_dd += sign(diff) * rec.warp.ddisp[i * ch + c];
            }
            r *= inv_ch;
            dr_dd *= inv_ch;
            let si = s.data()[i];
            let scale = SQRT_2 * libm::exp(-si);
            sum += scale * r + si;
            gs.data_mut()[i] += norm * (1.0 - scale * r);
            gd.data_mut()[i] += norm * scale * dr_dd;
        }
        out.value += sum * norm;
    }
    Ok(out)
}

/// Which branch of the mutual-supervision loss a pixel falls in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MutualCase {
    /// Both branches confident: symmetric consistency.
    BothConfident,
    /// Left uncertain: the right disparity is a fixed label for the left one.
    LeftUncertain,
    /// Right uncertain: the left disparity is a fixed label for the right one.
    RightUncertain,
    /// Both uncertain: no contribution.
    BothUncertain,
}

impl MutualCase {
    pub fn classify(s_l: f64, s_r: f64, t_sigma: f64) -> Self {
        let left_uncertain = libm::exp(s_l) >= t_sigma;
        let right_uncertain = libm::exp(s_r) >= t_sigma;
        match (left_uncertain, right_uncertain) {
            (false, false) => MutualCase::BothConfident,
            (true, false) => MutualCase::LeftUncertain,
            (false, true) => MutualCase::RightUncertain,
            (true, true) => MutualCase::BothUncertain,
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MutualLoss {
    pub value: f64,
    pub grad_d_l: Field,
    pub grad_d_r: Field,
    /// Contribution of each case (indexed like `MutualCase`), already divided
    /// by the pixel count. `value` is their sum.
    pub case_values: [f64; 4],
    pub case_counts: [usize; 4],
}

pub fn mutual_loss(
    d_l: &DisparityField,
    d_r: &DisparityField,
    s_l: &UncertaintyField,
    s_r: &UncertaintyField,
    cfg: &LossConfig,
) -> Result<MutualLoss> {
    let dims = d_l.dims();
    check_dims("mutual_loss d_r", dims, d_r.dims())?;
    check_dims("mutual_loss s_l", dims, s_l.dims())?;
    check_dims("mutual_loss s_r", dims, s_r.dims())?;
    let (w, h) = dims;
    let n = (w * h) as f64;
    let mut grad_d_l = Field::zeros(w, h);
    let mut grad_d_r = Field::zeros(w, h);
    let mut sums = [0.0; 4];
    let mut counts = [0usize; 4];
    for i in 0..w * h {
        let case = MutualCase::classify(s_l.data()[i], s_r.data()[i], cfg.t_sigma);
        counts[case.index()] += 1;
        let diff = d_l.data()[i] - d_r.data()[i];
        let g = sign(diff) / n;
        match case {
            MutualCase::BothConfident => {
                sums[case.index()] += diff.abs();
                grad_d_l.data_mut()[i] = g;
                grad_d_r.data_mut()[i] = -g;
            }
            MutualCase::LeftUncertain => {
                sums[case.index()] += diff.abs();
                grad_d_l.data_mut()[i] = g;
            }
            MutualCase::RightUncertain => {
                sums[case.index()] += diff.abs();
                grad_d_r.data_mut()[i] = -g;
            }
            MutualCase::BothUncertain => {}
        }
    }
    let case_values = sums.map(|s| s / n);
    Ok(MutualLoss {
        value: case_values[0] + case_values[1] + case_values[2] + case_values[3],
        grad_d_l,
        grad_d_r,
        case_values,
        case_counts: counts,
    })
}

/// Per-difference smoothness terms of one field, before averaging.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothnessTerms {
    /// Term at `(u, v)` for the pair `(u, v) - (u + 1, v)`, `(w - 1) x h`.
    pub x: Vec<f64>,
    /// Term at `(u, v)` for the pair `(u, v) - (u, v + 1)`, `w x (h - 1)`.
    pub y: Vec<f64>,
}

fn edge_weight(center: &Image, a: (usize, usize), b: (usize, usize), gamma: f64) -> f64 {
    let ch = center.channels();
    let mut g = 0.0;
    for c in 0..ch {
        g += (center.get(b.0, b.1, c) - center.get(a.0, a.1, c)).abs();
    }
    libm::exp(-gamma * g / ch as f64)
}

fn check_smoothness_input(d: &DisparityField, center: &Image) -> Result<()> {
    check_dims("smoothness_loss", center.dims(), d.dims())?;
    let (w, h) = d.dims();
    if w < 2 || h < 2 {
        return Err(Error::invalid("smoothness needs at least 2x2 pixels"));
    }
    Ok(())
}

/// Evaluates `f(|dD|) * exp(-gamma * |dI|)` at every forward difference, with
/// `f(t) = t + K [t > threshold]`.
pub fn smoothness_terms(d: &DisparityField, center: &Image, cfg: &LossConfig) -> Result<SmoothnessTerms> {
    check_smoothness_input(d, center)?;
    let (w, h) = d.dims();
    let f = |t: f64| {
        if t > cfg.disc_threshold {
            t + cfg.k_discontinuity
        } else {
            t
        }
    };
    let mut x = Vec::with_capacity((w - 1) * h);
    for v in 0..h {
        for u in 0..w - 1 {
            let dd = (d.get(u + 1, v) - d.get(u, v)).abs();
            x.push(f(dd) * edge_weight(center, (u, v), (u + 1, v), cfg.gamma));
        }
    }
    let mut y = Vec::with_capacity(w * (h - 1));
    for v in 0..h - 1 {
        for u in 0..w {
            let dd = (d.get(u, v + 1) - d.get(u, v)).abs();
            y.push(f(dd) * edge_weight(center, (u, v), (u, v + 1), cfg.gamma));
        }
    }
    Ok(SmoothnessTerms { x, y })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothnessLoss {
    pub value: f64,
    pub grad: Field,
}

/// Edge-aware smoothness of one disparity field, averaged over all forward
/// differences of both axes. The discontinuity step has zero gradient.
pub fn smoothness_loss(d: &DisparityField, center: &Image, cfg: &LossConfig) -> Result<SmoothnessLoss> {
    let terms = smoothness_terms(d, center, cfg)?;
    let (w, h) = d.dims();
    let norm = 1.0 / (terms.x.len() + terms.y.len()) as f64;
    let value = (terms.x.iter().sum::<f64>() + terms.y.iter().sum::<f64>()) * norm;
    let mut grad = Field::zeros(w, h);
    for v in 0..h {
        for u in 0..w - 1 {
            let diff = d.get(u + 1, v) - d.get(u, v);
            let g = sign(diff) * edge_weight(center, (u, v), (u + 1, v), cfg.gamma) * norm;
            grad.data_mut()[v * w + u + 1] += g;
            grad.data_mut()[v * w + u] -= g;
        }
    }
    for v in 0..h - 1 {
        for u in 0..w {
            let diff = d.get(u, v + 1) - d.get(u, v);
            let g = sign(diff) * edge_weight(center, (u, v), (u, v + 1), cfg.gamma) * norm;
            grad.data_mut()[(v + 1) * w + u] += g;
            grad.data_mut()[v * w + u] -= g;
        }
    }
    Ok(SmoothnessLoss { value, grad })
}

/// Weighted objective value, its four terms and gradients for all fields.
#[derive(Debug, Clone, PartialEq)]
pub struct LossReport {
    pub l_p: f64,
    pub l_sigma: f64,
    pub l_m: f64,
    pub l_s: f64,
    pub total: f64,
    pub grad_d_l: Field,
    pub grad_d_r: Field,
    pub grad_s_l: Field,
    pub grad_s_r: Field,
}

impl LossReport {
    pub fn terms(&self) -> [(&'static str, f64); 5] {
        [
            ("L_P", self.l_p),
            ("L_sigma", self.l_sigma),
            ("L_M", self.l_m),
            ("L_S", self.l_s),
            ("total", self.total),
        ]
    }
}

/// Evaluates the whole objective. `mode` picks the reconstructions; weights
/// are applied as given (the refiner zeroes `lambda3` in stereo mode).
pub fn total_loss(
    frame: &MultiscopicFrame,
    fields: &Fields,
    weights: &LossWeights,
    cfg: &LossConfig,
    mode: Mode,
) -> Result<LossReport> {
    weights.validate()?;
    cfg.validate()?;
    fields.check(frame.dims())?;
    let center = &frame.center;
    let warps = cross_warp(frame, &fields.d_l, &fields.d_r)?;
    let p = photometric_loss(&warps, center, cfg, mode)?;
    let u = uncertainty_loss(&warps, center, &fields.s_l, &fields.s_r, mode)?;
    let m = mutual_loss(&fields.d_l, &fields.d_r, &fields.s_l, &fields.s_r, cfg)?;
    let s_l = smoothness_loss(&fields.d_l, center, cfg)?;
    let s_r = smoothness_loss(&fields.d_r, center, cfg)?;
    let l_s = s_l.value + s_r.value;

    let LossWeights {
        lambda1: w1,
        lambda2: w2,
        lambda3: w3,
        lambda4: w4,
    } = *weights;
    let combine = |a: &Field, b: &Field, c: &Field, d: &Field| {
        let data = a
            .data()
            .iter()
            .zip(b.data())
            .zip(c.data())
            .zip(d.data())
            .map(|(((a, b), c), d)| w1 * a + w2 * b + w3 * c + w4 * d)
            .collect();
        Field::new(a.width(), a.height(), data)
    };
    let (w, h) = frame.dims();
    let zero = Field::zeros(w, h);
    Ok(LossReport {
        l_p: p.value,
        l_sigma: u.value,
        l_m: m.value,
        l_s,
        total: w1 * p.value + w2 * u.value + w3 * m.value + w4 * l_s,
        grad_d_l: combine(&p.grad_d_l, &u.grad_d_l, &m.grad_d_l, &s_l.grad)?,
        grad_d_r: combine(&p.grad_d_r, &u.grad_d_r, &m.grad_d_r, &s_r.grad)?,
        grad_s_l: combine(&zero, &u.grad_s_l, &zero, &zero)?,
        grad_s_r: combine(&zero, &u.grad_s_r, &zero, &zero)?,
    })
}
