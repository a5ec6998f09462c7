//! Helpers shared by the integration tests (and the acceptance suite).
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use triview_core::losses::{total_loss, Fields, LossConfig, LossWeights, Mode};
use triview_core::synth::{generate_scene, Scene, SceneConfig};
use triview_core::warp::{cross_warp, WarpResult};
use triview_core::{Field, Image, Mask, MultiscopicFrame};

/// Mean absolute channel difference between a reconstruction and `center`
/// over pixels that are valid in the warp and set in `mask`. `None` when no
/// pixel qualifies.
pub fn masked_mean_abs(warp: &WarpResult, center: &Image, mask: &Mask) -> Option<f64> {
    let ch = center.channels();
    let (mut sum, mut n) = (0.0, 0usize);
    for i in 0..mask.data().len() {
        if !(mask.data()[i] && warp.valid.data()[i]) {
            continue;
        }
        for c in 0..ch {
            sum += (warp.image.data()[i * ch + c] - center.data()[i * ch + c]).abs();
        }
        n += ch;
    }
    (n > 0).then(|| sum / n as f64)
}

pub fn scene(seed: u64, width: usize, height: usize) -> Scene {
    generate_scene(&SceneConfig {
        seed,
        width,
        height,
        ..SceneConfig::default()
    })
    .expect("valid scene config")
}

/// Per-pixel log-uncertainty at the stationary point `sqrt(2) r` of the
/// uncertainty term, from the channel-mean residuals of both reconstructions
/// a branch drives.
pub fn calibrated_log_sigma(s: &Scene) -> (Field, Field) {
    let f = &s.frame;
    let gt = f.gt_disparity.as_ref().unwrap();
    let w = cross_warp(f, gt, gt).unwrap();
    let (width, height) = f.dims();
    let residual = |a: &WarpResult, b: &WarpResult| {
        Field::from_fn(width, height, |u, v| {
            let mut sum = 0.0;
            let mut n = 0.0;
            for r in [a, b] {
                if r.valid.get(u, v) {
                    for c in 0..3 {
                        sum += (r.image.get(u, v, c) - f.center.get(u, v, c)).abs() / 3.0;
                    }
                    n += 1.0;
                }
            }
            let r = if n > 0.0 { sum / n } else { 0.0 };
            (2f64.sqrt() * r.max(1e-3)).ln()
        })
    };
    (residual(&w.cl_l, &w.cr_l), residual(&w.cl_r, &w.cr_r))
}

/// Outcome of comparing analytic and central-difference gradients.
#[derive(Debug, Default, Clone, Copy)]
pub struct GradStats {
    pub checked: usize,
    pub skipped: usize,
    pub worst_rel: f64,
}

impl GradStats {
    pub fn merge(&mut self, other: GradStats) {
        self.checked += other.checked;
        self.skipped += other.skipped;
        self.worst_rel = self.worst_rel.max(other.worst_rel);
    }
}

/// Random frame plus fields that keep every piecewise definition away from
/// its kinks: disparities sit 0.25 from integers (bilinear cell edges) with
/// `d_l` and `d_r` on different quarter offsets (so `d_l != d_r`), sides and
/// center occupy disjoint intensity ranges (so photometric residuals never
/// cross zero), and log-uncertainties avoid the threshold by a margin.
pub fn random_gradient_case(rng: &mut ChaCha8Rng, w: usize, h: usize, t_sigma: f64) -> (MultiscopicFrame, Fields) {
    let mut img = |lo: f64, hi: f64| {
        let data = (0..w * h * 3).map(|_| rng.random_range(lo..hi)).collect();
        Image::new(w, h, 3, data).expect("values in range")
    };
    let left = img(0.0, 0.45);
    let center = img(0.55, 1.0);
    let right = img(0.0, 0.45);
    let frame = MultiscopicFrame::new(left, center, right, 0.1, 100.0).expect("matching dims");
    let ln_t = t_sigma.ln();
    let mut disparity = |offset: f64| {
        Field::new(w, h, (0..w * h).map(|_| rng.random_range(0..5) as f64 + offset).collect()).unwrap()
    };
    let d_l = disparity(0.25);
    let d_r = disparity(0.75);
    let mut log_sigma = || {
        let data = (0..w * h)
            .map(|_| loop {
                let s: f64 = rng.random_range(-1.5..2.5);
                if (s - ln_t).abs() > 0.05 {
                    break s;
                }
            })
            .collect();
        Field::new(w, h, data).unwrap()
    };
    let s_l = log_sigma();
    let s_r = log_sigma();
    (frame, Fields { d_l, d_r, s_l, s_r })
}

/// Checks all four gradients of `total_loss` against central differences
/// with step `h` at every pixel. Relative error uses the larger magnitude of
/// the two estimates, floored at `abs_floor`.
///
/// Where one branch is uncertain, the mutual term treats the other branch's
/// disparity as a constant label. A difference quotient of the loss value
/// still sees that dependence, so its share,
/// `lambda3 * d|d_l - d_r| / d(label) / N`, is removed from the quotient.
pub fn check_total_loss_gradients(
    frame: &MultiscopicFrame,
    fields: &Fields,
    weights: &LossWeights,
    cfg: &LossConfig,
    mode: Mode,
    h: f64,
    abs_floor: f64,
) -> GradStats {
    let report = total_loss(frame, fields, weights, cfg, mode).expect("loss evaluates");
    let loss_at = |f: &Fields| total_loss(frame, f, weights, cfg, mode).expect("loss evaluates").total;
    let ln_t = cfg.t_sigma.ln();
    let mut stats = GradStats::default();
    let analytic = [&report.grad_d_l, &report.grad_d_r, &report.grad_s_l, &report.grad_s_r];
    for (which, grad) in analytic.into_iter().enumerate() {
        for i in 0..grad.data().len() {
            let x = [&fields.d_l, &fields.d_r, &fields.s_l, &fields.s_r][which].data()[i];
            // A log-uncertainty step across ln(T_sigma) switches the mutual
            // case; such pixels are not differentiable there.
            if which >= 2 && ((x - h) - ln_t).signum() != ((x + h) - ln_t).signum() {
                stats.skipped += 1;
                continue;
            }
            let mut plus = fields.clone();
            let mut minus = fields.clone();
            slot(&mut plus, which).data_mut()[i] = x + h;
            slot(&mut minus, which).data_mut()[i] = x - h;
            let mut fd = (loss_at(&plus) - loss_at(&minus)) / (2.0 * h);
            if which < 2 {
                fd -= label_share(fields, weights, cfg, which, i);
            }
            let an = grad.data()[i];
            let rel = (fd - an).abs() / fd.abs().max(an.abs()).max(abs_floor);
            stats.checked += 1;
            stats.worst_rel = stats.worst_rel.max(rel);
        }
    }
    stats
}

fn label_share(fields: &Fields, weights: &LossWeights, cfg: &LossConfig, which: usize, i: usize) -> f64 {
    let uncertain = |s: &Field| s.data()[i].exp() >= cfg.t_sigma;
    let (l_unc, r_unc) = (uncertain(&fields.s_l), uncertain(&fields.s_r));
    let diff = fields.d_l.data()[i] - fields.d_r.data()[i];
    let n = fields.d_l.data().len() as f64;
    match which {
        // d_r is the label when only the left branch is uncertain.
        1 if l_unc && !r_unc => -weights.lambda3 * diff.signum() / n,
        0 if r_unc && !l_unc => weights.lambda3 * diff.signum() / n,
        _ => 0.0,
    }
}

fn slot(f: &mut Fields, which: usize) -> &mut Field {
    match which {
        0 => &mut f.d_l,
        1 => &mut f.d_r,
        2 => &mut f.s_l,
        _ => &mut f.s_r,
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
