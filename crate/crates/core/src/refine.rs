//! Coarse-to-fine minimization of the objective over the disparity and
//! log-uncertainty fields.
//!
//! Each pyramid level runs a fixed number of Adam steps on the analytic
//! gradients of [`total_loss`]. Disparities are clamped to `[0, d_max]` after
//! every step and doubled when moving to the next finer level.

use alloc::vec::Vec;

use crate::adam::Adam;
use crate::error::{check_dims, Error, Result};
use crate::frame::MultiscopicFrame;
use crate::grid::{DisparityField, Field, UncertaintyField};
use crate::losses::{total_loss, Fields, LossConfig, LossReport, LossWeights, Mode};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineConfig {
    pub iterations: usize,
    pub pyramid_levels: usize,
    /// Disparity step size, pixels per iteration (at the level's resolution).
    pub lr_d: f64,
    pub lr_s: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    /// Upper disparity bound at full resolution.
    pub d_max: f64,
    pub mode: Mode,
    pub weights: LossWeights,
    pub loss_cfg: LossConfig,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self {
            iterations: 300,
            pyramid_levels: 3,
            lr_d: 0.02,
            lr_s: 0.01,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            d_max: 32.0,
            mode: Mode::Multiscopic,
            weights: LossWeights::default(),
            loss_cfg: LossConfig::default(),
        }
    }
}

impl RefineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 || self.pyramid_levels == 0 {
            return Err(Error::invalid("iterations and pyramid_levels must be at least 1"));
        }
        if !(self.lr_d > 0.0 && self.lr_s > 0.0) {
            return Err(Error::invalid("learning rates must be positive"));
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) {
            return Err(Error::invalid("Adam betas must lie in [0, 1)"));
        }
        if !(self.adam_eps > 0.0) {
            return Err(Error::invalid("adam_eps must be positive"));
        }
        if !(self.d_max > 0.0 && self.d_max.is_finite()) {
            return Err(Error::invalid("d_max must be positive"));
        }
        self.weights.validate()?;
        self.loss_cfg.validate()
    }

    /// Weights actually optimized: stereo mode drops mutual supervision.
    pub fn effective_weights(&self) -> LossWeights {
        match self.mode {
            Mode::Stereo => LossWeights {
                lambda3: 0.0,
                ..self.weights
            },
            Mode::Multiscopic => self.weights,
        }
    }
}

/// Scalar terms of one evaluated iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    /// Pyramid level, 0 being full resolution.
    pub level: usize,
    pub iteration: usize,
    pub l_p: f64,
    pub l_sigma: f64,
    pub l_m: f64,
    pub l_s: f64,
    pub total: f64,
}

impl TraceEntry {
    fn from_report(level: usize, iteration: usize, r: &LossReport) -> Self {
        Self {
            level,
            iteration,
            l_p: r.l_p,
            l_sigma: r.l_sigma,
            l_m: r.l_m,
            l_s: r.l_s,
            total: r.total,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefineResult {
    pub d_l: DisparityField,
    pub d_r: DisparityField,
    pub s_l: UncertaintyField,
    pub s_r: UncertaintyField,
    /// Pre-step losses, coarsest level first.
    pub loss_trace: Vec<TraceEntry>,
    /// Number of pyramid levels actually used.
    pub levels: usize,
}

impl RefineResult {
    pub fn fields(&self) -> Fields {
        Fields {
            d_l: self.d_l.clone(),
            d_r: self.d_r.clone(),
            s_l: self.s_l.clone(),
            s_r: self.s_r.clone(),
        }
    }
}

/// Smallest side allowed at the coarsest level.
const MIN_LEVEL_SIDE: usize = 4;

fn pyramid(frame: &MultiscopicFrame, levels: usize) -> Result<Vec<MultiscopicFrame>> {
    let mut out = Vec::with_capacity(levels);
    out.push(MultiscopicFrame::new(
        frame.left.clone(),
        frame.center.clone(),
        frame.right.clone(),
        frame.baseline,
        frame.focal,
    )?);
    while out.len() < levels {
        let prev = out.last().expect("non-empty");
        let (w, h) = prev.dims();
        if w / 2 < MIN_LEVEL_SIDE || h / 2 < MIN_LEVEL_SIDE {
            break;
        }
        let next = MultiscopicFrame::new(
            prev.left.downsample()?,
            prev.center.downsample()?,
            prev.right.downsample()?,
            prev.baseline,
            prev.focal,
        )?;
        out.push(next);
    }
    Ok(out)
}

/// Refines from the given disparities with neutral uncertainty (`s = 0`).
pub fn refine(
    frame: &MultiscopicFrame,
    init_d_l: &DisparityField,
    init_d_r: &DisparityField,
    cfg: &RefineConfig,
) -> Result<RefineResult> {
    let init = Fields::with_neutral_uncertainty(init_d_l.clone(), init_d_r.clone());
    refine_fields(frame, init, cfg)
}

/// Refines from fully specified initial fields.
pub fn refine_fields(frame: &MultiscopicFrame, init: Fields, cfg: &RefineConfig) -> Result<RefineResult> {
    cfg.validate()?;
    let dims = frame.dims();
    check_dims("refine init d_l", dims, init.d_l.dims())?;
    check_dims("refine init d_r", dims, init.d_r.dims())?;
    check_dims("refine init s_l", dims, init.s_l.dims())?;
    check_dims("refine init s_r", dims, init.s_r.dims())?;

    let frames = pyramid(frame, cfg.pyramid_levels)?;
    let levels = frames.len();

    // Initial fields at the coarsest level.
    let mut fields = init;
    for _ in 1..levels {
        fields = Fields {
            d_l: fields.d_l.downsample_disparity()?,
            d_r: fields.d_r.downsample_disparity()?,
            s_l: fields.s_l.downsample_mean()?,
            s_r: fields.s_r.downsample_mean()?,
        };
    }

    let weights = cfg.effective_weights();
    let mut trace = Vec::with_capacity(levels * cfg.iterations);
    for level in (0..levels).rev() {
        let lf = &frames[level];
        if fields.dims() != lf.dims() {
            let (w, h) = lf.dims();
            fields = Fields {
                d_l: fields.d_l.upsample_to(w, h, 2.0),
                d_r: fields.d_r.upsample_to(w, h, 2.0),
                s_l: fields.s_l.upsample_to(w, h, 1.0),
                s_r: fields.s_r.upsample_to(w, h, 1.0),
            };
        }
        let d_max = cfg.d_max / (1u64 << level) as f64;
        fields.d_l.clamp_in_place(0.0, d_max);
        fields.d_r.clamp_in_place(0.0, d_max);

        let n = lf.dims().0 * lf.dims().1;
        let adam = |lr| Adam::new(n, lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
        let (mut opt_dl, mut opt_dr) = (adam(cfg.lr_d), adam(cfg.lr_d));
        let (mut opt_sl, mut opt_sr) = (adam(cfg.lr_s), adam(cfg.lr_s));

        for iteration in 0..cfg.iterations {
            let report = total_loss(lf, &fields, &weights, &cfg.loss_cfg, cfg.mode)?;
            check_finite(&report, level, iteration)?;
            trace.push(TraceEntry::from_report(level, iteration, &report));

            opt_dl.step(fields.d_l.data_mut(), report.grad_d_l.data());
            opt_dr.step(fields.d_r.data_mut(), report.grad_d_r.data());
            opt_sl.step(fields.s_l.data_mut(), report.grad_s_l.data());
            opt_sr.step(fields.s_r.data_mut(), report.grad_s_r.data());
            fields.d_l.clamp_in_place(0.0, d_max);
            fields.d_r.clamp_in_place(0.0, d_max);
        }
    }

    Ok(RefineResult {
        d_l: fields.d_l,
        d_r: fields.d_r,
        s_l: fields.s_l,
        s_r: fields.s_r,
        loss_trace: trace,
        levels,
    })
}

fn check_finite(report: &LossReport, level: usize, iteration: usize) -> Result<()> {
    for (term, value) in report.terms() {
        if !value.is_finite() {
            return Err(Error::NonFinite {
                term,
                level,
                iteration,
            });
        }
    }
    let grads: [(&'static str, &Field); 4] = [
        ("grad_d_l", &report.grad_d_l),
        ("grad_d_r", &report.grad_d_r),
        ("grad_s_l", &report.grad_s_l),
        ("grad_s_r", &report.grad_s_r),
    ];
    for (term, g) in grads {
        if g.data().iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                term,
                level,
                iteration,
            });
        }
    }
    Ok(())
}
