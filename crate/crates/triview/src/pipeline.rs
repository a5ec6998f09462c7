//! One end-to-end run: matcher initialization, refinement, evaluation and
//! the files written for it.
//!
//! Both fields start from the same aggregated cost-volume estimate, whatever
//! the mode, so stereo and multiscopic runs differ only in the objective.
//! The reported metrics are those of `d_r`.

use std::path::Path;

use serde::{Deserialize, Serialize};
use triview_core::matcher::{build_cost_volume, soft_argmin, wta_disparity};
use triview_core::metrics::{evaluate, Evaluation};
use triview_core::refine::{refine, TraceEntry};
use triview_core::{DisparityField, MultiscopicFrame, RefineResult};

use crate::error::{self, Error, Result};
use crate::pfm;
use crate::settings::{ConfigSnapshot, InitMethod, RunSettings};

/// The six standard metrics. `d1_occ` is `None` when nothing is occluded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub epe: f64,
    pub bad05: f64,
    pub bad1: f64,
    pub bad2: f64,
    pub d1_all: f64,
    pub d1_occ: Option<f64>,
}

impl From<Evaluation> for Metrics {
    fn from(e: Evaluation) -> Self {
        Self {
            epe: e.epe,
            bad05: e.bad05,
            bad1: e.bad1,
            bad2: e.bad2,
            d1_all: e.d1_all,
            d1_occ: e.d1_occ,
        }
    }
}

impl Metrics {
    pub fn is_finite(&self) -> bool {
        [self.epe, self.bad05, self.bad1, self.bad2, self.d1_all]
            .into_iter()
            .chain(self.d1_occ)
            .all(f64::is_finite)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub level: usize,
    pub iteration: usize,
    pub l_p: f64,
    pub l_sigma: f64,
    pub l_m: f64,
    pub l_s: f64,
    pub total: f64,
}

impl From<&TraceEntry> for TraceRecord {
    fn from(t: &TraceEntry) -> Self {
        Self {
            level: t.level,
            iteration: t.iteration,
            l_p: t.l_p,
            l_sigma: t.l_sigma,
            l_m: t.l_m,
            l_s: t.l_s,
            total: t.total,
        }
    }
}

/// Contents of `report.json`. Deliberately free of timings so that repeated
/// runs produce identical bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub scene: String,
    pub mode: String,
    /// Which field the metrics describe.
    pub estimate: String,
    pub pyramid_levels: usize,
    /// `None` when the scene has no ground truth.
    pub metrics: Option<Metrics>,
    pub init_metrics: Option<Metrics>,
    pub final_loss: Option<TraceRecord>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub init: DisparityField,
    pub result: RefineResult,
    pub report: Report,
}

/// Initial disparity from the aggregated cost volume.
pub fn initialize(frame: &MultiscopicFrame, settings: &RunSettings) -> Result<DisparityField> {
    let vol = build_cost_volume(frame, settings.d_max, &settings.loss_config())?;
    Ok(match settings.init {
        InitMethod::Wta => wta_disparity(&vol),
        InitMethod::SoftArgmin => soft_argmin(&vol, settings.tau)?,
    })
}

/// Runs the full pipeline on one frame. Evaluation needs ground truth and
/// occlusion masks on the frame; without them the metrics are `None`.
pub fn run_frame(frame: &MultiscopicFrame, settings: &RunSettings, scene: &str) -> Result<RunOutcome> {
    settings.validate()?;
    let init = initialize(frame, settings)?;
    let result = refine(frame, &init, &init, &settings.refine_config())?;
    let eval = |d: &DisparityField| -> Result<Option<Metrics>> {
        match (&frame.gt_disparity, frame.occluded()) {
            (Some(gt), Some(occ)) => Ok(Some(evaluate(d, gt, &occ)?.into())),
            _ => Ok(None),
        }
    };
    let report = Report {
        scene: scene.to_owned(),
        mode: settings.mode.as_str().to_owned(),
        estimate: "d_r".to_owned(),
        pyramid_levels: result.levels,
        metrics: eval(&result.d_r)?,
        init_metrics: eval(&init)?,
        final_loss: result.loss_trace.last().map(TraceRecord::from),
    };
    Ok(RunOutcome {
        init,
        result,
        report,
    })
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    text.push('\n');
    error::write(path, text.as_bytes())
}

/// Writes the fields, trace, report and config snapshot into `out`.
pub fn write_outputs(outcome: &RunOutcome, settings: &RunSettings, out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let r = &outcome.result;
    pfm::save_pfm(&r.d_l, &out.join("d_l.pfm"))?;
    pfm::save_pfm(&r.d_r, &out.join("d_r.pfm"))?;
    pfm::save_pfm(&r.s_l, &out.join("s_l.pfm"))?;
    pfm::save_pfm(&r.s_r, &out.join("s_r.pfm"))?;
    let trace: Vec<TraceRecord> = r.loss_trace.iter().map(TraceRecord::from).collect();
    write_json(&trace, &out.join("trace.json"))?;
    write_json(&outcome.report, &out.join("report.json"))?;
    write_json(&ConfigSnapshot::new(*settings), &out.join("config.json"))
}

/// Per-scene reports plus the mean of each metric over scenes that have it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mode: String,
    pub scenes: Vec<Report>,
    pub mean: Option<Metrics>,
    pub mean_init: Option<Metrics>,
}

impl Summary {
    pub fn new(mode: &str, scenes: Vec<Report>) -> Self {
        let mean = mean_metrics(scenes.iter().filter_map(|r| r.metrics));
        let mean_init = mean_metrics(scenes.iter().filter_map(|r| r.init_metrics));
        Self {
            mode: mode.to_owned(),
            scenes,
            mean,
            mean_init,
        }
    }
}

/// Arithmetic mean per metric; `d1_occ` averages only the scenes that have
/// occluded pixels.
pub fn mean_metrics(items: impl IntoIterator<Item = Metrics>) -> Option<Metrics> {
    let items: Vec<Metrics> = items.into_iter().collect();
    if items.is_empty() {
        return None;
    }
    let mean = |f: fn(&Metrics) -> f64| items.iter().map(f).sum::<f64>() / items.len() as f64;
    let occ: Vec<f64> = items.iter().filter_map(|m| m.d1_occ).collect();
    Some(Metrics {
        epe: mean(|m| m.epe),
        bad05: mean(|m| m.bad05),
        bad1: mean(|m| m.bad1),
        bad2: mean(|m| m.bad2),
        d1_all: mean(|m| m.d1_all),
        d1_occ: (!occ.is_empty()).then(|| occ.iter().sum::<f64>() / occ.len() as f64),
    })
}
