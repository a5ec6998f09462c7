//! On-disk scene layout:
//!
//! ```text
//! scene_<idx>/
//!   left.ppm center.ppm right.ppm   views (PGM for gray scenes)
//!   gt.pfm                          center-view disparity
//!   occ_left.pgm occ_right.pgm      occlusion masks (255 = occluded)
//!   meta.json                       camera and generator parameters
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use triview_core::synth::{generate_scene, suite_configs, Scene, SceneConfig, TextureKind};
use triview_core::{Image, MultiscopicFrame};

use crate::error::{self, Error, Result};
use crate::{pfm, pnm};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneMeta {
    pub width: usize,
    pub height: usize,
    pub baseline_m: f64,
    pub focal_px: f64,
    pub d_max: f64,
    pub views: Vec<String>,
    /// Generator parameters, when the scene was synthesized.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorMeta>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorMeta {
    pub seed: u64,
    pub layers: usize,
    pub z_min: f64,
    pub z_max: f64,
    pub texture: String,
}

pub fn texture_name(kind: TextureKind) -> &'static str {
    match kind {
        TextureKind::Noise => "noise",
        TextureKind::Stripes => "stripes",
        TextureKind::Checker => "checker",
        TextureKind::Mixed => "mixed",
    }
}

fn view_ext(img: &Image) -> &'static str {
    if img.channels() == 1 {
        "pgm"
    } else {
        "ppm"
    }
}

pub fn scene_dir_name(index: usize) -> String {
    format!("scene_{index:03}")
}

/// Writes a generated scene into `dir` (created if missing).
pub fn save_scene(scene: &Scene, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let f = &scene.frame;
    let cfg = &scene.config;
    for (name, img) in [("left", &f.left), ("center", &f.center), ("right", &f.right)] {
        pnm::save_pnm(img, &dir.join(format!("{name}.{}", view_ext(img))))?;
    }
    if let Some(gt) = &f.gt_disparity {
        pfm::save_pfm(gt, &dir.join("gt.pfm"))?;
    }
    if let (Some(l), Some(r)) = (&f.occlusion_left, &f.occlusion_right) {
        pnm::save_mask(l, &dir.join("occ_left.pgm"))?;
        pnm::save_mask(r, &dir.join("occ_right.pgm"))?;
    }
    let meta = SceneMeta {
        width: cfg.width,
        height: cfg.height,
        baseline_m: cfg.baseline,
        focal_px: cfg.focal,
        d_max: cfg.d_max,
        views: ["left", "center", "right"].map(String::from).to_vec(),
        generator: Some(GeneratorMeta {
            seed: cfg.seed,
            layers: cfg.layers,
            z_min: cfg.z_min,
            z_max: cfg.z_max,
            texture: texture_name(cfg.texture).to_owned(),
        }),
    };
    let path = dir.join("meta.json");
    let json = serde_json::to_string_pretty(&meta).map_err(|e| Error::Json { path: path.clone(), source: e })?;
    error::write(&path, json.as_bytes())
}

/// A scene read back from disk.
#[derive(Debug, Clone)]
pub struct LoadedScene {
    pub frame: MultiscopicFrame,
    pub meta: SceneMeta,
}

fn find_view(dir: &Path, name: &str) -> Result<PathBuf> {
    ["ppm", "pgm", "png"]
        .iter()
        .map(|ext| dir.join(format!("{name}.{ext}")))
        .find(|p| p.is_file())
        .ok_or_else(|| {
            let path = dir.join(format!("{name}.ppm"));
            Error::io(&path, std::io::Error::new(std::io::ErrorKind::NotFound, format!("no {name} view found")))
        })
}

/// Loads a scene directory. Ground truth and occlusion masks are optional;
/// both masks must be present to be used.
pub fn load_scene(dir: &Path) -> Result<LoadedScene> {
    let meta_path = dir.join("meta.json");
    let meta: SceneMeta = serde_json::from_slice(&error::read(&meta_path)?)
        .map_err(|e| Error::Json { path: meta_path.clone(), source: e })?;
    let [left, center, right] = ["left", "center", "right"].map(|v| find_view(dir, v));
    let mut frame = MultiscopicFrame::new(
        crate::load_image(&left?)?,
        crate::load_image(&center?)?,
        crate::load_image(&right?)?,
        meta.baseline_m,
        meta.focal_px,
    )?;
    let gt_path = dir.join("gt.pfm");
    let (occ_l, occ_r) = (dir.join("occ_left.pgm"), dir.join("occ_right.pgm"));
    if gt_path.is_file() && occ_l.is_file() && occ_r.is_file() {
        frame = frame.with_ground_truth(pfm::load_pfm(&gt_path)?, pnm::load_mask(&occ_l)?, pnm::load_mask(&occ_r)?)?;
    } else if gt_path.is_file() {
        let gt = pfm::load_pfm(&gt_path)?;
        let (w, h) = gt.dims();
        let none = triview_core::Mask::filled(w, h, false);
        frame = frame.with_ground_truth(gt, none.clone(), none)?;
    }
    Ok(LoadedScene { frame, meta })
}

/// Generates `n` scenes from `template` with seeds `base_seed..base_seed + n`
/// into `out/scene_000`, `out/scene_001`, ...
pub fn generate_suite(out: &Path, n: usize, base_seed: u64, template: &SceneConfig) -> Result<Vec<PathBuf>> {
    let configs = suite_configs(template, n, base_seed)?;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut dirs = Vec::with_capacity(n);
    for (i, cfg) in configs.iter().enumerate() {
        let dir = out.join(scene_dir_name(i));
        save_scene(&generate_scene(cfg)?, &dir)?;
        dirs.push(dir);
    }
    Ok(dirs)
}

/// Scene directories directly under `root`, sorted by name.
pub fn list_scenes(root: &Path) -> Result<Vec<PathBuf>> {
    let mut dirs: Vec<PathBuf> = fs::read_dir(root)
        .map_err(|e| Error::io(root, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.join("meta.json").is_file())
        .collect();
    dirs.sort();
    Ok(dirs)
}
