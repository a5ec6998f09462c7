//! Procedural multiscopic scenes with exact ground truth.
//!
//! A scene is a stack of fronto-parallel textured rectangles in front of a
//! textured background plane. Each view is ray-cast per pixel: in the view of
//! a camera displaced by `s * baseline` (`s = -1` left, `0` center, `+1`
//! right), column `x` sees a layer of disparity `d` at center column
//! `x + s * d`. The nearest layer covering that point wins. Textures are
//! smooth continuous functions of the center-view coordinates of their layer,
//! so every view samples the same surface.

use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::frame::MultiscopicFrame;
use crate::grid::{DisparityField, Field, Image, Mask};
use crate::warp::Side;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum TextureKind {
    /// Two octaves of smooth value noise.
    Noise,
    /// Oriented sinusoidal stripes with a noise-warped phase.
    Stripes,
    /// Random-intensity tiles with smoothed transitions.
    Checker,
    /// A random kind per layer.
    #[default]
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneConfig {
    pub width: usize,
    pub height: usize,
    /// Distance between adjacent cameras, meters.
    pub baseline: f64,
    /// Focal length, pixels.
    pub focal: f64,
    /// Depth range of the layers, meters.
    pub z_min: f64,
    pub z_max: f64,
    /// Number of foreground rectangles in front of the background.
    pub layers: usize,
    pub texture: TextureKind,
    pub seed: u64,
    /// Disparity bound every generated scene must respect.
    pub d_max: f64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            width: 256,
            height: 192,
            baseline: 0.1,
            focal: 200.0,
            z_min: 0.9,
            z_max: 5.0,
            layers: 4,
            texture: TextureKind::Mixed,
            seed: 0,
            d_max: 32.0,
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        if self.width < 8 || self.height < 8 {
            return Err(Error::invalid("scenes must be at least 8x8 pixels"));
        }
        if !(self.baseline > 0.0 && self.focal > 0.0 && self.d_max > 0.0) {
            return Err(Error::invalid("baseline, focal and d_max must be positive"));
        }
        if !(self.z_min > 0.0 && self.z_max > self.z_min) {
            return Err(Error::invalid(format!(
                "depth range must satisfy 0 < z_min < z_max, got [{}, {}]",
                self.z_min, self.z_max
            )));
        }
        if self.layers > 0 && !(self.z_min < FOREGROUND_DEPTH_LIMIT * self.z_max) {
            return Err(Error::invalid(format!(
                "foreground layers need z_min < {FOREGROUND_DEPTH_LIMIT} * z_max, got z_min {} and z_max {}",
                self.z_min, self.z_max
            )));
        }
        let bound = self.focal * self.baseline / self.d_max;
        if !(self.z_min > bound) {
            return Err(Error::invalid(format!(
                "z_min {} must exceed focal * baseline / d_max = {bound} to keep disparities within d_max",
                self.z_min
            )));
        }
        Ok(())
    }

    pub fn disparity_of(&self, depth: f64) -> f64 {
        self.focal * self.baseline / depth
    }
}

/// Foreground layers stay in front of this fraction of the background depth,
/// so every layer edge is a real depth discontinuity.
const FOREGROUND_DEPTH_LIMIT: f64 = 0.9;

/// Deterministic hash of a lattice point to `[0, 1)`.
fn lattice(seed: u64, ix: i64, iy: i64) -> f64 {
    let mut z = seed
        ^ (ix as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (iy as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    // splitmix64 finalizer
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    (z >> 11) as f64 / (1u64 << 53) as f64
}

#[inline]
fn fade(t: f64) -> f64 {
    t * t * t * (t * (t * 6.0 - 15.0) + 10.0)
}

/// Value noise with quintic interpolation; `cell` is the lattice spacing.
fn value_noise(seed: u64, x: f64, y: f64, cell: f64, sharpen: bool) -> f64 {
    let (gx, gy) = (x / cell, y / cell);
    let (fx, fy) = (libm::floor(gx), libm::floor(gy));
    let (ix, iy) = (fx as i64, fy as i64);
    let (mut tx, mut ty) = (fade(gx - fx), fade(gy - fy));
    if sharpen {
        tx = fade(tx);
        ty = fade(ty);
    }
    let a = lattice(seed, ix, iy);
    let b = lattice(seed, ix + 1, iy);
    let c = lattice(seed, ix, iy + 1);
    let d = lattice(seed, ix + 1, iy + 1);
    let top = a + tx * (b - a);
    let bottom = c + tx * (d - c);
    top + ty * (bottom - top)
}

#[derive(Debug, Clone, PartialEq)]
enum Pattern {
    Noise { coarse: f64, fine: f64 },
    Stripes { kx: f64, ky: f64, phase: f64, cell: f64 },
    Checker { tile: f64, fine: f64 },
}

#[derive(Debug, Clone, PartialEq)]
struct Texture {
    pattern: Pattern,
    seed: u64,
    base: [f64; 3],
    contrast: f64,
}

impl Texture {
    fn random(rng: &mut ChaCha8Rng, kind: TextureKind) -> Self {
        let kind = match kind {
            TextureKind::Mixed => match rng.random_range(0..3u8) {
                0 => TextureKind::Noise,
                1 => TextureKind::Stripes,
                _ => TextureKind::Checker,
            },
            k => k,
        };
        let pattern = match kind {
            TextureKind::Noise | TextureKind::Mixed => Pattern::Noise {
                coarse: rng.random_range(7.0..10.0),
                fine: rng.random_range(3.5..4.5),
            },
            TextureKind::Stripes => {
                let period: f64 = rng.random_range(7.0..13.0);
                let theta: f64 = rng.random_range(-1.0..1.0);
                let k = 2.0 * core::f64::consts::PI / period;
                Pattern::Stripes {
                    kx: k * libm::cos(theta),
                    ky: k * libm::sin(theta),
                    phase: rng.random_range(0.0..6.3),
                    cell: rng.random_range(8.0..12.0),
                }
            }
            TextureKind::Checker => Pattern::Checker {
                tile: rng.random_range(6.0..9.0),
                fine: rng.random_range(4.0..5.0),
            },
        };
        Self {
            pattern,
            seed: rng.random(),
            base: [
                rng.random_range(0.3..0.7),
                rng.random_range(0.3..0.7),
                rng.random_range(0.3..0.7),
            ],
            contrast: rng.random_range(0.5..0.7),
        }
    }

    /// Pattern intensity in roughly `[0, 1]`, channel `c` decorrelated slightly.
    fn pattern(&self, x: f64, y: f64, seed: u64) -> f64 {
        match self.pattern {
            Pattern::Noise { coarse, fine } => {
                0.65 * value_noise(seed, x, y, coarse, false)
                    + 0.35 * value_noise(seed ^ 0xA5A5, x, y, fine, false)
            }
            Pattern::Stripes {
                kx,
                ky,
                phase,
                cell,
            } => {
                // Noise-warped phase keeps the stripes from repeating exactly
                // along a row, which would make horizontal matching ambiguous.
                let warp = 5.0 * value_noise(seed ^ 0x3C3C, x, y, 2.0 * cell, false);
                let s = 0.5 + 0.5 * libm::sin(kx * x + ky * y + phase + warp);
                0.55 * s + 0.45 * value_noise(seed, x, y, cell, false)
            }
            Pattern::Checker { tile, fine } => {
                0.75 * value_noise(seed, x, y, tile, true)
                    + 0.25 * value_noise(seed ^ 0x5A5A, x, y, fine, false)
            }
        }
    }

    fn eval(&self, x: f64, y: f64, c: usize) -> f64 {
        let shared = self.pattern(x, y, self.seed);
        let own = self.pattern(x, y, self.seed.wrapping_add(1 + c as u64));
        let t = 0.8 * shared + 0.2 * own;
        (self.base[c] + self.contrast * (t - 0.5)).clamp(0.0, 1.0)
    }
}

/// One fronto-parallel plane; the background covers the whole view.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub depth: f64,
    /// Extent in center-view coordinates, `[x0, x1) x [y0, y1)`; `None` for
    /// the background.
    pub rect: Option<[f64; 4]>,
    texture: Texture,
}

impl Layer {
    fn contains(&self, x: f64, y: f64) -> bool {
        match self.rect {
            None => true,
            Some([x0, x1, y0, y1]) => x >= x0 && x < x1 && y >= y0 && y < y1,
        }
    }
}

/// A generated scene: layers sorted near to far, and the rendered frame with
/// ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub config: SceneConfig,
    pub layers: Vec<Layer>,
    pub frame: MultiscopicFrame,
}

impl Scene {
    /// Offset factor `s` of a view: the camera sits at `s * baseline`.
    fn view_offset(side: Option<Side>) -> f64 {
        match side {
            None => 0.0,
            Some(Side::Left) => -1.0,
            Some(Side::Right) => 1.0,
        }
    }

    /// Index of the layer visible at column `x`, row `y` of a view.
    fn hit(config: &SceneConfig, layers: &[Layer], side: Option<Side>, x: f64, y: f64) -> usize {
        let s = Self::view_offset(side);
        layers
            .iter()
            .position(|l| l.contains(x + s * config.disparity_of(l.depth), y))
            .expect("background covers every ray")
    }

    fn render(config: &SceneConfig, layers: &[Layer], side: Option<Side>) -> Result<Image> {
        let s = Self::view_offset(side);
        Image::from_fn(config.width, config.height, 3, |u, v, c| {
            let (x, y) = (u as f64, v as f64);
            let l = &layers[Self::hit(config, layers, side, x, y)];
            l.texture.eval(x + s * config.disparity_of(l.depth), y, c)
        })
    }

    /// Center-view depth per pixel.
    pub fn depth(&self) -> Field {
        let (cfg, layers) = (&self.config, &self.layers);
        Field::from_fn(cfg.width, cfg.height, |u, v| {
            layers[Self::hit(cfg, layers, None, u as f64, v as f64)].depth
        })
    }

    /// Disparity of each center pixel measured through one side view's
    /// z-buffer: `focal * baseline / Z` of the surface the side camera sees at
    /// the corresponding location. `None` where that location is out of view
    /// or shows a different surface.
    pub fn pair_disparity(&self, side: Side) -> Vec<Option<f64>> {
        let (cfg, layers) = (&self.config, &self.layers);
        let mut out = Vec::with_capacity(cfg.width * cfg.height);
        for v in 0..cfg.height {
            for u in 0..cfg.width {
                let y = v as f64;
                let k = Self::hit(cfg, layers, None, u as f64, y);
                let x = u as f64 + side.direction() * cfg.disparity_of(layers[k].depth);
                if x < 0.0 || x > (cfg.width - 1) as f64 {
                    out.push(None);
                    continue;
                }
                let j = Self::hit(cfg, layers, Some(side), x, y);
                out.push((j == k).then(|| cfg.disparity_of(layers[j].depth)));
            }
        }
        out
    }
}

/// Center pixels whose side-view sample lands on a nearer surface. Samples
/// that leave the side image are not occlusions: nothing covers them.
fn occlusion(scene_cfg: &SceneConfig, layers: &[Layer], side: Side) -> Mask {
    Mask::from_fn(scene_cfg.width, scene_cfg.height, |u, v| {
        let y = v as f64;
        let k = Scene::hit(scene_cfg, layers, None, u as f64, y);
        let x = u as f64 + side.direction() * scene_cfg.disparity_of(layers[k].depth);
        if x < 0.0 || x > (scene_cfg.width - 1) as f64 {
            return false;
        }
        Scene::hit(scene_cfg, layers, Some(side), x, y) != k
    })
}

/// Generates one scene. Identical configs give bit-identical scenes.
pub fn generate_scene(cfg: &SceneConfig) -> Result<Scene> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (w, h) = (cfg.width as f64, cfg.height as f64);

    let bg_depth = cfg.z_max;
    let background = Layer {
        depth: bg_depth,
        rect: None,
        texture: Texture::random(&mut rng, cfg.texture),
    };
    let mut layers = Vec::with_capacity(cfg.layers + 1);
    for _ in 0..cfg.layers {
        let depth = rng.random_range(cfg.z_min..FOREGROUND_DEPTH_LIMIT * bg_depth);
        let rw = rng.random_range(w / 6.0..w / 2.5);
        let rh = rng.random_range(h / 6.0..h / 2.5);
        let x0 = rng.random_range(-0.2 * rw..w - 0.8 * rw);
        let y0 = rng.random_range(-0.2 * rh..h - 0.8 * rh);
        layers.push(Layer {
            depth,
            rect: Some([x0, x0 + rw, y0, y0 + rh]),
            texture: Texture::random(&mut rng, cfg.texture),
        });
    }
    layers.sort_by(|a, b| a.depth.total_cmp(&b.depth));
    layers.push(background);

    let left = Scene::render(cfg, &layers, Some(Side::Left))?;
    let center = Scene::render(cfg, &layers, None)?;
    let right = Scene::render(cfg, &layers, Some(Side::Right))?;
    let gt: DisparityField = Field::from_fn(cfg.width, cfg.height, |u, v| {
        let k = Scene::hit(cfg, &layers, None, u as f64, v as f64);
        cfg.disparity_of(layers[k].depth)
    });
    let occ_left = occlusion(cfg, &layers, Side::Left);
    let occ_right = occlusion(cfg, &layers, Side::Right);
    let frame = MultiscopicFrame::new(left, center, right, cfg.baseline, cfg.focal)?
        .with_ground_truth(gt, occ_left, occ_right)?;
    Ok(Scene {
        config: *cfg,
        layers,
        frame,
    })
}

/// Configs for a suite of `n` scenes: the template with seeds
/// `base_seed, base_seed + 1, ...`.
pub fn suite_configs(template: &SceneConfig, n: usize, base_seed: u64) -> Result<Vec<SceneConfig>> {
    if n == 0 {
        return Err(Error::invalid("a scene suite needs at least one scene"));
    }
    template.validate()?;
    Ok((0..n as u64)
        .map(|i| SceneConfig {
            seed: base_seed.wrapping_add(i),
            ..*template
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(seed: u64) -> SceneConfig {
        SceneConfig {
            width: 64,
            height: 48,
            seed,
            ..SceneConfig::default()
        }
    }

    #[test]
    fn rejects_depth_beyond_disparity_bound() {
        let cfg = SceneConfig {
            z_min: 0.5,
            ..SceneConfig::default()
        };
        // focal * baseline / d_max = 0.625
        assert!(matches!(generate_scene(&cfg), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn rejects_empty_foreground_depth_range() {
        let cfg = SceneConfig {
            z_min: 4.6,
            ..SceneConfig::default()
        };
        assert!(matches!(generate_scene(&cfg), Err(Error::InvalidArgument(_))));
        assert!(generate_scene(&SceneConfig { layers: 0, ..cfg }).is_ok());
    }

    #[test]
    fn single_plane_has_constant_disparity_and_no_occlusion() {
        let mut cfg = small(3);
        cfg.layers = 0;
        cfg.z_max = cfg.focal * cfg.baseline / 4.0;
        cfg.z_min = 0.5 * cfg.z_max;
        let scene = generate_scene(&cfg).unwrap();
        let frame = &scene.frame;
        assert!(frame.gt_disparity.as_ref().unwrap().data().iter().all(|&d| d == 4.0));
        assert!(frame.occlusion_left.as_ref().unwrap().is_empty());
        assert!(frame.occlusion_right.as_ref().unwrap().is_empty());
    }

    #[test]
    fn deterministic() {
        let a = generate_scene(&small(11)).unwrap();
        let b = generate_scene(&small(11)).unwrap();
        assert_eq!(a, b);
        let c = generate_scene(&small(12)).unwrap();
        assert_ne!(a.frame.center, c.frame.center);
    }

    #[test]
    fn disparities_within_bound() {
        for seed in 0..5 {
            let s = generate_scene(&small(seed)).unwrap();
            let (lo, hi) = s.frame.gt_disparity.as_ref().unwrap().min_max();
            assert!(lo > 0.0 && hi <= s.config.d_max);
        }
    }

    #[test]
    fn suite_configs_errors_and_seeds() {
        assert!(suite_configs(&SceneConfig::default(), 0, 1).is_err());
        let c = suite_configs(&SceneConfig::default(), 3, 7).unwrap();
        assert_eq!(c.iter().map(|c| c.seed).collect::<Vec<_>>(), [7, 8, 9]);
    }
}
