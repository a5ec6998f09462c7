//! Command-line interface: `gen`, `run` and `viz`.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use triview_core::synth::{SceneConfig, TextureKind};

use crate::error::{Error, Result};
use crate::pipeline::{run_frame, write_json, write_outputs, Summary};
use crate::scene_dir::{generate_suite, list_scenes, load_scene};
use crate::settings::{ConfigSnapshot, InitMethod, ModeName, RunSettings};
use crate::{pfm, viz};

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_IO: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "triview", version, about = "Self-supervised disparity for three-view rigs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a suite of synthetic scenes.
    Gen(GenArgs),
    /// Initialize, refine and evaluate one scene (or every scene with --all).
    Run(RunArgs),
    /// Render a PFM field as a Jet-colored PNG.
    Viz(VizArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TextureArg {
    Noise,
    Stripes,
    Checker,
    Mixed,
}

impl From<TextureArg> for TextureKind {
    fn from(t: TextureArg) -> Self {
        match t {
            TextureArg::Noise => TextureKind::Noise,
            TextureArg::Stripes => TextureKind::Stripes,
            TextureArg::Checker => TextureKind::Checker,
            TextureArg::Mixed => TextureKind::Mixed,
        }
    }
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long)]
    pub height: Option<usize>,
    /// Foreground layers per scene.
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long, value_enum)]
    pub texture: Option<TextureArg>,
    /// Baseline between adjacent views, meters.
    #[arg(long)]
    pub baseline: Option<f64>,
    /// Focal length, pixels.
    #[arg(long)]
    pub focal: Option<f64>,
    #[arg(long)]
    pub z_min: Option<f64>,
    #[arg(long)]
    pub z_max: Option<f64>,
    #[arg(long)]
    pub dmax: Option<f64>,
}

impl GenArgs {
    fn scene_config(&self) -> SceneConfig {
        let d = SceneConfig::default();
        SceneConfig {
            width: self.width.unwrap_or(d.width),
            height: self.height.unwrap_or(d.height),
            layers: self.layers.unwrap_or(d.layers),
            texture: self.texture.map_or(d.texture, Into::into),
            baseline: self.baseline.unwrap_or(d.baseline),
            focal: self.focal.unwrap_or(d.focal),
            z_min: self.z_min.unwrap_or(d.z_min),
            z_max: self.z_max.unwrap_or(d.z_max),
            d_max: self.dmax.unwrap_or(d.d_max),
            seed: self.seed,
        }
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Scene directory, or a directory of scenes with --all.
    pub scene: PathBuf,
    /// Process every scene directory under SCENE and write summary.json.
    #[arg(long)]
    pub all: bool,
    /// Output directory [default: <scene>/run_<mode>].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Start from a config.json snapshot; other flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeName>,
    #[arg(long, value_enum)]
    pub init: Option<InitMethod>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub levels: Option<usize>,
    #[arg(long)]
    pub lambda1: Option<f64>,
    #[arg(long)]
    pub lambda2: Option<f64>,
    #[arg(long)]
    pub lambda3: Option<f64>,
    #[arg(long)]
    pub lambda4: Option<f64>,
    #[arg(long)]
    pub dmax: Option<usize>,
    /// Soft-argmin temperature (used with --init soft-argmin).
    #[arg(long)]
    pub tau: Option<f64>,
}

impl RunArgs {
    fn settings(&self) -> Result<RunSettings> {
        let mut s = match &self.config {
            Some(path) => ConfigSnapshot::load(path)?.settings,
            None => RunSettings::default(),
        };
        macro_rules! apply {
            ($($flag:ident => $field:ident),*) => {
                $(if let Some(v) = self.$flag { s.$field = v; })*
            };
        }
        apply!(mode => mode, init => init, iters => iterations, levels => pyramid_levels,
            lambda1 => lambda1, lambda2 => lambda2, lambda3 => lambda3, lambda4 => lambda4,
            dmax => d_max, tau => tau);
        s.validate()?;
        Ok(s)
    }
}

#[derive(Debug, Clone, Copy, Default, ValueEnum)]
pub enum Colormap {
    #[default]
    Jet,
}

#[derive(Debug, Args)]
pub struct VizArgs {
    pub field: PathBuf,
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Colormap::Jet)]
    pub colormap: Colormap,
}

/// Parses the process arguments and runs the command, mapping failures to
/// exit codes: 1 usage, 2 I/O, 3 numerical.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

pub fn exit_code(e: &Error) -> u8 {
    match e {
        _ if e.is_numerical() => EXIT_NUMERICAL,
        Error::Core(triview_core::Error::InvalidArgument(_)) => EXIT_USAGE,
        _ => EXIT_IO,
    }
}

pub fn execute(cmd: &Command) -> Result<()> {
    match cmd {
        Command::Gen(a) => {
            let dirs = generate_suite(&a.out, a.count, a.seed, &a.scene_config())?;
            eprintln!("wrote {} scenes to {}", dirs.len(), a.out.display());
            Ok(())
        }
        Command::Run(a) => {
            let settings = a.settings()?;
            if a.all {
                run_all(&a.scene, a.out.as_deref(), &settings)
            } else {
                let out = a.out.clone().unwrap_or_else(|| default_out(&a.scene, &settings));
                run_one(&a.scene, &out, &settings).map(|_| ())
            }
        }
        Command::Viz(a) => {
            let field = pfm::load_pfm(&a.field)?;
            match a.colormap {
                Colormap::Jet => viz::save_colorized(&field, &a.out),
            }
        }
    }
}

fn default_out(scene: &Path, settings: &RunSettings) -> PathBuf {
    scene.join(format!("run_{}", settings.mode.as_str()))
}

fn scene_name(dir: &Path) -> String {
    dir.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| dir.display().to_string())
}

fn run_one(scene: &Path, out: &Path, settings: &RunSettings) -> Result<crate::pipeline::Report> {
    let loaded = load_scene(scene)?;
    let start = Instant::now();
    let outcome = run_frame(&loaded.frame, settings, &scene_name(scene))?;
    write_outputs(&outcome, settings, out)?;
    match &outcome.report.metrics {
        Some(m) => eprintln!(
            "{}: epe {:.3} bad2 {:.2}% d1_occ {} ({:.1?})",
            outcome.report.scene,
            m.epe,
            m.bad2,
            m.d1_occ.map_or("n/a".into(), |v| format!("{v:.2}%")),
            start.elapsed()
        ),
        None => eprintln!("{}: done, no ground truth ({:.1?})", outcome.report.scene, start.elapsed()),
    }
    Ok(outcome.report)
}

fn run_all(root: &Path, out: Option<&Path>, settings: &RunSettings) -> Result<()> {
    let scenes = list_scenes(root)?;
    if scenes.is_empty() {
        return Err(Error::format(root, "no scene directories (with meta.json) found"));
    }
    let mut reports = Vec::with_capacity(scenes.len());
    for dir in &scenes {
        let target = match out {
            Some(o) => o.join(scene_name(dir)),
            None => default_out(dir, settings),
        };
        reports.push(run_one(dir, &target, settings)?);
    }
    let summary = Summary::new(settings.mode.as_str(), reports);
    let summary_dir = out.map_or_else(|| root.to_path_buf(), Path::to_path_buf);
    std::fs::create_dir_all(&summary_dir).map_err(|e| Error::io(&summary_dir, e))?;
    write_json(
        &summary,
        &summary_dir.join(format!("summary_{}.json", settings.mode.as_str())),
    )
}
