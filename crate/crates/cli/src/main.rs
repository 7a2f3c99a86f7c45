//! `edgesr`: command-line front end for the edge-guided super-resolution
//! pipeline.
//!
//! Exit codes: 0 on success, 1 for usage errors, 2 for data errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use edgesr_core::densify::{densify, DensifyConfig};
use edgesr_core::edges::{canny, CannyParams};
use edgesr_core::eval::eval_metrics;
use edgesr_core::geometry::bin_downsample;
use edgesr_core::hull::{concave_hull_of, DEFAULT_K};
use edgesr_core::io::{self, PixmapEncoding, PlyFormat, PlyScalar};
use edgesr_core::losses::LossWeights;
use edgesr_core::refine::{superres, RefineConfig};
use edgesr_core::synth::{synth_scene, SceneSpec};
use edgesr_core::{PointSet2, SetRole};

#[derive(Parser)]
#[command(name = "edgesr", version, about = "Edge-guided point cloud super-resolution")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Detect Canny edges in a pixmap and write them as `u,v` CSV.
    Edges {
        image: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        canny: CannyArgs,
    },
    /// Project a cloud into the RGB image and write in-frame points as CSV.
    Project {
        cloud: PathBuf,
        #[arg(long)]
        calib: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Concave hull of a `u,v` CSV point set, written as a CSV polygon.
    Hull {
        points: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Neighbors considered at each boundary step.
        #[arg(short, long, default_value_t = DEFAULT_K)]
        k: usize,
    },
    /// Upsample a cloud by nearest-neighbor midpoints.
    Densify {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        densify: DensifyArgs,
        #[arg(long, value_enum, default_value_t = Format::Binary)]
        format: Format,
    },
    /// Voxel-bin and thin a cloud to exactly `target` points.
    Downsample {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(short, long)]
        target: usize,
        #[arg(long, value_enum, default_value_t = Format::Binary)]
        format: Format,
    },
    /// Densify, detect edges and refine the cloud boundary onto them.
    Superres {
        cloud: PathBuf,
        image: PathBuf,
        #[arg(long)]
        calib: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Write per-iteration records as line-delimited JSON.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[command(flatten)]
        densify: DensifyArgs,
        #[command(flatten)]
        refine: RefineArgs,
        #[command(flatten)]
        canny: CannyArgs,
        #[arg(long, value_enum, default_value_t = Format::Binary)]
        format: Format,
    },
    /// Chamfer and Hausdorff distance between two clouds, as JSON.
    Eval {
        pred: PathBuf,
        gt: PathBuf,
        /// Measure in the original units instead of fitting `gt` to the unit cube.
        #[arg(long)]
        raw: bool,
        /// Write the report here instead of standard output.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Render a synthetic scene: ground-truth cloud plus silhouette image.
    Synth {
        scene: PathBuf,
        #[arg(long)]
        calib: PathBuf,
        #[arg(long)]
        cloud: PathBuf,
        #[arg(long)]
        image: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Binary)]
        format: Format,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    /// ASCII, 17 significant digits.
    Ascii,
    /// Binary little-endian, f64.
    Binary,
    /// Binary little-endian, f32.
    BinaryF32,
}

impl From<Format> for PlyFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Ascii => PlyFormat::Ascii,
            Format::Binary => PlyFormat::BinaryLittleEndian(PlyScalar::F64),
            Format::BinaryF32 => PlyFormat::BinaryLittleEndian(PlyScalar::F32),
        }
    }
}

#[derive(Args)]
struct CannyArgs {
    /// Gaussian smoothing sigma (pixels).
    #[arg(long, default_value_t = 1.4)]
    sigma: f64,
    /// Low hysteresis threshold, relative to the largest gradient.
    #[arg(long, default_value_t = 0.1)]
    low: f64,
    /// High hysteresis threshold, relative to the largest gradient.
    #[arg(long, default_value_t = 0.2)]
    high: f64,
}

impl CannyArgs {
    fn params(&self) -> CannyParams {
        CannyParams {
            sigma: self.sigma,
            low: self.low,
            high: self.high,
        }
    }
}

#[derive(Args)]
struct DensifyArgs {
    /// Upsampling rate; the output has `rate` times as many points.
    #[arg(long, default_value_t = 4)]
    rate: usize,
    /// Neighbors whose midpoints are added per point and round.
    #[arg(long, default_value_t = 4)]
    k_interp: usize,
}

impl DensifyArgs {
    fn config(&self) -> DensifyConfig {
        DensifyConfig {
            rate: self.rate,
            k_interp: self.k_interp,
            ..Default::default()
        }
    }
}

#[derive(Args)]
struct RefineArgs {
    /// Chamfer weight.
    #[arg(long, default_value_t = 1e-5)]
    alpha: f64,
    /// Hausdorff weight.
    #[arg(long, default_value_t = 1e-2)]
    beta: f64,
    /// Smoothness weight.
    #[arg(long, default_value_t = 1e-2)]
    gamma: f64,
    #[arg(long, default_value_t = 200)]
    max_iters: usize,
    /// Iterations between hull recomputations.
    #[arg(long, default_value_t = 10)]
    hull_refresh: usize,
    /// Concave hull neighbor count.
    #[arg(long, default_value_t = DEFAULT_K)]
    hull_k: usize,
    /// First trial step, as a fraction of the cloud's half-extent.
    #[arg(long, default_value_t = 0.01)]
    initial_step: f64,
    /// Stop once a hull window improves the loss by less than this fraction.
    #[arg(long, default_value_t = 1e-6)]
    rel_tol: f64,
}

impl RefineArgs {
    fn config(&self) -> Result<RefineConfig> {
        Ok(RefineConfig {
            weights: LossWeights::new(self.alpha, self.beta, self.gamma)?,
            max_iters: self.max_iters,
            hull_refresh_period: self.hull_refresh,
            hull_k: self.hull_k,
            initial_step: self.initial_step,
            rel_tol: self.rel_tol,
            ..Default::default()
        })
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Edges { image, output, canny: c } => {
            let img = io::read_pixmap(&image)?;
            let edges = canny(&img, &c.params())?;
            io::write_csv(edges.points(), &output)?;
        }
        Command::Project { cloud, calib, output } => {
            let rig = io::read_calibration(&calib)?;
            let proj = rig.project_cloud(&io::read_ply(&cloud)?)?;
            io::write_csv(proj.points.points(), &output)?;
        }
        Command::Hull { points, output, k } => {
            let set = PointSet2::new(io::read_csv(&points)?, SetRole::Projection)?;
            let hull = concave_hull_of(&set, k)?;
            io::write_csv(hull.vertices(), &output)?;
        }
        Command::Densify {
            input,
            output,
            densify: d,
            format,
        } => {
            let dense = densify(&io::read_ply(&input)?, &d.config())?;
            io::write_ply(&dense, &output, format.into())?;
        }
        Command::Downsample {
            input,
            output,
            target,
            format,
        } => {
            let out = bin_downsample(&io::read_ply(&input)?, target)?;
            io::write_ply(&out, &output, format.into())?;
        }
        Command::Superres {
            cloud,
            image,
            calib,
            output,
            trace,
            densify: d,
            refine: r,
            canny: c,
            format,
        } => {
            let rig = io::read_calibration(&calib)?;
            let img = io::read_pixmap(&image)?;
            let sparse = io::read_ply(&cloud)?;
            let (dense, tr) = superres(&sparse, &img, &rig, &d.config(), &r.config()?, &c.params())?;
            io::write_ply(&dense, &output, format.into())?;
            if let Some(path) = trace {
                write_text(&path, &tr.to_json_lines())?;
            }
        }
        Command::Eval { pred, gt, raw, output } => {
            let report = eval_metrics(&io::read_ply(&pred)?, &io::read_ply(&gt)?, !raw)?;
            let json = report.to_json() + "\n";
            match output {
                Some(path) => write_text(&path, &json)?,
                None => print!("{json}"),
            }
        }
        Command::Synth {
            scene,
            calib,
            cloud,
            image,
            format,
        } => {
            let text = std::fs::read_to_string(&scene).with_context(|| format!("cannot read {}", scene.display()))?;
            let spec = SceneSpec::from_json(&text)?;
            let rig = io::read_calibration(&calib)?;
            let (gt, img) = synth_scene(&spec, &rig)?;
            io::write_ply(&gt, &cloud, format.into())?;
            io::write_pixmap(&img, &image, PixmapEncoding::Raw, 255)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
