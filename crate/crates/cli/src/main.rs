//! Command-line frontend: visibility analysis, transition optimization,
//! aliasing scores, CFF tables, calibration fits, and stimulus synthesis.

mod commands;
mod common;
mod frames;
mod heatmap;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tempvis::dct::PatchDims;
use tempvis::stimulus::GratingSpec;

use common::{load_gaze_trace, load_geometry, load_params, parse_list, parse_point, usage, CliResult, Ctx, GazeSpec};

#[derive(Parser)]
#[command(
    name = "tempvis",
    version,
    about = "Visibility of temporal changes across the visual field",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    global: GlobalArgs,
}

#[derive(Args)]
struct GlobalArgs {
    /// Display geometry JSON (width_px, height_px, width_mm, height_mm,
    /// distance_mm, peak_cdm2, black_cdm2, fps).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Model parameter overrides, JSON.
    #[arg(long, global = true)]
    params: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Worker threads (default: all cores). Never changes numeric output.
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Seed for fits and cross-validation partitions.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Fixed gaze point "x,y" in pixels (default: screen center).
    #[arg(long, global = true)]
    gaze: Option<String>,

    /// Gaze trace CSV (frame,x_px,y_px); overrides --gaze.
    #[arg(long, global = true)]
    gaze_trace: Option<PathBuf>,

    /// Treat stored frames as display-linear instead of sRGB-encoded.
    #[arg(long, global = true)]
    linear_input: bool,

    /// Analysis window size TxHxV.
    #[arg(long, global = true, default_value = "25x71x71")]
    patch: String,
}

#[derive(Subcommand)]
enum Command {
    /// Per-patch visibility map (CSV) and optional heatmap overlays.
    Analyze {
        /// Directory of numbered PNG frames.
        #[arg(long)]
        input: PathBuf,
        /// Also write one heatmap PNG per time window.
        #[arg(long)]
        heatmaps: bool,
    },
    /// Imperceptible transitions between an image pair.
    Transition {
        #[command(subcommand)]
        cmd: TransitionCmd,
    },
    /// Temporal-aliasing evaluation.
    Aliasing {
        #[command(subcommand)]
        cmd: AliasingCmd,
    },
    /// Critical flicker frequency table.
    Cff {
        /// Eccentricities in degrees, comma-separated.
        #[arg(long, default_value = "0,10,25,40")]
        ecc: String,
        /// Spatial frequencies in cpd, comma-separated.
        #[arg(long, default_value = "0,0.5,1,2,4,8")]
        freq: String,
        /// Probing contrast.
        #[arg(long, default_value_t = 0.5)]
        cmax: f64,
    },
    /// Calibration fits.
    Fit {
        #[command(subcommand)]
        cmd: FitCmd,
    },
    /// Render a grating stimulus as PNG frames plus a JSON sidecar.
    Stimulus {
        #[arg(long, default_value_t = 10.0)]
        ft: f64,
        #[arg(long, default_value_t = 0.0)]
        fh: f64,
        #[arg(long, default_value_t = 0.0)]
        fv: f64,
        #[arg(long, default_value_t = 0.2)]
        contrast: f64,
        /// Background display-linear value.
        #[arg(long, default_value_t = 0.5)]
        background: f64,
        /// Window diameter, degrees.
        #[arg(long, default_value_t = 2.0)]
        window_deg: f64,
        /// Gaussian falloff sigma beyond the window radius, degrees.
        #[arg(long, default_value_t = 0.1)]
        sigma_deg: f64,
        #[arg(long, default_value_t = 16)]
        bit_depth: u8,
    },
}

#[derive(Subcommand)]
enum TransitionCmd {
    /// Precompute alpha schedules holding detection probability at targets.
    Solve {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        target: PathBuf,
        /// Target detection probabilities, comma-separated.
        #[arg(long, default_value = "0.5")]
        pd: String,
        /// Schedule eccentricities in degrees.
        #[arg(long, default_value = "0,10,20,30")]
        ecc: String,
    },
    /// Replay a schedule against a fixed or traced gaze, writing frames.
    Render {
        #[arg(long)]
        schedule: PathBuf,
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        target: PathBuf,
        /// Top-left screen position "x,y" of the image pair (default:
        /// centered).
        #[arg(long)]
        region: Option<String>,
        #[arg(long, default_value_t = 8)]
        bit_depth: u8,
    },
}

#[derive(Subcommand)]
enum AliasingCmd {
    /// Pooled flicker score of a sequence, optionally motion-compensated.
    Score {
        #[arg(long)]
        input: PathBuf,
        /// Directory of .flo files or a JSON manifest; enables motion
        /// compensation.
        #[arg(long)]
        flows: Option<PathBuf>,
        /// Minkowski exponent for global pooling.
        #[arg(long, default_value_t = tempvis::aliasing::DEFAULT_POOL_BETA)]
        beta: f64,
    },
}

#[derive(Subcommand)]
enum FitCmd {
    /// Polynomial fit of a temporal sensitivity curve (CSV: f_t_hz,sensitivity).
    Delange {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 3)]
        degree: usize,
    },
    /// Shape-parameter fit to thresholds (CSV: f_h_cpd,f_v_cpd,f_t_hz,ecc_deg,threshold).
    Shape {
        #[arg(long)]
        thresholds: PathBuf,
        /// Pooling exponent held fixed during the fit.
        #[arg(long, default_value_t = 1.7)]
        pool_r: f64,
        /// Drop saturated thresholds instead of fitting through them.
        #[arg(long)]
        exclude_saturated: bool,
        #[arg(long, default_value_t = 12)]
        restarts: usize,
    },
    /// Psychometric MLE from detection counts (CSV: id,c_jnd,trials,correct)
    /// plus per-stimulus coefficient spectra (JSON).
    Psychometric {
        #[arg(long)]
        detections: PathBuf,
        #[arg(long)]
        spectra: PathBuf,
    },
    /// Seeded k-fold cross-validation of the shape fit.
    Cv {
        #[arg(long)]
        thresholds: PathBuf,
        #[arg(long, default_value_t = 5)]
        folds: usize,
        #[arg(long, default_value_t = 1.7)]
        pool_r: f64,
    },
}

fn build_ctx(global: &GlobalArgs) -> CliResult<Ctx> {
    let geometry = match &global.config {
        Some(path) => Some(load_geometry(path)?),
        None => None,
    };
    let params = load_params(global.params.as_deref())?;
    let patch = PatchDims::parse(&global.patch).map_err(|e| usage(anyhow::anyhow!("{e}")))?;
    let gaze = if let Some(path) = &global.gaze_trace {
        GazeSpec::Trace(load_gaze_trace(path)?)
    } else if let Some(s) = &global.gaze {
        GazeSpec::Fixed(parse_point(s)?)
    } else {
        GazeSpec::Center
    };
    let workers = match global.workers {
        Some(0) => return Err(usage(anyhow::anyhow!("--workers must be at least 1"))),
        Some(n) => n,
        None => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
    };
    Ok(Ctx {
        geometry,
        params,
        out: global.out.clone(),
        seed: global.seed,
        patch,
        linear_input: global.linear_input,
        gaze,
        workers,
    })
}

fn dispatch(cli: &Cli, ctx: &Ctx) -> CliResult<()> {
    match &cli.command {
        Command::Analyze { input, heatmaps } => commands::analyze::run(ctx, input, *heatmaps),
        Command::Transition { cmd } => match cmd {
            TransitionCmd::Solve { source, target, pd, ecc } => {
                let targets = parse_list(pd)?;
                let eccs = parse_list(ecc)?;
                commands::transition::solve(ctx, source, target, &targets, &eccs)
            }
            TransitionCmd::Render { schedule, source, target, region, bit_depth } => {
                let region = region.as_deref().map(parse_point).transpose()?;
                commands::transition::render(ctx, schedule, source, target, region, *bit_depth)
            }
        },
        Command::Aliasing { cmd } => match cmd {
            AliasingCmd::Score { input, flows, beta } => {
                commands::aliasing::run(ctx, input, flows.as_deref(), *beta)
            }
        },
        Command::Cff { ecc, freq, cmax } => {
            let eccs = parse_list(ecc)?;
            let freqs = parse_list(freq)?;
            commands::cff::run(ctx, &eccs, &freqs, *cmax)
        }
        Command::Fit { cmd } => match cmd {
            FitCmd::Delange { data, degree } => commands::fit::delange(ctx, data, *degree),
            FitCmd::Shape { thresholds, pool_r, exclude_saturated, restarts } => {
                commands::fit::shape(ctx, thresholds, *pool_r, *exclude_saturated, *restarts)
            }
            FitCmd::Psychometric { detections, spectra } => {
                commands::fit::psychometric(ctx, detections, spectra)
            }
            FitCmd::Cv { thresholds, folds, pool_r } => {
                commands::fit::cv(ctx, thresholds, *folds, *pool_r)
            }
        },
        Command::Stimulus {
            ft,
            fh,
            fv,
            contrast,
            background,
            window_deg,
            sigma_deg,
            bit_depth,
        } => {
            let spec = GratingSpec {
                f_t: *ft,
                f_h: *fh,
                f_v: *fv,
                contrast: *contrast,
                background: *background,
                window_diameter_deg: *window_deg,
                falloff_sigma_deg: *sigma_deg,
                n_frames: ctx.patch.nt,
                size_px: ctx.patch.nh,
                ..Default::default()
            };
            commands::stimulus::run(ctx, &spec, *bit_depth)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let ctx = match build_ctx(&cli.global) {
        Ok(ctx) => ctx,
        Err(e) => {
            eprintln!("error: {:#}", e.message());
            return e.exit_code();
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(ctx.workers).build() {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("error: cannot build worker pool: {e}");
            return ExitCode::from(1);
        }
    };
    match pool.install(|| dispatch(&cli, &ctx)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {:#}", e.message());
            e.exit_code()
        }
    }
}
