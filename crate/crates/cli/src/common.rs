//! Shared command context: config loading, gaze handling, worker pool, and
//! provenance reports.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use serde::Serialize;
use tempvis::dct::PatchDims;
use tempvis::{DisplayGeometry, GazePoint, Params64};

/// Command failure split by exit code: usage and input validation problems
/// exit with 2, runtime failures with 1.
#[derive(Debug)]
pub enum CliError {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) => ExitCode::from(2),
            CliError::Runtime(_) => ExitCode::from(1),
        }
    }

    pub fn message(&self) -> &anyhow::Error {
        match self {
            CliError::Usage(e) | CliError::Runtime(e) => e,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn usage(err: impl Into<anyhow::Error>) -> CliError {
    CliError::Usage(err.into())
}

pub fn runtime(err: impl Into<anyhow::Error>) -> CliError {
    CliError::Runtime(err.into())
}

/// Where the gaze comes from for time-varying analysis.
#[derive(Debug, Clone)]
pub enum GazeSpec {
    /// Screen center.
    Center,
    Fixed(GazePoint),
    /// `(frame, point)` pairs, ascending by frame.
    Trace(Vec<(usize, GazePoint)>),
}

impl GazeSpec {
    /// Gaze for each analysis window; a trace is sampled at the first frame
    /// of every window (most recent point at or before it).
    pub fn per_window(&self, geom: &DisplayGeometry, windows: usize, window_frames: usize) -> Vec<GazePoint> {
        let center =
            GazePoint::new(f64::from(geom.width_px) / 2.0, f64::from(geom.height_px) / 2.0);
        match self {
            GazeSpec::Center => vec![center; windows],
            GazeSpec::Fixed(g) => vec![*g; windows],
            GazeSpec::Trace(points) => (0..windows)
                .map(|w| {
                    let frame = w * window_frames;
                    points
                        .iter()
                        .take_while(|(f, _)| *f <= frame)
                        .last()
                        .map(|(_, g)| *g)
                        .unwrap_or_else(|| points.first().map(|(_, g)| *g).unwrap_or(center))
                })
                .collect(),
        }
    }
}

/// Resolved global options shared by every subcommand.
pub struct Ctx {
    pub geometry: Option<DisplayGeometry>,
    pub params: Params64,
    pub out: PathBuf,
    pub seed: u64,
    pub patch: PatchDims,
    pub linear_input: bool,
    pub gaze: GazeSpec,
    pub workers: usize,
}

impl Ctx {
    pub fn geometry(&self) -> CliResult<&DisplayGeometry> {
        self.geometry
            .as_ref()
            .ok_or_else(|| usage(anyhow::anyhow!("this command needs --config with display geometry")))
    }

    pub fn ensure_out_dir(&self) -> CliResult<()> {
        std::fs::create_dir_all(&self.out)
            .map_err(|e| runtime(anyhow::anyhow!("cannot create output dir {}: {e}", self.out.display())))
    }

    /// Fixed gaze point, defaulting to the screen center; traces are not
    /// accepted where a single point is required.
    pub fn fixed_gaze(&self, geom: &DisplayGeometry) -> CliResult<GazePoint> {
        match &self.gaze {
            GazeSpec::Center => Ok(GazePoint::new(
                f64::from(geom.width_px) / 2.0,
                f64::from(geom.height_px) / 2.0,
            )),
            GazeSpec::Fixed(g) => Ok(*g),
            GazeSpec::Trace(_) => {
                Err(usage(anyhow::anyhow!("this command expects --gaze, not --gaze-trace")))
            }
        }
    }
}

pub fn load_geometry(path: &Path) -> CliResult<DisplayGeometry> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(anyhow::anyhow!("cannot read geometry config {}: {e}", path.display())))?;
    DisplayGeometry::from_json(&text)
        .map_err(|e| usage(anyhow::anyhow!("invalid geometry config {}: {e}", path.display())))
}

pub fn load_params(path: Option<&Path>) -> CliResult<Params64> {
    match path {
        None => Ok(Params64::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| usage(anyhow::anyhow!("cannot read params {}: {e}", p.display())))?;
            Params64::from_json(&text)
                .map_err(|e| usage(anyhow::anyhow!("invalid params {}: {e}", p.display())))
        }
    }
}

/// Parse `x,y`.
pub fn parse_point(s: &str) -> CliResult<GazePoint> {
    let parts: Vec<_> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(usage(anyhow::anyhow!("expected 'x,y', got '{s}'")));
    }
    let x = parts[0].trim().parse::<f64>().map_err(|e| usage(anyhow::anyhow!("bad x '{s}': {e}")))?;
    let y = parts[1].trim().parse::<f64>().map_err(|e| usage(anyhow::anyhow!("bad y '{s}': {e}")))?;
    Ok(GazePoint::new(x, y))
}

/// Parse a comma-separated list of numbers.
pub fn parse_list(s: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|e| usage(anyhow::anyhow!("bad number '{p}' in list '{s}': {e}")))
        })
        .collect()
}

/// Parse a gaze trace CSV: `frame,x_px,y_px` with header.
pub fn load_gaze_trace(path: &Path) -> CliResult<Vec<(usize, GazePoint)>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(anyhow::anyhow!("cannot read gaze trace {}: {e}", path.display())))?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == "frame,x_px,y_px" => {}
        other => {
            return Err(usage(anyhow::anyhow!(
                "gaze trace must start with 'frame,x_px,y_px', got {other:?}"
            )))
        }
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<_> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(usage(anyhow::anyhow!("gaze trace line {}: expected 3 fields", i + 2)));
        }
        let frame = fields[0]
            .trim()
            .parse::<usize>()
            .map_err(|e| usage(anyhow::anyhow!("gaze trace line {}: bad frame: {e}", i + 2)))?;
        let x = fields[1]
            .trim()
            .parse::<f64>()
            .map_err(|e| usage(anyhow::anyhow!("gaze trace line {}: bad x: {e}", i + 2)))?;
        let y = fields[2]
            .trim()
            .parse::<f64>()
            .map_err(|e| usage(anyhow::anyhow!("gaze trace line {}: bad y: {e}", i + 2)))?;
        out.push((frame, GazePoint::new(x, y)));
    }
    if out.is_empty() {
        return Err(usage(anyhow::anyhow!("gaze trace {} has no rows", path.display())));
    }
    out.sort_by_key(|(f, _)| *f);
    Ok(out)
}

/// Every report carries the resolved configuration. The worker count is
/// deliberately left out: it never affects numeric outputs and reports must
/// be byte-identical across worker counts.
#[derive(Serialize)]
pub struct Provenance<'a, A: Serialize> {
    pub command: &'a str,
    pub geometry: Option<&'a DisplayGeometry>,
    pub params: &'a Params64,
    pub patch: String,
    pub seed: u64,
    pub args: A,
}

pub fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| runtime(anyhow::anyhow!("cannot serialize {}: {e}", path.display())))?;
    std::fs::write(path, text + "\n")
        .map_err(|e| runtime(anyhow::anyhow!("cannot write {}: {e}", path.display())))
}

pub fn write_provenance<A: Serialize>(ctx: &Ctx, command: &str, args: A) -> CliResult<()> {
    let report = Provenance {
        command,
        geometry: ctx.geometry.as_ref(),
        params: &ctx.params,
        patch: ctx.patch.to_string(),
        seed: ctx.seed,
        args,
    };
    write_json(&ctx.out.join("config.json"), &report)
}
