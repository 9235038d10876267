//! `transition solve` and `transition render`.

use std::path::Path;

use serde::Serialize;
use tempvis::transition::{
    blend, TransitionOptions, TransitionPlayer, TransitionSchedule, TransitionSolver,
};
use tempvis::GazePoint;

use crate::common::{runtime, usage, CliResult, Ctx, GazeSpec};
use crate::frames::{load_linear_image, write_gray_png};

#[derive(Serialize)]
struct SolveArgs<'a> {
    source: String,
    target: String,
    targets_p: &'a [f64],
    eccentricities_deg: &'a [f64],
}

pub fn solve(
    ctx: &Ctx,
    source: &Path,
    target: &Path,
    targets_p: &[f64],
    eccs: &[f64],
) -> CliResult<()> {
    let geom = ctx.geometry()?.clone();
    for &p in targets_p {
        if !(p > 0.0 && p < 1.0) {
            return Err(usage(anyhow::anyhow!("detection probability {p} must be in (0, 1)")));
        }
    }
    let src = load_linear_image(source, ctx.linear_input)?;
    let tgt = load_linear_image(target, ctx.linear_input)?;
    let opts = TransitionOptions { patch_dims: ctx.patch, ..Default::default() };
    let solver = TransitionSolver::new(&src, &tgt, &geom, &ctx.params, opts)
        .map_err(|e| usage(anyhow::anyhow!("cannot set up solver: {e}")))?;

    ctx.ensure_out_dir()?;
    for &p in targets_p {
        let schedule = solver
            .build_schedule(p, eccs)
            .map_err(|e| runtime(anyhow::anyhow!("schedule for p_d={p} failed: {e}")))?;
        let path = ctx.out.join(format!("schedule_pd{p}.json"));
        std::fs::write(&path, schedule.to_json() + "\n")
            .map_err(|e| runtime(anyhow::anyhow!("cannot write {}: {e}", path.display())))?;
        let windows: Vec<usize> = (0..eccs.len()).map(|i| schedule.windows_at(i)).collect();
        println!("p_d={p}: windows per eccentricity {windows:?} -> {}", path.display());
    }
    crate::common::write_provenance(
        ctx,
        "transition solve",
        SolveArgs {
            source: source.display().to_string(),
            target: target.display().to_string(),
            targets_p,
            eccentricities_deg: eccs,
        },
    )
}

#[derive(Serialize)]
struct RenderArgs {
    schedule: String,
    source: String,
    target: String,
    region: [f64; 2],
    bit_depth: u8,
}

/// Render the blended frame sequence for a fixed or traced gaze. The image
/// pair sits at `region` (top-left, pixels); its center sets the
/// eccentricity for each window.
#[allow(clippy::too_many_arguments)]
pub fn render(
    ctx: &Ctx,
    schedule_path: &Path,
    source: &Path,
    target: &Path,
    region: Option<GazePoint>,
    bit_depth: u8,
) -> CliResult<()> {
    let geom = ctx.geometry()?.clone();
    let text = std::fs::read_to_string(schedule_path)
        .map_err(|e| usage(anyhow::anyhow!("cannot read schedule {}: {e}", schedule_path.display())))?;
    let schedule = TransitionSchedule::from_json(&text)
        .map_err(|e| usage(anyhow::anyhow!("invalid schedule {}: {e}", schedule_path.display())))?;
    let src = load_linear_image(source, ctx.linear_input)?;
    let tgt = load_linear_image(target, ctx.linear_input)?;
    if (src.width, src.height) != (tgt.width, tgt.height) {
        return Err(usage(anyhow::anyhow!("image pair sizes differ")));
    }
    let region = region.unwrap_or_else(|| {
        GazePoint::new(
            (f64::from(geom.width_px) - src.width as f64) / 2.0,
            (f64::from(geom.height_px) - src.height as f64) / 2.0,
        )
    });
    let center =
        GazePoint::new(region.x + src.width as f64 / 2.0, region.y + src.height as f64 / 2.0);

    ctx.ensure_out_dir()?;
    let mut player = TransitionPlayer::new(&schedule);
    let mut frame_idx = 0usize;
    let mut window = 0usize;
    while !player.finished() {
        let gaze = match &ctx.gaze {
            GazeSpec::Trace(points) => {
                let frame = window * schedule.window_frames;
                points
                    .iter()
                    .take_while(|(f, _)| *f <= frame)
                    .last()
                    .map(|(_, g)| *g)
                    .unwrap_or(points[0].1)
            }
            _ => ctx.fixed_gaze(&geom)?,
        };
        let ecc = geom.eccentricity_deg(gaze, center);
        let (a0, a1) = player.advance_window(ecc);
        for i in 0..schedule.window_frames {
            let alpha = a0 + (a1 - a0) * i as f64 / (schedule.window_frames as f64 - 1.0);
            let img = blend(&src, &tgt, alpha)
                .map_err(|e| runtime(anyhow::anyhow!("blend failed: {e}")))?;
            let path = ctx.out.join(format!("frame_{frame_idx:05}.png"));
            write_gray_png(&path, img.width, img.height, &img.data, bit_depth)?;
            frame_idx += 1;
        }
        window += 1;
        if window > 1_000_000 {
            return Err(runtime(anyhow::anyhow!("render did not terminate")));
        }
    }
    println!("rendered {frame_idx} frames over {window} windows -> {}", ctx.out.display());
    crate::common::write_provenance(
        ctx,
        "transition render",
        RenderArgs {
            schedule: schedule_path.display().to_string(),
            source: source.display().to_string(),
            target: target.display().to_string(),
            region: [region.x, region.y],
            bit_depth,
        },
    )
}
