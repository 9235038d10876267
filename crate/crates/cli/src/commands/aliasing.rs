//! `aliasing score`: flicker scoring of a frame sequence, optionally after
//! motion compensation from supplied flow fields.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use serde::{Deserialize, Serialize};
use tempvis::aliasing::{flicker_score, motion_compensate, FlowField};
use tempvis::visibility::{analyze_video_traced, AnalyzeOptions, FrameSource, MemoryFrames};

use crate::common::{runtime, usage, CliResult, Ctx};
use crate::frames::{list_pngs, PngDirSource};

#[derive(Deserialize)]
struct FlowManifest {
    flows: Vec<String>,
}

/// Load flows from a directory of `.flo` files (sorted) or a JSON manifest
/// listing them in order.
fn load_flows(path: &Path) -> CliResult<Vec<FlowField>> {
    let paths: Vec<std::path::PathBuf> = if path.is_dir() {
        let mut v: Vec<_> = std::fs::read_dir(path)
            .map_err(|e| usage(anyhow::anyhow!("cannot read flow dir {}: {e}", path.display())))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().map(|x| x.eq_ignore_ascii_case("flo")).unwrap_or(false))
            .collect();
        v.sort();
        v
    } else {
        let text = std::fs::read_to_string(path)
            .map_err(|e| usage(anyhow::anyhow!("cannot read flow manifest {}: {e}", path.display())))?;
        let manifest: FlowManifest = serde_json::from_str(&text)
            .map_err(|e| usage(anyhow::anyhow!("invalid flow manifest {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        manifest.flows.iter().map(|f| base.join(f)).collect()
    };
    if paths.is_empty() {
        return Err(usage(anyhow::anyhow!("no flow fields found at {}", path.display())));
    }
    paths
        .iter()
        .map(|p| {
            let file = File::open(p)
                .map_err(|e| usage(anyhow::anyhow!("cannot open {}: {e}", p.display())))?;
            FlowField::read_flo(std::io::BufReader::new(file))
                .map_err(|e| usage(anyhow::anyhow!("{}: {e}", p.display())))
        })
        .collect()
}

#[derive(Serialize)]
struct ScoreArgs {
    input: String,
    flows: Option<String>,
    beta: f64,
}

#[derive(Serialize)]
struct ScoreReport<'a> {
    flicker_score: f64,
    beta: f64,
    motion_compensated: bool,
    windows: usize,
    cols: usize,
    rows: usize,
    mean_p_norm: f64,
    max_p_norm: f64,
    #[serde(flatten)]
    provenance: crate::common::Provenance<'a, ScoreArgs>,
}

pub fn run(ctx: &Ctx, input: &Path, flows_path: Option<&Path>, beta: f64) -> CliResult<()> {
    let geom = ctx.geometry()?.clone();
    if !(beta > 0.0) {
        return Err(usage(anyhow::anyhow!("beta must be positive, got {beta}")));
    }
    let paths = list_pngs(input)?;
    let mut png = PngDirSource::new(paths, ctx.linear_input, &geom)?;

    // Motion compensation needs random frame access, so materialize.
    let (w, h, n) = (png.width(), png.height(), png.frame_count());
    let mut frames = MemoryFrames::<f32>::new(w, h);
    let mut buf = vec![0.0f32; w * h];
    for i in 0..n {
        png.fill_frame(i, &mut buf)
            .map_err(|e| runtime(anyhow::anyhow!("frame {i}: {e}")))?;
        frames.push_frame(buf.clone()).map_err(|e| runtime(anyhow::anyhow!("{e}")))?;
    }

    let compensated = flows_path.is_some();
    let frames = match flows_path {
        Some(p) => {
            let flows = load_flows(p)?;
            motion_compensate(&frames, &flows, ctx.patch.nt)
                .map_err(|e| runtime(anyhow::anyhow!("motion compensation failed: {e}")))?
        }
        None => frames,
    };

    let windows = n / ctx.patch.nt;
    let gazes = ctx.gaze.per_window(&geom, windows.max(1), ctx.patch.nt);
    let params32 = ctx.params.cast::<f32>();
    let opts = AnalyzeOptions { patch_dims: ctx.patch, cache_sensitivity: None };
    let mut source = frames;
    let map = analyze_video_traced(&mut source, &gazes, &geom, &params32, &opts)
        .map_err(|e| runtime(anyhow::anyhow!("analysis failed: {e}")))?;

    ctx.ensure_out_dir()?;
    let csv_path = ctx.out.join("visibility.csv");
    let file = File::create(&csv_path)
        .map_err(|e| runtime(anyhow::anyhow!("cannot create {}: {e}", csv_path.display())))?;
    map.write_csv(BufWriter::new(file))
        .map_err(|e| runtime(anyhow::anyhow!("cannot write {}: {e}", csv_path.display())))?;

    let score = flicker_score(&map, beta);
    let mean = map.cells.iter().map(|c| c.p_norm).sum::<f64>() / map.cells.len() as f64;
    let max = map.cells.iter().map(|c| c.p_norm).fold(0.0, f64::max);
    let report = ScoreReport {
        flicker_score: score,
        beta,
        motion_compensated: compensated,
        windows: map.windows,
        cols: map.cols,
        rows: map.rows,
        mean_p_norm: mean,
        max_p_norm: max,
        provenance: crate::common::Provenance {
            command: "aliasing score",
            geometry: Some(&geom),
            params: &ctx.params,
            patch: ctx.patch.to_string(),
            seed: ctx.seed,
            args: ScoreArgs {
                input: input.display().to_string(),
                flows: flows_path.map(|p| p.display().to_string()),
                beta,
            },
        },
    };
    crate::common::write_json(&ctx.out.join("score.json"), &report)?;
    println!("flicker score {score:.6} (beta {beta}, compensated {compensated})");
    Ok(())
}
