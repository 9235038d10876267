//! `analyze`: per-patch visibility map and heatmaps for a frame sequence.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use serde::Serialize;
use tempvis::visibility::{analyze_video_traced, AnalyzeOptions, FrameSource};

use crate::common::{runtime, Ctx};
use crate::common::CliResult;
use crate::frames::{list_pngs, PngDirSource};
use crate::heatmap::render_overlay;

#[derive(Serialize)]
struct Args {
    input: String,
    heatmaps: bool,
    linear_input: bool,
    gaze: String,
}

pub fn run(ctx: &Ctx, input: &Path, heatmaps: bool) -> CliResult<()> {
    let geom = ctx.geometry()?.clone();
    let paths = list_pngs(input)?;
    let mut source = PngDirSource::new(paths, ctx.linear_input, &geom)?;
    let windows = source.frame_count() / ctx.patch.nt;
    let gazes = ctx.gaze.per_window(&geom, windows.max(1), ctx.patch.nt);

    let params32 = ctx.params.cast::<f32>();
    let opts = AnalyzeOptions { patch_dims: ctx.patch, cache_sensitivity: None };
    let map = analyze_video_traced(&mut source, &gazes, &geom, &params32, &opts)
        .map_err(|e| runtime(anyhow::anyhow!("analysis failed: {e}")))?;

    ctx.ensure_out_dir()?;
    let csv_path = ctx.out.join("visibility.csv");
    let file = File::create(&csv_path)
        .map_err(|e| runtime(anyhow::anyhow!("cannot create {}: {e}", csv_path.display())))?;
    map.write_csv(BufWriter::new(file))
        .map_err(|e| runtime(anyhow::anyhow!("cannot write {}: {e}", csv_path.display())))?;

    if heatmaps {
        for w in 0..map.windows {
            let (fw, fh, codes) = source.frame_codes(w * ctx.patch.nt)?;
            let img = render_overlay(&codes, fw, fh, &map, w);
            let path = ctx.out.join(format!("heatmap_w{w:03}.png"));
            img.save(&path)
                .map_err(|e| runtime(anyhow::anyhow!("cannot write {}: {e}", path.display())))?;
        }
    }

    crate::common::write_provenance(
        ctx,
        "analyze",
        Args {
            input: input.display().to_string(),
            heatmaps,
            linear_input: ctx.linear_input,
            gaze: format!("{:?}", gazes.first()),
        },
    )?;
    println!(
        "analyzed {} windows x {}x{} cells -> {}",
        map.windows,
        map.cols,
        map.rows,
        csv_path.display()
    );
    Ok(())
}
