//! `stimulus`: render a grating patch as an sRGB-encoded PNG sequence with
//! a JSON sidecar describing it.

use serde::Serialize;
use tempvis::stimulus::{generate_grating, GratingSpec};
use tempvis::PatchVolume;

use crate::common::{usage, CliResult, Ctx};
use crate::frames::write_gray_png;

#[derive(Serialize)]
struct Sidecar<'a> {
    spec: &'a GratingSpec,
    geometry: &'a tempvis::DisplayGeometry,
    bit_depth: u8,
    frames: usize,
}

pub fn run(ctx: &Ctx, spec: &GratingSpec, bit_depth: u8) -> CliResult<()> {
    let geom = ctx.geometry()?.clone();
    spec.validate_displayable(&geom)
        .map_err(|e| usage(anyhow::anyhow!("stimulus not representable: {e}")))?;
    let patch: PatchVolume<f64> =
        generate_grating(spec, &geom).map_err(|e| usage(anyhow::anyhow!("{e}")))?;

    ctx.ensure_out_dir()?;
    let plane = patch.dims.plane();
    for t in 0..patch.dims.nt {
        let codes: Vec<f64> = patch.values[t * plane..(t + 1) * plane]
            .iter()
            .map(|&l| geom.luminance_to_code(l))
            .collect();
        let path = ctx.out.join(format!("frame_{t:03}.png"));
        write_gray_png(&path, patch.dims.nh, patch.dims.nv, &codes, bit_depth)?;
    }
    crate::common::write_json(
        &ctx.out.join("stimulus.json"),
        &Sidecar { spec, geometry: &geom, bit_depth, frames: patch.dims.nt },
    )?;
    println!("wrote {} frames + stimulus.json -> {}", patch.dims.nt, ctx.out.display());
    Ok(())
}
