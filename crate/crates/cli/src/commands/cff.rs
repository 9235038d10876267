//! `cff`: critical flicker frequency table over eccentricities and spatial
//! frequencies.

use std::fs::File;
use std::io::BufWriter;

use serde::Serialize;
use tempvis::aliasing::cff_table;

use crate::common::{runtime, usage, CliResult, Ctx};

#[derive(Serialize)]
struct Args<'a> {
    eccentricities_deg: &'a [f64],
    spatial_freqs_cpd: &'a [f64],
    c_max: f64,
}

pub fn run(ctx: &Ctx, eccs: &[f64], freqs: &[f64], c_max: f64) -> CliResult<()> {
    let table = cff_table(eccs, freqs, c_max, &ctx.params)
        .map_err(|e| usage(anyhow::anyhow!("invalid CFF request: {e}")))?;
    ctx.ensure_out_dir()?;
    let path = ctx.out.join("cff.csv");
    let file = File::create(&path)
        .map_err(|e| runtime(anyhow::anyhow!("cannot create {}: {e}", path.display())))?;
    table
        .write_csv(BufWriter::new(file))
        .map_err(|e| runtime(anyhow::anyhow!("cannot write {}: {e}", path.display())))?;
    crate::common::write_provenance(
        ctx,
        "cff",
        Args { eccentricities_deg: eccs, spatial_freqs_cpd: freqs, c_max },
    )?;
    println!("CFF table ({} x {}) -> {}", freqs.len(), eccs.len(), path.display());
    Ok(())
}
