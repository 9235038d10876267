//! `fit delange|shape|psychometric|cv`: calibration from measurement files.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use serde::Serialize;
use tempvis::calibration::{
    cross_validate, fit_delange, fit_psychometric, fit_shape_params, read_detections_csv,
    read_thresholds_csv, DetectionStimulus, PsychometricFitOptions, ShapeFitOptions,
};

use crate::common::{runtime, usage, CliResult, Ctx};

fn read_to_string(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path)
        .map_err(|e| usage(anyhow::anyhow!("cannot read {}: {e}", path.display())))
}

/// Parse `f_t_hz,sensitivity` CSV (header required).
fn read_delange_csv(text: &str) -> CliResult<Vec<(f64, f64)>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == "f_t_hz,sensitivity" => {}
        other => {
            return Err(usage(anyhow::anyhow!(
                "curve data must start with 'f_t_hz,sensitivity', got {other:?}"
            )))
        }
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<_> = line.split(',').collect();
        if fields.len() != 2 {
            return Err(usage(anyhow::anyhow!("line {}: expected 2 fields", i + 2)));
        }
        let f = fields[0]
            .trim()
            .parse::<f64>()
            .map_err(|e| usage(anyhow::anyhow!("line {}: bad frequency: {e}", i + 2)))?;
        let s = fields[1]
            .trim()
            .parse::<f64>()
            .map_err(|e| usage(anyhow::anyhow!("line {}: bad sensitivity: {e}", i + 2)))?;
        out.push((f, s));
    }
    Ok(out)
}

#[derive(Serialize)]
struct DelangeArgs {
    data: String,
    degree: usize,
}

pub fn delange(ctx: &Ctx, data: &Path, degree: usize) -> CliResult<()> {
    let samples = read_delange_csv(&read_to_string(data)?)?;
    let fit = fit_delange(&samples, degree)
        .map_err(|e| runtime(anyhow::anyhow!("curve fit failed: {e}")))?;
    ctx.ensure_out_dir()?;
    crate::common::write_json(&ctx.out.join("fit_delange.json"), &fit)?;
    crate::common::write_provenance(
        ctx,
        "fit delange",
        DelangeArgs { data: data.display().to_string(), degree },
    )?;
    println!("degree-{degree} fit, R^2 = {:.4} -> fit_delange.json", fit.r_squared);
    Ok(())
}

#[derive(Serialize)]
struct ShapeArgs {
    thresholds: String,
    pool_r: f64,
    exclude_saturated: bool,
    restarts: usize,
}

pub fn shape(
    ctx: &Ctx,
    thresholds: &Path,
    pool_r: f64,
    exclude_saturated: bool,
    restarts: usize,
) -> CliResult<()> {
    let records = read_thresholds_csv(&read_to_string(thresholds)?)
        .map_err(|e| usage(anyhow::anyhow!("{}: {e}", thresholds.display())))?;
    let opts = ShapeFitOptions {
        pooling_exp: pool_r,
        exclude_saturated,
        restarts,
        seed: ctx.seed,
        init: Some(ctx.params.shape),
        ..Default::default()
    };
    let temporal_poly = ctx.params.temporal_poly;
    let fit = fit_shape_params(&records, temporal_poly, &opts)
        .map_err(|e| runtime(anyhow::anyhow!("shape fit failed: {e}")))?;
    ctx.ensure_out_dir()?;
    crate::common::write_json(&ctx.out.join("fit_shape.json"), &fit)?;
    crate::common::write_provenance(
        ctx,
        "fit shape",
        ShapeArgs {
            thresholds: thresholds.display().to_string(),
            pool_r,
            exclude_saturated,
            restarts,
        },
    )?;
    println!(
        "loss {:.6e}, R^2 {:.3}, adjusted {:.3} ({} records) -> fit_shape.json",
        fit.loss, fit.r_squared, fit.adjusted_r_squared, fit.records_used
    );
    Ok(())
}

#[derive(Serialize)]
struct PsychoArgs {
    detections: String,
    spectra: String,
}

pub fn psychometric(ctx: &Ctx, detections: &Path, spectra: &Path) -> CliResult<()> {
    let records = read_detections_csv(&read_to_string(detections)?)
        .map_err(|e| usage(anyhow::anyhow!("{}: {e}", detections.display())))?;
    let stimuli: Vec<DetectionStimulus> = serde_json::from_str(&read_to_string(spectra)?)
        .map_err(|e| usage(anyhow::anyhow!("invalid spectra {}: {e}", spectra.display())))?;
    let opts = PsychometricFitOptions { seed: ctx.seed, ..Default::default() };
    let fit = fit_psychometric(&records, &stimuli, &opts)
        .map_err(|e| runtime(anyhow::anyhow!("psychometric fit failed: {e}")))?;
    ctx.ensure_out_dir()?;
    crate::common::write_json(&ctx.out.join("fit_psychometric.json"), &fit)?;
    crate::common::write_provenance(
        ctx,
        "fit psychometric",
        PsychoArgs {
            detections: detections.display().to_string(),
            spectra: spectra.display().to_string(),
        },
    )?;
    println!(
        "r {:.4}, scale {:.4}, slope {:.4}, lapse {:.4} -> fit_psychometric.json",
        fit.pooling_exp, fit.psycho_scale, fit.psycho_slope, fit.lapse_rate
    );
    Ok(())
}

#[derive(Serialize)]
struct CvArgs {
    thresholds: String,
    folds: usize,
    pool_r: f64,
}

pub fn cv(ctx: &Ctx, thresholds: &Path, folds: usize, pool_r: f64) -> CliResult<()> {
    let records = read_thresholds_csv(&read_to_string(thresholds)?)
        .map_err(|e| usage(anyhow::anyhow!("{}: {e}", thresholds.display())))?;
    let opts = ShapeFitOptions {
        pooling_exp: pool_r,
        seed: ctx.seed,
        init: Some(ctx.params.shape),
        ..Default::default()
    };
    let cv = cross_validate(&records, ctx.params.temporal_poly, folds, ctx.seed, &opts)
        .map_err(|e| runtime(anyhow::anyhow!("cross-validation failed: {e}")))?;
    ctx.ensure_out_dir()?;
    crate::common::write_json(&ctx.out.join("cv.json"), &cv)?;
    let table_path = ctx.out.join("cv_table.csv");
    let file = File::create(&table_path)
        .map_err(|e| runtime(anyhow::anyhow!("cannot create {}: {e}", table_path.display())))?;
    cv.write_table(BufWriter::new(file))
        .map_err(|e| runtime(anyhow::anyhow!("cannot write {}: {e}", table_path.display())))?;
    crate::common::write_provenance(
        ctx,
        "fit cv",
        CvArgs { thresholds: thresholds.display().to_string(), folds, pool_r },
    )?;
    println!(
        "{folds}-fold CV: mean train {:.4}, mean test {:.4} -> cv_table.csv",
        cv.mean_train_loss, cv.mean_test_loss
    );
    Ok(())
}
