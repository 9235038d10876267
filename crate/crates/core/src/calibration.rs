//! Refitting machinery: polynomial fit of the foveal temporal sensitivity
//! curve, constrained shape-parameter fits to threshold data, psychometric
//! maximum-likelihood estimation, and k-fold cross-validation.
//!
//! Loss for the shape fit is the mean squared error between predicted and
//! measured thresholds, both taken through the `ln(1 + x)` transform.

use std::io::Write;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{log_transform, SensitivityParams, ShapeParams, StimulusCoords};
use crate::solve::{nelder_mead, SimplexOptions};

/// Thresholds at or above this Weber contrast are treated as saturated
/// (the estimation procedure ran into the display's maximum contrast).
pub const SATURATION_THRESHOLD: f64 = 0.49;

/// Number of model parameters used for the adjusted R².
const MODEL_PARAM_COUNT: usize = 19;

/// One measured detection threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRecord {
    /// Horizontal spatial frequency, cpd.
    pub f_h: f64,
    /// Vertical spatial frequency, cpd.
    pub f_v: f64,
    /// Temporal frequency, Hz.
    pub f_t: f64,
    /// Eccentricity, degrees.
    pub e: f64,
    /// Threshold Weber contrast.
    pub threshold: f64,
}

impl ThresholdRecord {
    pub fn is_saturated(&self) -> bool {
        self.threshold >= SATURATION_THRESHOLD
    }

    fn coords(&self) -> StimulusCoords<f64> {
        StimulusCoords::new(self.f_t, self.f_h, self.f_v, self.e)
    }
}

/// Detection counts for one stimulus at one nominal JND-scaled contrast.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub id: String,
    pub c_jnd: f64,
    pub trials: u32,
    pub correct: u32,
}

/// The JND-scaled coefficient magnitudes of one stimulus (everything with
/// `k_t > 0`), from which the pooled contrast is recomputed per candidate
/// pooling exponent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionStimulus {
    pub id: String,
    pub jnd_coeffs: Vec<f64>,
}

impl DetectionStimulus {
    /// Minkowski-pool the stored coefficients with exponent `r`.
    pub fn pooled(&self, r: f64) -> f64 {
        let sum: f64 = self.jnd_coeffs.iter().map(|c| c.abs().powf(r)).sum();
        sum.powf(1.0 / r)
    }
}

// ---------------------------------------------------------------------------
// CSV surfaces
// ---------------------------------------------------------------------------

/// Parse `f_h_cpd,f_v_cpd,f_t_hz,ecc_deg,threshold` CSV (header required).
pub fn read_thresholds_csv(text: &str) -> Result<Vec<ThresholdRecord>> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Parse("empty thresholds CSV".into()))?;
    if header.trim() != "f_h_cpd,f_v_cpd,f_t_hz,ecc_deg,threshold" {
        return Err(Error::Parse(format!("unexpected thresholds header '{header}'")));
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<_> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(Error::Parse(format!("line {}: expected 5 fields", i + 2)));
        }
        let num = |s: &str| {
            s.trim().parse::<f64>().map_err(|_| Error::Parse(format!("line {}: bad number '{s}'", i + 2)))
        };
        let rec = ThresholdRecord {
            f_h: num(fields[0])?,
            f_v: num(fields[1])?,
            f_t: num(fields[2])?,
            e: num(fields[3])?,
            threshold: num(fields[4])?,
        };
        if !(rec.threshold > 0.0) {
            return Err(Error::Parse(format!("line {}: threshold must be positive", i + 2)));
        }
        out.push(rec);
    }
    Ok(out)
}

pub fn write_thresholds_csv<W: Write>(records: &[ThresholdRecord], mut out: W) -> std::io::Result<()> {
    writeln!(out, "f_h_cpd,f_v_cpd,f_t_hz,ecc_deg,threshold")?;
    for r in records {
        writeln!(out, "{},{},{},{},{}", r.f_h, r.f_v, r.f_t, r.e, r.threshold)?;
    }
    Ok(())
}

/// Parse `id,c_jnd,trials,correct` CSV (header required).
pub fn read_detections_csv(text: &str) -> Result<Vec<DetectionRecord>> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Parse("empty detections CSV".into()))?;
    if header.trim() != "id,c_jnd,trials,correct" {
        return Err(Error::Parse(format!("unexpected detections header '{header}'")));
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<_> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::Parse(format!("line {}: expected 4 fields", i + 2)));
        }
        let rec = DetectionRecord {
            id: fields[0].trim().to_string(),
            c_jnd: fields[1]
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("line {}: bad c_jnd", i + 2)))?,
            trials: fields[2]
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("line {}: bad trial count", i + 2)))?,
            correct: fields[3]
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("line {}: bad correct count", i + 2)))?,
        };
        if rec.correct > rec.trials {
            return Err(Error::Parse(format!("line {}: correct exceeds trials", i + 2)));
        }
        out.push(rec);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Temporal curve fit
// ---------------------------------------------------------------------------

/// Polynomial fit of the foveal temporal sensitivity curve.
#[derive(Debug, Clone, Serialize)]
pub struct DelangeFit {
    /// Coefficients, constant term first.
    pub coeffs: Vec<f64>,
    pub r_squared: f64,
}

/// Least-squares polynomial fit in the transformed domain: both the
/// frequency (Hz) and the linear sensitivity pass through `ln(1 + x)`.
/// `samples` are `(f_t_hz, linear_sensitivity)` pairs.
pub fn fit_delange(samples: &[(f64, f64)], degree: usize) -> Result<DelangeFit> {
    if samples.len() < degree + 2 {
        return Err(Error::NotEnoughData(format!(
            "need at least {} samples for degree {degree}, got {}",
            degree + 2,
            samples.len()
        )));
    }
    let xs: Vec<f64> = samples.iter().map(|&(f, _)| log_transform(f)).collect();
    let ys: Vec<f64> = samples.iter().map(|&(_, s)| log_transform(s)).collect();

    // Normal equations of the Vandermonde design.
    let n = degree + 1;
    let mut ata = vec![vec![0.0; n]; n];
    let mut aty = vec![0.0; n];
    for (&x, &y) in xs.iter().zip(&ys) {
        let mut powers = Vec::with_capacity(n);
        let mut p = 1.0;
        for _ in 0..n {
            powers.push(p);
            p *= x;
        }
        for i in 0..n {
            aty[i] += powers[i] * y;
            for j in 0..n {
                ata[i][j] += powers[i] * powers[j];
            }
        }
    }
    let coeffs = solve_linear(&mut ata, &mut aty)?;

    let mean_y = ys.iter().sum::<f64>() / ys.len() as f64;
    let ss_tot: f64 = ys.iter().map(|y| (y - mean_y).powi(2)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(&x, &y)| {
            let pred = coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c);
            (y - pred).powi(2)
        })
        .sum();
    let r_squared = if ss_tot <= f64::EPSILON * ys.len() as f64 {
        // Zero-variance data: a perfect constant fit counts as 1.
        1.0
    } else {
        1.0 - ss_res / ss_tot
    };
    Ok(DelangeFit { coeffs, r_squared })
}

/// Gaussian elimination with partial pivoting; errors on rank deficiency.
fn solve_linear(a: &mut [Vec<f64>], b: &mut [f64]) -> Result<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        if a[pivot][col].abs() < 1e-12 {
            return Err(Error::DegenerateData("rank-deficient design matrix".into()));
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let mut acc = b[col];
        for k in col + 1..n {
            acc -= a[col][k] * x[k];
        }
        x[col] = acc / a[col][col];
    }
    Ok(x)
}

// ---------------------------------------------------------------------------
// Shape-parameter fit
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct ShapeFitOptions {
    /// Pooling exponent held fixed during the shape fit.
    pub pooling_exp: f64,
    /// Drop saturated records instead of fitting through them.
    pub exclude_saturated: bool,
    /// Seeded random restarts on top of the warm start.
    pub restarts: usize,
    pub seed: u64,
    /// Warm start; defaults to the calibrated parameter set.
    pub init: Option<ShapeParams<f64>>,
    pub max_iter: usize,
}

impl Default for ShapeFitOptions {
    fn default() -> Self {
        Self {
            pooling_exp: 1.7,
            exclude_saturated: false,
            restarts: 12,
            seed: 0,
            init: None,
            max_iter: 4000,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ShapeFit {
    pub shape: ShapeParams<f64>,
    /// Mean squared error in the transformed threshold domain.
    pub loss: f64,
    pub r_squared: f64,
    pub adjusted_r_squared: f64,
    pub records_used: usize,
}

const SHAPE_BOUNDS: [(f64, f64); 10] = [
    (0.0, 5.0),  // scale_base
    (0.0, 5.0),  // scale_freq
    (0.0, 5.0),  // scale_freq_exp
    (0.0, 2.0),  // scale_ecc
    (-5.0, 5.0), // quad a
    (-5.0, 5.0), // quad b
    (-5.0, 5.0), // quad c
    (0.0, 2.0),  // shift_base
    (0.0, 2.0),  // shift_freq
    (0.0, 2.0),  // shift_ecc
];

fn params_with_shape(temporal_poly: [f64; 4], shape: ShapeParams<f64>) -> SensitivityParams<f64> {
    SensitivityParams { temporal_poly, shape, ..SensitivityParams::default() }
}

/// Transformed-domain MSE of a shape candidate against records.
pub fn shape_loss(shape: &ShapeParams<f64>, temporal_poly: [f64; 4], records: &[ThresholdRecord]) -> f64 {
    let params = params_with_shape(temporal_poly, *shape);
    let mut acc = 0.0;
    for rec in records {
        let pred = params.threshold_contrast(rec.coords());
        let d = log_transform(pred) - log_transform(rec.threshold);
        acc += d * d;
    }
    acc / records.len() as f64
}

/// Constrained nonlinear least squares for the shape parameters, with the
/// temporal polynomial fixed. Multi-start Nelder-Mead with box constraints:
/// one warm start plus seeded perturbations.
pub fn fit_shape_params(
    records: &[ThresholdRecord],
    temporal_poly: [f64; 4],
    opts: &ShapeFitOptions,
) -> Result<ShapeFit> {
    let records: Vec<ThresholdRecord> = if opts.exclude_saturated {
        records.iter().filter(|r| !r.is_saturated()).copied().collect()
    } else {
        records.to_vec()
    };
    if records.is_empty() {
        return Err(Error::NotEnoughData("no threshold records to fit".into()));
    }
    let mut distinct: Vec<[u64; 4]> = records
        .iter()
        .map(|r| [r.f_h.to_bits(), r.f_v.to_bits(), r.f_t.to_bits(), r.e.to_bits()])
        .collect();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 12 {
        return Err(Error::NotEnoughData(format!(
            "need at least 12 distinct conditions, got {}",
            distinct.len()
        )));
    }

    let base = opts.init.unwrap_or_default().to_vec();
    let mut starts = vec![base.clone()];
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..opts.restarts {
        let jittered: Vec<f64> = base
            .iter()
            .zip(&SHAPE_BOUNDS)
            .map(|(&v, &(lo, hi))| (v + rng.gen_range(-0.3..0.3) * (hi - lo)).clamp(lo, hi))
            .collect();
        starts.push(jittered);
    }

    let objective = |x: &[f64]| shape_loss(&ShapeParams::from_slice(x), temporal_poly, &records);
    let simplex_opts = SimplexOptions { max_iter: opts.max_iter, ftol: 1e-14, initial_step: 0.05 };
    let runs: Vec<_> = starts
        .par_iter()
        .map(|start| nelder_mead(objective, start, &SHAPE_BOUNDS, &simplex_opts))
        .collect();
    let best = runs
        .iter()
        .min_by(|a, b| a.loss.partial_cmp(&b.loss).unwrap_or(std::cmp::Ordering::Equal))
        .expect("at least one start");
    if !best.loss.is_finite() || !runs.iter().any(|r| r.converged) {
        return Err(Error::FitNotConverged { best_loss: best.loss, best_params: best.x.clone() });
    }

    let shape = ShapeParams::from_slice(&best.x);
    let loss = best.loss;
    let ys: Vec<f64> = records.iter().map(|r| log_transform(r.threshold)).collect();
    let mean_y = ys.iter().sum::<f64>() / ys.len() as f64;
    let ss_tot: f64 = ys.iter().map(|y| (y - mean_y).powi(2)).sum();
    let ss_res = loss * records.len() as f64;
    let n = records.len() as f64;
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    let adjusted_r_squared = if records.len() > MODEL_PARAM_COUNT + 1 {
        1.0 - (1.0 - r_squared) * (n - 1.0) / (n - 1.0 - MODEL_PARAM_COUNT as f64)
    } else {
        f64::NAN
    };
    Ok(ShapeFit { shape, loss, r_squared, adjusted_r_squared, records_used: records.len() })
}

/// Noise-free thresholds predicted by a parameter set over a condition grid.
pub fn synthetic_threshold_grid(
    params: &SensitivityParams<f64>,
    f_hs: &[f64],
    f_vs: &[f64],
    f_ts: &[f64],
    es: &[f64],
) -> Vec<ThresholdRecord> {
    let mut out = Vec::new();
    for &f_h in f_hs {
        for &f_v in f_vs {
            for &f_t in f_ts {
                for &e in es {
                    let threshold = params.threshold_contrast(StimulusCoords::new(f_t, f_h, f_v, e));
                    out.push(ThresholdRecord { f_h, f_v, f_t, e, threshold });
                }
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Psychometric fit
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct PsychometricFitOptions {
    pub restarts: usize,
    pub seed: u64,
    pub max_iter: usize,
}

impl Default for PsychometricFitOptions {
    fn default() -> Self {
        Self { restarts: 12, seed: 0, max_iter: 3000 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PsychometricFit {
    pub pooling_exp: f64,
    pub psycho_scale: f64,
    pub psycho_slope: f64,
    pub lapse_rate: f64,
    pub log_likelihood: f64,
}

const PSYCHO_BOUNDS: [(f64, f64); 4] = [
    (1.0, 4.0),  // pooling exponent
    (0.1, 10.0), // scale
    (0.5, 5.0),  // slope
    (0.0, 0.06), // lapse rate
];

/// Maximum-likelihood estimation of the pooling exponent and psychometric
/// parameters from 2AFC detection counts. The guess rate is fixed at 0.5;
/// each stimulus' pooled contrast is recomputed from its stored
/// coefficients for every candidate pooling exponent.
pub fn fit_psychometric(
    records: &[DetectionRecord],
    stimuli: &[DetectionStimulus],
    opts: &PsychometricFitOptions,
) -> Result<PsychometricFit> {
    if records.is_empty() {
        return Err(Error::NotEnoughData("no detection records".into()));
    }
    let mut levels: Vec<u64> = records.iter().map(|r| r.c_jnd.to_bits()).collect();
    levels.sort_unstable();
    levels.dedup();
    if levels.len() < 3 {
        return Err(Error::NotEnoughData(format!(
            "need at least 3 distinct contrast levels, got {}",
            levels.len()
        )));
    }
    let total_trials: u64 = records.iter().map(|r| u64::from(r.trials)).sum();
    let total_correct: u64 = records.iter().map(|r| u64::from(r.correct)).sum();
    if total_trials == 0 {
        return Err(Error::DegenerateData("no trials".into()));
    }
    let rate = total_correct as f64 / total_trials as f64;
    if records.iter().all(|r| r.correct == r.trials) {
        return Err(Error::DegenerateData("every response is correct; the slope is unbounded".into()));
    }
    if rate <= 0.5 {
        return Err(Error::DegenerateData(format!(
            "overall rate {rate:.3} does not exceed the 2AFC chance level"
        )));
    }
    let coeffs: Vec<&DetectionStimulus> = records
        .iter()
        .map(|r| {
            stimuli
                .iter()
                .find(|s| s.id == r.id)
                .ok_or_else(|| Error::NotEnoughData(format!("no stimulus coefficients for id '{}'", r.id)))
        })
        .collect::<Result<_>>()?;

    let p_g = 0.5;
    let nll = |x: &[f64]| {
        let (r, scale, slope, lapse) = (x[0], x[1], x[2], x[3]);
        let mut acc = 0.0;
        for (rec, stim) in records.iter().zip(&coeffs) {
            let c_m = stim.pooled(r);
            let rise = 1.0 - (-(c_m / scale).powf(slope)).exp();
            let psi = (p_g + (1.0 - p_g) * (1.0 - lapse) * rise).clamp(1e-9, 1.0 - 1e-9);
            acc -= f64::from(rec.correct) * psi.ln()
                + f64::from(rec.trials - rec.correct) * (1.0 - psi).ln();
        }
        acc
    };

    let defaults = SensitivityParams::<f64>::default();
    let base = vec![defaults.pooling_exp, defaults.psycho_scale, defaults.psycho_slope, 0.01];
    let mut starts = vec![base.clone()];
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..opts.restarts {
        starts.push(
            base.iter()
                .zip(&PSYCHO_BOUNDS)
                .map(|(&v, &(lo, hi))| (v + rng.gen_range(-0.25..0.25) * (hi - lo)).clamp(lo, hi))
                .collect(),
        );
    }
    let simplex_opts = SimplexOptions { max_iter: opts.max_iter, ftol: 1e-12, initial_step: 0.05 };
    let runs: Vec<_> = starts
        .par_iter()
        .map(|s| nelder_mead(nll, s, &PSYCHO_BOUNDS, &simplex_opts))
        .collect();
    let best = runs
        .iter()
        .min_by(|a, b| a.loss.partial_cmp(&b.loss).unwrap_or(std::cmp::Ordering::Equal))
        .expect("at least one start");
    if !best.loss.is_finite() {
        return Err(Error::FitNotConverged { best_loss: best.loss, best_params: best.x.clone() });
    }
    Ok(PsychometricFit {
        pooling_exp: best.x[0],
        psycho_scale: best.x[1],
        psycho_slope: best.x[2],
        lapse_rate: best.x[3],
        log_likelihood: -best.loss,
    })
}

// ---------------------------------------------------------------------------
// Cross-validation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct FoldResult {
    pub fold: usize,
    pub train_loss: f64,
    pub test_loss: f64,
    pub shape: ShapeParams<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CrossValidation {
    pub folds: Vec<FoldResult>,
    pub mean_train_loss: f64,
    pub mean_test_loss: f64,
    pub stdev_train_loss: f64,
    pub stdev_test_loss: f64,
    pub mean_shape: Vec<f64>,
    pub stdev_shape: Vec<f64>,
}

fn sample_stdev(values: &[f64], mean: f64) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (values.len() - 1) as f64).sqrt()
}

/// Deterministic seeded k-fold cross-validation of the shape fit. Records
/// are brought into a canonical order before the seeded shuffle, so fold
/// assignment does not depend on input order.
pub fn cross_validate(
    records: &[ThresholdRecord],
    temporal_poly: [f64; 4],
    k: usize,
    seed: u64,
    opts: &ShapeFitOptions,
) -> Result<CrossValidation> {
    if k < 2 {
        return Err(Error::NotEnoughData(format!("cross-validation needs k >= 2 folds, got {k}")));
    }
    if records.len() < k {
        return Err(Error::NotEnoughData(format!("{} records for {k} folds", records.len())));
    }
    let mut sorted = records.to_vec();
    sorted.sort_by(|a, b| {
        (a.f_h, a.f_v, a.f_t, a.e, a.threshold)
            .partial_cmp(&(b.f_h, b.f_v, b.f_t, b.e, b.threshold))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut order: Vec<usize> = (0..sorted.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let folds: Vec<Vec<usize>> =
        (0..k).map(|f| order.iter().copied().skip(f).step_by(k).collect()).collect();

    let results: Vec<Result<FoldResult>> = folds
        .par_iter()
        .enumerate()
        .map(|(fi, test_idx)| {
            let test: Vec<ThresholdRecord> = test_idx.iter().map(|&i| sorted[i]).collect();
            let train: Vec<ThresholdRecord> = (0..sorted.len())
                .filter(|i| !test_idx.contains(i))
                .map(|i| sorted[i])
                .collect();
            let fit = fit_shape_params(&train, temporal_poly, opts)?;
            let test_loss = shape_loss(&fit.shape, temporal_poly, &test);
            Ok(FoldResult { fold: fi + 1, train_loss: fit.loss, test_loss, shape: fit.shape })
        })
        .collect();
    let folds: Vec<FoldResult> = results.into_iter().collect::<Result<_>>()?;

    let train: Vec<f64> = folds.iter().map(|f| f.train_loss).collect();
    let test: Vec<f64> = folds.iter().map(|f| f.test_loss).collect();
    let mean_train_loss = train.iter().sum::<f64>() / k as f64;
    let mean_test_loss = test.iter().sum::<f64>() / k as f64;
    let shapes: Vec<Vec<f64>> = folds.iter().map(|f| f.shape.to_vec()).collect();
    let mut mean_shape = vec![0.0; 10];
    for s in &shapes {
        for (m, v) in mean_shape.iter_mut().zip(s) {
            *m += v / k as f64;
        }
    }
    let stdev_shape: Vec<f64> = (0..10)
        .map(|i| {
            let col: Vec<f64> = shapes.iter().map(|s| s[i]).collect();
            sample_stdev(&col, mean_shape[i])
        })
        .collect();
    Ok(CrossValidation {
        stdev_train_loss: sample_stdev(&train, mean_train_loss),
        stdev_test_loss: sample_stdev(&test, mean_test_loss),
        mean_train_loss,
        mean_test_loss,
        folds,
        mean_shape,
        stdev_shape,
    })
}

impl CrossValidation {
    /// Table with one row per fold plus mean and stdev rows: fold index,
    /// train and test loss, then the ten shape parameters.
    pub fn write_table<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "CV-fold,L_train,L_test,b1,b2,b3,b4,b51,b52,b53,b6,b7,b8")?;
        let row = |label: &str, lt: f64, te: f64, shape: &[f64]| {
            let cells: Vec<String> = shape.iter().map(|v| format!("{v:.3}")).collect();
            format!("{label},{lt:.3},{te:.3},{}", cells.join(","))
        };
        for f in &self.folds {
            writeln!(out, "{}", row(&f.fold.to_string(), f.train_loss, f.test_loss, &f.shape.to_vec()))?;
        }
        writeln!(out, "{}", row("Mean", self.mean_train_loss, self.mean_test_loss, &self.mean_shape))?;
        writeln!(
            out,
            "{}",
            row("Stdev", self.stdev_train_loss, self.stdev_test_loss, &self.stdev_shape)
        )?;
        Ok(())
    }
}
