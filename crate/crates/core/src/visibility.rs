//! End-to-end visibility prediction: JND scaling of patch spectra, Minkowski
//! pooling, probability mapping, and whole-video heatmap grids.
//!
//! The hot path is [`PatchAnalyzer`], which precomputes the transformed
//! frequency axes and amplitude normalization for a fixed patch size and
//! folds JND scaling and pooling into a single pass over raw DCT
//! coefficients: pooled contrast is accumulated as
//! `sum((sens * norm)^r * |coeff|^r)` so the per-coefficient sensitivity
//! weights depend only on the patch eccentricity and can be reused across
//! time windows at the same grid cell.

use std::io::Write;
use std::sync::OnceLock;

use rayon::prelude::*;

use crate::dct::{Dct3, PatchDims, PatchVolume};
use crate::error::{Error, Result};
use crate::geometry::{DisplayGeometry, FrequencyAxes, GazePoint};
use crate::model::{softplus, SensitivityParams, StimulusCoords};
use crate::scalar::Scalar;

/// Keep the per-cell sensitivity-weight cache below this many bytes when the
/// caller leaves caching on automatic.
const AUTO_CACHE_LIMIT_BYTES: usize = 1 << 30;

/// JND-scale a Weber contrast volume: every component is multiplied by the
/// linear sensitivity at its frequency coordinates and the patch
/// eccentricity.
pub fn jnd_scale<S: Scalar>(
    contrast: &[S],
    dims: PatchDims,
    axes: &FrequencyAxes,
    ecc_deg: f64,
    params: &SensitivityParams<S>,
) -> Result<Vec<S>> {
    if contrast.len() != dims.len() {
        return Err(Error::DimensionMismatch(format!(
            "contrast volume has {} entries, dims say {}",
            contrast.len(),
            dims.len()
        )));
    }
    let e = S::from_f64(ecc_deg);
    let mut out = Vec::with_capacity(contrast.len());
    let mut i = 0;
    for kt in 0..dims.nt {
        let f_t = S::from_f64(axes.temporal_hz[kt]);
        for kv in 0..dims.nv {
            let f_v = S::from_f64(axes.vertical_cpd[kv]);
            for kh in 0..dims.nh {
                let f_h = S::from_f64(axes.horizontal_cpd[kh]);
                let sens = params.linear_sensitivity(StimulusCoords::new(f_t, f_h, f_v, e));
                out.push(sens * contrast[i]);
                i += 1;
            }
        }
    }
    Ok(out)
}

/// Minkowski pooling of a JND-scaled volume. Components with `k_t = 0` (all
/// temporally static content) are excluded.
pub fn minkowski_pool<S: Scalar>(c_jnd: &[S], dims: PatchDims, r: S) -> S {
    assert!(r >= S::one(), "pooling exponent must be >= 1");
    assert_eq!(c_jnd.len(), dims.len());
    let mut acc = S::zero();
    for &v in &c_jnd[dims.plane()..] {
        if v != S::zero() {
            acc += v.abs().powf(r);
        }
    }
    acc.powf(r.recip())
}

/// Pooled contrast and detection probabilities of one patch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatchProbability {
    /// Pooled JND-scaled contrast.
    pub c_m: f64,
    /// Raw detection probability (floored at the guess rate).
    pub psi: f64,
    /// Normalized probability: 0 static, 1 always detected.
    pub p_norm: f64,
}

/// Reusable per-thread buffers for [`PatchAnalyzer`].
pub struct PatchScratch<S> {
    coeff: Vec<S>,
    tmp: Vec<S>,
    plane_scale: Vec<S>,
    plane_shift: Vec<S>,
    weights: Vec<S>,
}

/// Fused predictor for one patch size under one geometry and parameter set.
/// Immutable after construction and safe to share across workers.
pub struct PatchAnalyzer<S: Scalar> {
    dims: PatchDims,
    dct: Dct3<S>,
    params: SensitivityParams<S>,
    /// `ln(1 + f)` per index along each axis.
    ft_log: Vec<S>,
    fh_log: Vec<S>,
    fv_log: Vec<S>,
    /// Spatial amplitude normalization per plane index (`norm_v * norm_h`).
    plane_norm: Vec<S>,
    /// Temporal amplitude normalization per `k_t`.
    t_norm: Vec<S>,
    axes: FrequencyAxes,
}

impl<S: Scalar> PatchAnalyzer<S> {
    pub fn new(
        geom: &DisplayGeometry,
        params: &SensitivityParams<S>,
        dims: PatchDims,
    ) -> Result<Self> {
        dims.validate()?;
        params.validate()?;
        let axes = geom.component_frequencies(dims);
        let tolog = |f: &f64| S::from_f64(f.ln_1p());
        let dct = Dct3::new(dims)?;
        let (t_norm_s, h_norm_s, v_norm_s) = dct.axis_norms();
        let mut plane_norm = Vec::with_capacity(dims.plane());
        for kv in 0..dims.nv {
            for kh in 0..dims.nh {
                plane_norm.push(v_norm_s[kv] * h_norm_s[kh]);
            }
        }
        Ok(Self {
            dims,
            params: params.clone(),
            ft_log: axes.temporal_hz.iter().map(tolog).collect(),
            fh_log: axes.horizontal_cpd.iter().map(tolog).collect(),
            fv_log: axes.vertical_cpd.iter().map(tolog).collect(),
            plane_norm,
            t_norm: t_norm_s.to_vec(),
            dct,
            axes,
        })
    }

    pub fn dims(&self) -> PatchDims {
        self.dims
    }

    pub fn params(&self) -> &SensitivityParams<S> {
        &self.params
    }

    pub fn frequency_axes(&self) -> &FrequencyAxes {
        &self.axes
    }

    pub fn make_scratch(&self) -> PatchScratch<S> {
        let len = self.dims.len();
        let plane = self.dims.plane();
        PatchScratch {
            coeff: vec![S::zero(); len],
            tmp: vec![S::zero(); len],
            plane_scale: vec![S::zero(); plane],
            plane_shift: vec![S::zero(); plane],
            weights: vec![S::zero(); len - plane],
        }
    }

    /// Number of pooled coefficients (everything with `k_t > 0`).
    pub fn weight_len(&self) -> usize {
        self.dims.len() - self.dims.plane()
    }

    /// Linear sensitivity at every coefficient index (including the static
    /// plane), in coefficient order.
    pub fn sensitivity_volume(&self, ecc_deg: f64) -> Vec<S> {
        let e = S::from_f64(ecc_deg);
        let mut out = Vec::with_capacity(self.dims.len());
        for kt in 0..self.dims.nt {
            let f_t = S::from_f64(self.axes.temporal_hz[kt]);
            for kv in 0..self.dims.nv {
                let f_v = S::from_f64(self.axes.vertical_cpd[kv]);
                for kh in 0..self.dims.nh {
                    let f_h = S::from_f64(self.axes.horizontal_cpd[kh]);
                    out.push(self.params.linear_sensitivity(StimulusCoords::new(f_t, f_h, f_v, e)));
                }
            }
        }
        out
    }

    fn fill_planes(&self, ecc_deg: f64, plane_scale: &mut [S], plane_shift: &mut [S]) {
        let b = &self.params.shape;
        let e_log = S::from_f64(ecc_deg.ln_1p());
        let shifted = b.shift_freq != S::zero() || b.shift_ecc != S::zero();
        let mut i = 0;
        for kv in 0..self.dims.nv {
            let fv = self.fv_log[kv];
            for kh in 0..self.dims.nh {
                plane_scale[i] = self.params.scale_factor(self.fh_log[kh], fv, e_log);
                plane_shift[i] = if shifted {
                    let s = self.fh_log[kh] + fv;
                    -b.shift_base + b.shift_freq * s + b.shift_ecc * e_log
                } else {
                    -b.shift_base
                };
                i += 1;
            }
        }
    }

    /// Pooling weight `(sens * norm)^r` for every coefficient with
    /// `k_t > 0`, at the given eccentricity.
    pub fn pooling_weights(&self, ecc_deg: f64) -> Vec<S> {
        let mut out = vec![S::zero(); self.weight_len()];
        let mut plane_scale = vec![S::zero(); self.dims.plane()];
        let mut plane_shift = vec![S::zero(); self.dims.plane()];
        self.pooling_weights_into(ecc_deg, &mut plane_scale, &mut plane_shift, &mut out);
        out
    }

    fn pooling_weights_into(
        &self,
        ecc_deg: f64,
        plane_scale: &mut [S],
        plane_shift: &mut [S],
        out: &mut [S],
    ) {
        let b = &self.params.shape;
        let r = self.params.pooling_exp;
        let plane = self.dims.plane();
        self.fill_planes(ecc_deg, plane_scale, plane_shift);
        let uniform_shift = b.shift_freq == S::zero() && b.shift_ecc == S::zero();
        for kt in 1..self.dims.nt {
            let ft = self.ft_log[kt];
            let chunk = &mut out[(kt - 1) * plane..kt * plane];
            if uniform_shift {
                // The temporal shift is constant, so the softplus-truncated
                // curve value depends on k_t alone.
                let ssp = softplus(self.params.delange_poly(ft - b.shift_base));
                let tn = self.t_norm[kt];
                for ((w, &scale), &norm) in chunk.iter_mut().zip(&*plane_scale).zip(&self.plane_norm) {
                    let s = scale * ssp;
                    let sens = if s > S::zero() { s.exp_m1() } else { S::zero() };
                    *w = (sens * norm * tn).powf(r);
                }
            } else {
                let tn = self.t_norm[kt];
                for (((w, &scale), &shift), &norm) in chunk
                    .iter_mut()
                    .zip(&*plane_scale)
                    .zip(&*plane_shift)
                    .zip(&self.plane_norm)
                {
                    let ssp = softplus(self.params.delange_poly(ft + shift));
                    let s = scale * ssp;
                    let sens = if s > S::zero() { s.exp_m1() } else { S::zero() };
                    *w = (sens * norm * tn).powf(r);
                }
            }
        }
    }

    /// Pool raw coefficients against precomputed weights.
    fn pool_raw(&self, coeff: &[S], weights: &[S]) -> S {
        let r = self.params.pooling_exp;
        let plane = self.dims.plane();
        let dc = coeff[0] * self.t_norm[0] * self.plane_norm[0];
        let denom = dc.max(self.params.min_luminance);
        let mut acc = S::zero();
        for (&c, &w) in coeff[plane..].iter().zip(weights) {
            if c != S::zero() {
                acc += w * c.abs().powf(r);
            }
        }
        acc.powf(r.recip()) / denom
    }

    fn finish(&self, c_m: S) -> PatchProbability {
        let psi = self
            .params
            .detection_probability(c_m)
            .expect("pooled contrast is nonnegative by construction");
        let p_norm = self.params.normalized_probability(psi);
        PatchProbability { c_m: c_m.to_f64(), psi: psi.to_f64(), p_norm: p_norm.to_f64() }
    }

    /// Analyze raw patch values (luminance, cd/m², patch layout) at one
    /// eccentricity, computing the sensitivity weights on the fly.
    pub fn analyze_values(
        &self,
        values: &[S],
        ecc_deg: f64,
        scratch: &mut PatchScratch<S>,
    ) -> Result<PatchProbability> {
        if values.len() != self.dims.len() {
            return Err(Error::DimensionMismatch(format!(
                "patch has {} values, analyzer expects {}",
                values.len(),
                self.dims.len()
            )));
        }
        self.pooling_weights_into(
            ecc_deg,
            &mut scratch.plane_scale,
            &mut scratch.plane_shift,
            &mut scratch.weights,
        );
        self.dct.forward_raw(values, &mut scratch.coeff, &mut scratch.tmp);
        let c_m = self.pool_raw(&scratch.coeff, &scratch.weights);
        Ok(self.finish(c_m))
    }

    /// Analyze with weights computed earlier for this cell's eccentricity.
    pub fn analyze_values_cached(
        &self,
        values: &[S],
        weights: &[S],
        scratch: &mut PatchScratch<S>,
    ) -> Result<PatchProbability> {
        if values.len() != self.dims.len() || weights.len() != self.weight_len() {
            return Err(Error::DimensionMismatch("patch or weight length mismatch".into()));
        }
        self.dct.forward_raw(values, &mut scratch.coeff, &mut scratch.tmp);
        let c_m = self.pool_raw(&scratch.coeff, weights);
        Ok(self.finish(c_m))
    }
}

/// Full pipeline for one patch: decomposition, Weber contrast, JND scaling,
/// pooling, psychometric mapping.
///
/// `expected_dims` is the calibrated window size; passing a patch of any
/// other size is an error, so callers working at a non-calibrated size must
/// opt in by stating it explicitly.
pub fn patch_probability<S: Scalar>(
    patch: &PatchVolume<S>,
    ecc_deg: f64,
    params: &SensitivityParams<S>,
    geom: &DisplayGeometry,
    expected_dims: PatchDims,
) -> Result<PatchProbability> {
    if patch.dims != expected_dims {
        return Err(Error::DimensionMismatch(format!(
            "patch is {} but the analysis window is {}; pass matching dims to override",
            patch.dims, expected_dims
        )));
    }
    let analyzer = PatchAnalyzer::new(geom, params, patch.dims)?;
    let mut scratch = analyzer.make_scratch();
    analyzer.analyze_values(&patch.values, ecc_deg, &mut scratch)
}

/// Streaming supplier of video frames as luminance (cd/m², row-major).
pub trait FrameSource<S: Scalar> {
    fn width(&self) -> usize;
    fn height(&self) -> usize;
    fn frame_count(&self) -> usize;
    fn fill_frame(&mut self, index: usize, out: &mut [S]) -> Result<()>;
}

/// In-memory frame sequence.
#[derive(Debug, Clone)]
pub struct MemoryFrames<S> {
    width: usize,
    height: usize,
    frames: Vec<Vec<S>>,
}

impl<S: Scalar> MemoryFrames<S> {
    pub fn new(width: usize, height: usize) -> Self {
        Self { width, height, frames: Vec::new() }
    }

    pub fn push_frame(&mut self, frame: Vec<S>) -> Result<()> {
        if frame.len() != self.width * self.height {
            return Err(Error::DimensionMismatch(format!(
                "frame has {} samples, expected {}",
                frame.len(),
                self.width * self.height
            )));
        }
        self.frames.push(frame);
        Ok(())
    }

    /// Build from a luminance function of `(frame, x, y)`.
    pub fn from_fn(
        width: usize,
        height: usize,
        count: usize,
        mut f: impl FnMut(usize, usize, usize) -> S,
    ) -> Self {
        let mut out = Self::new(width, height);
        for t in 0..count {
            let mut frame = Vec::with_capacity(width * height);
            for y in 0..height {
                for x in 0..width {
                    frame.push(f(t, x, y));
                }
            }
            out.frames.push(frame);
        }
        out
    }

    pub fn frame(&self, i: usize) -> &[S] {
        &self.frames[i]
    }
}

impl<S: Scalar> FrameSource<S> for MemoryFrames<S> {
    fn width(&self) -> usize {
        self.width
    }
    fn height(&self) -> usize {
        self.height
    }
    fn frame_count(&self) -> usize {
        self.frames.len()
    }
    fn fill_frame(&mut self, index: usize, out: &mut [S]) -> Result<()> {
        out.copy_from_slice(&self.frames[index]);
        Ok(())
    }
}

/// One grid cell of a [`VisibilityMap`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VisibilityCell {
    pub ecc_deg: f64,
    pub c_m: f64,
    pub psi: f64,
    pub p_norm: f64,
}

/// How much of the input the complete-patch grid covered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct Coverage {
    pub total_frames: usize,
    pub used_frames: usize,
    pub frame_width: usize,
    pub frame_height: usize,
    pub used_width: usize,
    pub used_height: usize,
}

/// Per-patch grid of pooled contrast and detection probabilities for a
/// video under a gaze point. Cells are stored `[window][row][col]`.
#[derive(Debug, Clone)]
pub struct VisibilityMap {
    pub windows: usize,
    pub cols: usize,
    pub rows: usize,
    pub patch_dims: PatchDims,
    pub cells: Vec<VisibilityCell>,
    pub coverage: Coverage,
}

impl VisibilityMap {
    pub fn cell(&self, window: usize, row: usize, col: usize) -> &VisibilityCell {
        &self.cells[(window * self.rows + row) * self.cols + col]
    }

    pub fn window_cells(&self, window: usize) -> &[VisibilityCell] {
        let n = self.rows * self.cols;
        &self.cells[window * n..(window + 1) * n]
    }

    /// One row per cell: `t_idx,x_idx,y_idx,ecc_deg,C_M,psi,p_norm`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t_idx,x_idx,y_idx,ecc_deg,C_M,psi,p_norm")?;
        for w in 0..self.windows {
            for row in 0..self.rows {
                for col in 0..self.cols {
                    let c = self.cell(w, row, col);
                    writeln!(out, "{},{},{},{},{},{},{}", w, col, row, c.ecc_deg, c.c_m, c.psi, c.p_norm)?;
                }
            }
        }
        Ok(())
    }
}

/// Options for [`analyze_video`].
#[derive(Debug, Clone)]
pub struct AnalyzeOptions {
    pub patch_dims: PatchDims,
    /// Reuse per-cell sensitivity weights across time windows. `None`
    /// decides automatically from the grid size and gaze uniformity.
    pub cache_sensitivity: Option<bool>,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        Self { patch_dims: PatchDims::DEFAULT, cache_sensitivity: None }
    }
}

/// Analyze a whole video under a fixed gaze point.
pub fn analyze_video<S: Scalar>(
    source: &mut dyn FrameSource<S>,
    gaze: GazePoint,
    geom: &DisplayGeometry,
    params: &SensitivityParams<S>,
    opts: &AnalyzeOptions,
) -> Result<VisibilityMap> {
    let nt = opts.patch_dims.nt;
    let frames = source.frame_count();
    let windows = frames / nt;
    if windows == 0 {
        return Err(Error::NotEnoughData(format!(
            "need at least {nt} frames for one window, got {frames}"
        )));
    }
    analyze_video_traced(source, &vec![gaze; windows], geom, params, opts)
}

/// Analyze a whole video with one gaze point per 25-frame window.
pub fn analyze_video_traced<S: Scalar>(
    source: &mut dyn FrameSource<S>,
    gaze_per_window: &[GazePoint],
    geom: &DisplayGeometry,
    params: &SensitivityParams<S>,
    opts: &AnalyzeOptions,
) -> Result<VisibilityMap> {
    let dims = opts.patch_dims;
    dims.validate()?;
    let (fw, fh) = (source.width(), source.height());
    if fw != geom.width_px as usize || fh != geom.height_px as usize {
        return Err(Error::DimensionMismatch(format!(
            "frames are {fw}x{fh} but geometry says {}x{}",
            geom.width_px, geom.height_px
        )));
    }
    let frames = source.frame_count();
    let windows = frames / dims.nt;
    if windows == 0 {
        return Err(Error::NotEnoughData(format!(
            "need at least {} frames for one window, got {frames}",
            dims.nt
        )));
    }
    if gaze_per_window.len() != windows {
        return Err(Error::DimensionMismatch(format!(
            "{} gaze points for {} windows",
            gaze_per_window.len(),
            windows
        )));
    }
    let cols = fw / dims.nh;
    let rows = fh / dims.nv;
    if cols == 0 || rows == 0 {
        return Err(Error::DimensionMismatch(format!(
            "frames are {fw}x{fh}, smaller than one {}x{} patch",
            dims.nh, dims.nv
        )));
    }
    let cells_per_window = cols * rows;
    let coverage = Coverage {
        total_frames: frames,
        used_frames: windows * dims.nt,
        frame_width: fw,
        frame_height: fh,
        used_width: cols * dims.nh,
        used_height: rows * dims.nv,
    };
    if coverage.used_frames < frames || coverage.used_width < fw || coverage.used_height < fh {
        log::info!(
            "partial border patches skipped: using {}/{} frames, {}x{} of {}x{} px",
            coverage.used_frames,
            frames,
            coverage.used_width,
            coverage.used_height,
            fw,
            fh
        );
    }

    let analyzer = PatchAnalyzer::new(geom, params, dims)?;
    let uniform_gaze = gaze_per_window.windows(2).all(|w| w[0] == w[1]);
    let cache_bytes = cells_per_window * analyzer.weight_len() * std::mem::size_of::<S>();
    let use_cache = opts
        .cache_sensitivity
        .unwrap_or(windows > 1 && uniform_gaze && cache_bytes <= AUTO_CACHE_LIMIT_BYTES);
    let cache: Vec<OnceLock<Box<[S]>>> =
        if use_cache { (0..cells_per_window).map(|_| OnceLock::new()).collect() } else { Vec::new() };

    let mut cells = Vec::with_capacity(windows * cells_per_window);
    let mut window_buf = vec![S::zero(); dims.nt * fw * fh];
    for (w, gaze) in gaze_per_window.iter().enumerate() {
        for t in 0..dims.nt {
            source.fill_frame(w * dims.nt + t, &mut window_buf[t * fw * fh..(t + 1) * fw * fh])?;
        }
        let ecc: Vec<f64> = (0..cells_per_window)
            .map(|cell| {
                let (row, col) = (cell / cols, cell % cols);
                let center = GazePoint::new(
                    (col * dims.nh) as f64 + dims.nh as f64 / 2.0,
                    (row * dims.nv) as f64 + dims.nv as f64 / 2.0,
                );
                geom.eccentricity_deg(*gaze, center)
            })
            .collect();

        let window_cells: Vec<VisibilityCell> = (0..cells_per_window)
            .into_par_iter()
            .map_init(
                || (analyzer.make_scratch(), vec![S::zero(); dims.len()]),
                |(scratch, patch_buf), cell| {
                    let (row, col) = (cell / cols, cell % cols);
                    extract_patch(&window_buf, fw, fh, dims, col * dims.nh, row * dims.nv, patch_buf);
                    let prob = if use_cache && uniform_gaze {
                        let weights = cache[cell]
                            .get_or_init(|| analyzer.pooling_weights(ecc[cell]).into_boxed_slice());
                        analyzer.analyze_values_cached(patch_buf, weights, scratch)
                    } else {
                        analyzer.analyze_values(patch_buf, ecc[cell], scratch)
                    }
                    .expect("patch buffer sized by construction");
                    VisibilityCell {
                        ecc_deg: ecc[cell],
                        c_m: prob.c_m,
                        psi: prob.psi,
                        p_norm: prob.p_norm,
                    }
                },
            )
            .collect();
        cells.extend(window_cells);
    }

    Ok(VisibilityMap { windows, cols, rows, patch_dims: dims, cells, coverage })
}

fn extract_patch<S: Scalar>(
    window: &[S],
    fw: usize,
    fh: usize,
    dims: PatchDims,
    x0: usize,
    y0: usize,
    out: &mut [S],
) {
    debug_assert_eq!(out.len(), dims.len());
    let frame_len = fw * fh;
    for t in 0..dims.nt {
        let base_t = t * frame_len;
        for v in 0..dims.nv {
            let src = base_t + (y0 + v) * fw + x0;
            let dst = (t * dims.nv + v) * dims.nh;
            out[dst..dst + dims.nh].copy_from_slice(&window[src..src + dims.nh]);
        }
    }
}
