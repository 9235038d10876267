//! Imperceptible-transition optimizer: choose per-window blend increments
//! that hold the predicted detection probability of the changing content at
//! a target level, precompute eccentricity-indexed schedules, and replay
//! them gaze-adaptively.
//!
//! Blending is linear and the per-window alpha ramp is linear, so a blended
//! 25-frame window decomposes as `static(alpha_start) + delta_alpha * ramp`
//! where the ramp volume is fixed per sub-window. Its spectrum is computed
//! once and each probability query during root finding costs O(1); the
//! faithful frame-building path ([`window_probability`]) is kept for
//! verification and reporting.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dct::{dct1_forward, Dct2, PatchDims};
use crate::error::{Error, Result};
use crate::geometry::DisplayGeometry;
use crate::model::SensitivityParams;
use crate::solve::brent_root;
use crate::visibility::PatchAnalyzer;

/// Absolute tolerance on the achieved detection probability.
const P_TOLERANCE: f64 = 0.005;
/// Bracket tolerance on the blend increment.
const STEP_XTOL: f64 = 1e-5;
/// Smallest step the solver will emit when even that is too visible.
const MIN_STEP: f64 = 1e-4;
/// Hard cap on schedule length.
const MAX_WINDOWS: usize = 65_536;

/// A display-linear grayscale image, row-major, values in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct LinearImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl LinearImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "image data has {} samples for {width}x{height}",
                data.len()
            )));
        }
        Ok(Self { width, height, data })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self { width, height, data }
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }
}

/// Linear blend `(1 - alpha) a + alpha b` in display-linear values.
pub fn blend(a: &LinearImage, b: &LinearImage, alpha: f64) -> Result<LinearImage> {
    if a.width != b.width || a.height != b.height {
        return Err(Error::DimensionMismatch(format!(
            "cannot blend {}x{} with {}x{}",
            a.width, a.height, b.width, b.height
        )));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Domain(format!("alpha must be in [0, 1], got {alpha}")));
    }
    let data = a.data.iter().zip(&b.data).map(|(x, y)| (1.0 - alpha) * x + alpha * y).collect();
    Ok(LinearImage { width: a.width, height: a.height, data })
}

/// How a solved step terminated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepKind {
    /// Root found: the window meets the target probability.
    Converged,
    /// Even the full remaining blend stays under the target; the transition
    /// finishes early.
    FinishesEarly,
    /// Even the minimal step exceeds the target; emitted with a warning.
    MinStep,
}

/// One solved blend increment.
#[derive(Debug, Clone, Copy)]
pub struct StepOutcome {
    pub delta: f64,
    pub kind: StepKind,
    /// Probability predicted for the accepted step (fast path).
    pub p: f64,
}

/// Per-eccentricity alpha sequences holding a constant target detection
/// probability; window `n` blends from `alphas[n]` to `alphas[n + 1]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransitionSchedule {
    /// Target normalized detection probability.
    pub target_p: f64,
    /// Ascending eccentricities, degrees.
    pub eccentricities_deg: Vec<f64>,
    /// One monotone sequence per eccentricity, each starting at 0 and
    /// ending at exactly 1.
    pub alphas: Vec<Vec<f64>>,
    /// Window indices whose step hit a boundary rule (early finish or
    /// minimum step), per eccentricity.
    pub flagged: Vec<Vec<usize>>,
    /// Frames per optimization window.
    pub window_frames: usize,
    /// Display refresh rate the schedule was computed for.
    pub fps: f64,
}

impl TransitionSchedule {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schedule serializes")
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let s: Self = serde_json::from_str(json)?;
        if s.eccentricities_deg.len() != s.alphas.len() || s.alphas.is_empty() {
            return Err(Error::Parse("schedule eccentricities and sequences disagree".into()));
        }
        Ok(s)
    }

    /// Number of windows to completion at a stored eccentricity index.
    pub fn windows_at(&self, idx: usize) -> usize {
        self.alphas[idx].len() - 1
    }

    fn sequence_alpha(&self, idx: usize, progress: f64) -> f64 {
        let seq = &self.alphas[idx];
        let pos = progress.clamp(0.0, 1.0) * (seq.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        let frac = pos - lo as f64;
        seq[lo] + (seq[hi] - seq[lo]) * frac
    }

    fn bracket(&self, e: f64) -> (usize, usize, f64) {
        let eccs = &self.eccentricities_deg;
        if e <= eccs[0] {
            return (0, 0, 0.0);
        }
        if e >= *eccs.last().unwrap() {
            return (eccs.len() - 1, eccs.len() - 1, 0.0);
        }
        let hi = eccs.iter().position(|&x| x >= e).unwrap();
        let lo = hi - 1;
        let frac = (e - eccs[lo]) / (eccs[hi] - eccs[lo]);
        (lo, hi, frac)
    }

    /// Alpha at a given eccentricity and normalized progress: linear
    /// interpolation between the two bracketing sequences on a common
    /// progress axis. Eccentricities outside the stored range clamp.
    pub fn alpha_at(&self, e: f64, progress: f64) -> f64 {
        let (lo, hi, frac) = self.bracket(e);
        let a = self.sequence_alpha(lo, progress);
        let b = self.sequence_alpha(hi, progress);
        a + (b - a) * frac
    }

    /// Progress advanced by one played window at eccentricity `e`.
    pub fn progress_rate(&self, e: f64) -> f64 {
        let (lo, hi, frac) = self.bracket(e);
        let r_lo = 1.0 / self.windows_at(lo) as f64;
        let r_hi = 1.0 / self.windows_at(hi) as f64;
        r_lo + (r_hi - r_lo) * frac
    }
}

/// Stateful gaze-adaptive playback of a schedule. The emitted alpha is
/// monotone even when the gaze moves between eccentricities mid-transition.
#[derive(Debug, Clone)]
pub struct TransitionPlayer<'a> {
    schedule: &'a TransitionSchedule,
    progress: f64,
    alpha: f64,
}

impl<'a> TransitionPlayer<'a> {
    pub fn new(schedule: &'a TransitionSchedule) -> Self {
        Self { schedule, progress: 0.0, alpha: 0.0 }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn finished(&self) -> bool {
        self.alpha >= 1.0
    }

    /// Advance one 25-frame window at the current eccentricity; returns the
    /// `(alpha_start, alpha_end)` pair for that window.
    pub fn advance_window(&mut self, e: f64) -> (f64, f64) {
        let start = self.alpha;
        self.progress = (self.progress + self.schedule.progress_rate(e)).min(1.0);
        let target = self.schedule.alpha_at(e, self.progress);
        self.alpha = target.max(self.alpha).min(1.0);
        if self.progress >= 1.0 {
            self.alpha = 1.0;
        }
        (start, self.alpha)
    }
}

/// Options for the transition solver.
#[derive(Debug, Clone)]
pub struct TransitionOptions {
    pub patch_dims: PatchDims,
    pub p_tolerance: f64,
    pub min_step: f64,
    pub max_windows: usize,
}

impl Default for TransitionOptions {
    fn default() -> Self {
        Self {
            patch_dims: PatchDims::DEFAULT,
            p_tolerance: P_TOLERANCE,
            min_step: MIN_STEP,
            max_windows: MAX_WINDOWS,
        }
    }
}

/// Precomputed per-sub-window data that does not depend on eccentricity.
struct SubWindow {
    /// Raw 2-D spectrum of the luminance difference, row-major.
    diff_raw: Vec<f64>,
    /// Trapezoid-weighted mean luminance of the source sub-window.
    dc_source: f64,
    /// Trapezoid-weighted mean luminance difference (target minus source).
    dc_diff: f64,
}

/// Scalar model of one sub-window under blending at one eccentricity:
/// `C_M(a0, da) = da * gain / max(dc_source + a0 dc_diff + da dc_diff / 2, l_min)`.
struct SubBasis {
    gain: f64,
    dc_source: f64,
    dc_diff: f64,
}

impl SubBasis {
    fn pooled(&self, alpha_start: f64, delta: f64, l_min: f64) -> f64 {
        let dc = self.dc_source + alpha_start * self.dc_diff + 0.5 * delta * self.dc_diff;
        delta * self.gain / dc.max(l_min)
    }
}

/// Transition solver bound to one image pair, geometry, and parameter set.
pub struct TransitionSolver {
    geom: DisplayGeometry,
    params: SensitivityParams<f64>,
    opts: TransitionOptions,
    analyzer: PatchAnalyzer<f64>,
    /// Temporal DCT of the unit alpha ramp, `k_t >= 1` entries.
    ramp_ac: Vec<f64>,
    subwindows: Vec<SubWindow>,
    source: LinearImage,
    target: LinearImage,
    grid_cols: usize,
    grid_rows: usize,
}

impl TransitionSolver {
    pub fn new(
        source: &LinearImage,
        target: &LinearImage,
        geom: &DisplayGeometry,
        params: &SensitivityParams<f64>,
        opts: TransitionOptions,
    ) -> Result<Self> {
        if source.width != target.width || source.height != target.height {
            return Err(Error::DimensionMismatch("image pair sizes differ".into()));
        }
        let dims = opts.patch_dims;
        dims.validate()?;
        let cols = source.width / dims.nh;
        let rows = source.height / dims.nv;
        if cols == 0 || rows == 0 {
            return Err(Error::DimensionMismatch(format!(
                "images are {}x{}, smaller than one {}x{} sub-window",
                source.width, source.height, dims.nh, dims.nv
            )));
        }
        let analyzer = PatchAnalyzer::new(geom, params, dims)?;

        // Unit alpha ramp over the window, AC part of its temporal spectrum.
        let ramp: Vec<f64> = (0..dims.nt).map(|t| t as f64 / (dims.nt as f64 - 1.0)).collect();
        let ramp_ac = dct1_forward(&ramp)?[1..].to_vec();

        let plan = Dct2::<f64>::new(dims.nh, dims.nv)?;
        let plane = dims.plane();
        let lum_scale = geom.peak_luminance - geom.black_luminance;
        let mut subwindows = Vec::with_capacity(cols * rows);
        let mut buf = vec![0.0; plane];
        let mut out = vec![0.0; plane];
        let mut scratch = vec![0.0; plane];
        for row in 0..rows {
            for col in 0..cols {
                let (x0, y0) = (col * dims.nh, row * dims.nv);
                // Luminance difference plane.
                for v in 0..dims.nv {
                    for h in 0..dims.nh {
                        buf[v * dims.nh + h] = lum_scale
                            * (target.at(x0 + h, y0 + v) - source.at(x0 + h, y0 + v));
                    }
                }
                plan.forward_raw(&buf, &mut out, &mut scratch);
                let diff_raw = out.clone();
                let dc_diff = plan.dc(&out);
                // Source luminance plane, only its mean is needed.
                for v in 0..dims.nv {
                    for h in 0..dims.nh {
                        buf[v * dims.nh + h] = geom.code_to_luminance(source.at(x0 + h, y0 + v));
                    }
                }
                plan.forward_raw(&buf, &mut out, &mut scratch);
                let dc_source = plan.dc(&out);
                subwindows.push(SubWindow { diff_raw, dc_source, dc_diff });
            }
        }

        Ok(Self {
            geom: geom.clone(),
            params: params.clone(),
            opts,
            analyzer,
            ramp_ac,
            subwindows,
            source: source.clone(),
            target: target.clone(),
            grid_cols: cols,
            grid_rows: rows,
        })
    }

    pub fn grid(&self) -> (usize, usize) {
        (self.grid_cols, self.grid_rows)
    }

    /// Pool the fixed ramp spectrum of every sub-window against the
    /// sensitivity weights at one eccentricity.
    fn bases_at(&self, ecc_deg: f64) -> Vec<SubBasis> {
        let dims = self.opts.patch_dims;
        let plane = dims.plane();
        let r = self.params.pooling_exp;
        let weights = self.analyzer.pooling_weights(ecc_deg);
        self.subwindows
            .iter()
            .map(|sw| {
                let mut acc = 0.0;
                for (kt, &tr) in self.ramp_ac.iter().enumerate() {
                    let w = &weights[kt * plane..(kt + 1) * plane];
                    if tr == 0.0 {
                        continue;
                    }
                    let tr_abs = tr.abs();
                    for (&wk, &sd) in w.iter().zip(&sw.diff_raw) {
                        if sd != 0.0 && wk != 0.0 {
                            acc += wk * (tr_abs * sd.abs()).powf(r);
                        }
                    }
                }
                SubBasis {
                    gain: acc.powf(1.0 / r),
                    dc_source: sw.dc_source,
                    dc_diff: sw.dc_diff,
                }
            })
            .collect()
    }

    fn probability(&self, basis: &SubBasis, alpha_start: f64, delta: f64) -> f64 {
        let c_m = basis.pooled(alpha_start, delta, self.params.min_luminance);
        let psi = self.params.detection_probability(c_m).expect("c_m >= 0");
        self.params.normalized_probability(psi)
    }

    /// Max-pooled probability over sub-windows for one candidate step
    /// (fast path).
    fn step_probability(&self, bases: &[SubBasis], alpha_start: f64, delta: f64) -> f64 {
        bases
            .iter()
            .map(|b| self.probability(b, alpha_start, delta))
            .fold(0.0, f64::max)
    }

    /// Solve one window step: the largest increment whose per-sub-window
    /// probability stays at the target, i.e. the minimum over sub-windows of
    /// each sub-window's own root.
    fn solve_step_bases(&self, bases: &[SubBasis], alpha_start: f64, target_p: f64) -> StepOutcome {
        assert!((0.0..1.0).contains(&target_p), "target probability must be in (0, 1)");
        let remaining = 1.0 - alpha_start;
        let mut delta = remaining;
        let mut kind = StepKind::FinishesEarly;
        for basis in bases {
            if self.probability(basis, alpha_start, remaining) < target_p {
                continue; // This sub-window finishes early even at full step.
            }
            if self.probability(basis, alpha_start, self.opts.min_step) > target_p {
                if self.opts.min_step < delta {
                    delta = self.opts.min_step;
                    kind = StepKind::MinStep;
                } else if self.opts.min_step == delta {
                    kind = StepKind::MinStep;
                }
                log::warn!(
                    "transition step at alpha {alpha_start:.4} is visible above target {target_p} \
                     even at the minimum step"
                );
                continue;
            }
            let f = |d: f64| self.probability(basis, alpha_start, d) - target_p;
            let root = brent_root(f, self.opts.min_step, remaining, STEP_XTOL, self.opts.p_tolerance, 200)
                .map(|r| r.root)
                .unwrap_or(self.opts.min_step);
            if root < delta {
                delta = root;
                kind = StepKind::Converged;
            } else if root == delta && kind == StepKind::FinishesEarly {
                kind = StepKind::Converged;
            }
        }
        let delta = delta.min(remaining).max(0.0);
        StepOutcome { delta, kind, p: self.step_probability(bases, alpha_start, delta) }
    }

    /// Public single-step solve at one eccentricity.
    pub fn solve_step(&self, alpha_start: f64, target_p: f64, ecc_deg: f64) -> Result<StepOutcome> {
        if !(0.0..1.0).contains(&alpha_start) {
            return Err(Error::Domain(format!("alpha_start must be in [0, 1), got {alpha_start}")));
        }
        if !(0.0..1.0).contains(&target_p) || target_p == 0.0 {
            return Err(Error::Domain(format!("target probability must be in (0, 1), got {target_p}")));
        }
        let bases = self.bases_at(ecc_deg);
        Ok(self.solve_step_bases(&bases, alpha_start, target_p))
    }

    /// Greedy schedule for one eccentricity.
    fn schedule_for(&self, target_p: f64, ecc_deg: f64) -> (Vec<f64>, Vec<usize>) {
        let bases = self.bases_at(ecc_deg);
        let mut alphas = vec![0.0];
        let mut flagged = Vec::new();
        let mut alpha = 0.0;
        while alpha < 1.0 - 1e-12 && alphas.len() <= self.opts.max_windows {
            let step = self.solve_step_bases(&bases, alpha, target_p);
            alpha = (alpha + step.delta).min(1.0);
            if alpha > 1.0 - 1e-12 {
                alpha = 1.0;
            }
            alphas.push(alpha);
            if step.kind != StepKind::Converged {
                flagged.push(alphas.len() - 2);
            }
        }
        if *alphas.last().unwrap() < 1.0 {
            log::warn!("schedule for e={ecc_deg} hit the window cap; forcing completion");
            flagged.push(alphas.len() - 1);
            alphas.push(1.0);
        }
        (alphas, flagged)
    }

    /// Build the full schedule across a set of eccentricities.
    pub fn build_schedule(&self, target_p: f64, eccentricities_deg: &[f64]) -> Result<TransitionSchedule> {
        if !(0.0..1.0).contains(&target_p) || target_p == 0.0 {
            return Err(Error::Domain(format!("target probability must be in (0, 1), got {target_p}")));
        }
        if eccentricities_deg.is_empty() {
            return Err(Error::NotEnoughData("need at least one eccentricity".into()));
        }
        let mut eccs = eccentricities_deg.to_vec();
        eccs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let results: Vec<(Vec<f64>, Vec<usize>)> =
            eccs.par_iter().map(|&e| self.schedule_for(target_p, e)).collect();
        let (alphas, flagged) = results.into_iter().unzip();
        Ok(TransitionSchedule {
            target_p,
            eccentricities_deg: eccs,
            alphas,
            flagged,
            window_frames: self.opts.patch_dims.nt,
            fps: self.geom.frame_rate,
        })
    }

    /// Faithful re-prediction of one window via the full frame pipeline.
    pub fn verify_window(&self, alpha_start: f64, delta: f64, ecc_deg: f64) -> Result<f64> {
        window_probability(
            &self.source,
            &self.target,
            alpha_start,
            delta,
            ecc_deg,
            &self.params,
            &self.geom,
            self.opts.patch_dims,
        )
    }
}

/// Detection probability of one blended 25-frame window, built frame by
/// frame: alpha advances linearly from `alpha_start` to
/// `alpha_start + delta` and each complete 71x71 sub-window is analyzed at
/// eccentricity `ecc_deg`; the result is the maximum over sub-windows.
#[allow(clippy::too_many_arguments)]
pub fn window_probability(
    source: &LinearImage,
    target: &LinearImage,
    alpha_start: f64,
    delta: f64,
    ecc_deg: f64,
    params: &SensitivityParams<f64>,
    geom: &DisplayGeometry,
    dims: PatchDims,
) -> Result<f64> {
    if delta < 0.0 || alpha_start < 0.0 || alpha_start + delta > 1.0 + 1e-12 {
        return Err(Error::Domain(format!(
            "blend range [{alpha_start}, {}] outside [0, 1]",
            alpha_start + delta
        )));
    }
    if source.width != target.width || source.height != target.height {
        return Err(Error::DimensionMismatch("image pair sizes differ".into()));
    }
    let cols = source.width / dims.nh;
    let rows = source.height / dims.nv;
    if cols == 0 || rows == 0 {
        return Err(Error::DimensionMismatch("images smaller than one sub-window".into()));
    }
    let analyzer = PatchAnalyzer::new(geom, params, dims)?;
    let mut scratch = analyzer.make_scratch();
    let mut patch = vec![0.0f64; dims.len()];
    let lum = |v: f64| geom.black_luminance + (geom.peak_luminance - geom.black_luminance) * v;

    let mut best = 0.0f64;
    for row in 0..rows {
        for col in 0..cols {
            let (x0, y0) = (col * dims.nh, row * dims.nv);
            for t in 0..dims.nt {
                let alpha = alpha_start + delta * t as f64 / (dims.nt as f64 - 1.0);
                for v in 0..dims.nv {
                    for h in 0..dims.nh {
                        let s = source.at(x0 + h, y0 + v);
                        let g = target.at(x0 + h, y0 + v);
                        patch[dims.idx(t, v, h)] = lum((1.0 - alpha) * s + alpha * g);
                    }
                }
            }
            let p = analyzer.analyze_values(&patch, ecc_deg, &mut scratch)?;
            best = best.max(p.p_norm);
        }
    }
    Ok(best)
}
