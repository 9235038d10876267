//! Temporal-aliasing evaluation: optional motion compensation by flow
//! warping, global pooling of probability maps into a scalar flicker score,
//! and critical-flicker-frequency tables.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::model::SensitivityParams;
use crate::scalar::Scalar;
use crate::visibility::{MemoryFrames, VisibilityMap};

/// Magic number of the `.flo` format; reads as the bytes "PIEH".
const FLO_MAGIC: f32 = 202021.25;

/// Default Minkowski exponent for global pooling of probability maps.
pub const DEFAULT_POOL_BETA: f64 = 3.0;

/// Per-pixel motion between one pair of consecutive frames: content at `p`
/// in the earlier frame appears at `p + (u, v)` in the later one.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    pub width: usize,
    pub height: usize,
    /// Interleaved `(u, v)` displacements, pixels per frame, row-major.
    pub uv: Vec<f32>,
}

impl FlowField {
    pub fn new(width: usize, height: usize, uv: Vec<f32>) -> Result<Self> {
        if uv.len() != 2 * width * height {
            return Err(Error::DimensionMismatch(format!(
                "flow field expects {} floats, got {}",
                2 * width * height,
                uv.len()
            )));
        }
        if uv.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parse("flow field contains non-finite values".into()));
        }
        Ok(Self { width, height, uv })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self { width, height, uv: vec![0.0; 2 * width * height] }
    }

    pub fn constant(width: usize, height: usize, u: f32, v: f32) -> Self {
        let mut uv = Vec::with_capacity(2 * width * height);
        for _ in 0..width * height {
            uv.push(u);
            uv.push(v);
        }
        Self { width, height, uv }
    }

    #[inline]
    fn at(&self, x: usize, y: usize) -> (f64, f64) {
        let i = 2 * (y * self.width + x);
        (f64::from(self.uv[i]), f64::from(self.uv[i + 1]))
    }

    /// Bilinear sample with edge clamp.
    fn sample(&self, x: f64, y: f64) -> (f64, f64) {
        let xc = x.clamp(0.0, (self.width - 1) as f64);
        let yc = y.clamp(0.0, (self.height - 1) as f64);
        let x0 = xc.floor() as usize;
        let y0 = yc.floor() as usize;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let fx = xc - x0 as f64;
        let fy = yc - y0 as f64;
        let (u00, v00) = self.at(x0, y0);
        let (u10, v10) = self.at(x1, y0);
        let (u01, v01) = self.at(x0, y1);
        let (u11, v11) = self.at(x1, y1);
        let u = (u00 * (1.0 - fx) + u10 * fx) * (1.0 - fy) + (u01 * (1.0 - fx) + u11 * fx) * fy;
        let v = (v00 * (1.0 - fx) + v10 * fx) * (1.0 - fy) + (v01 * (1.0 - fx) + v11 * fx) * fy;
        (u, v)
    }

    /// Read one Middlebury-style `.flo` stream: float magic, little-endian
    /// i32 width and height, then interleaved float32 `(u, v)`.
    pub fn read_flo(mut reader: impl Read) -> Result<Self> {
        let mut word = [0u8; 4];
        reader.read_exact(&mut word)?;
        let magic = f32::from_le_bytes(word);
        if magic != FLO_MAGIC {
            return Err(Error::Parse(format!("bad .flo magic {magic}, expected {FLO_MAGIC}")));
        }
        reader.read_exact(&mut word)?;
        let width = i32::from_le_bytes(word);
        reader.read_exact(&mut word)?;
        let height = i32::from_le_bytes(word);
        if width <= 0 || height <= 0 || width as i64 * height as i64 > (1 << 32) {
            return Err(Error::Parse(format!("implausible .flo size {width}x{height}")));
        }
        let (width, height) = (width as usize, height as usize);
        let mut uv = vec![0.0f32; 2 * width * height];
        let mut bytes = vec![0u8; 8 * width * height];
        reader.read_exact(&mut bytes)?;
        for (v, chunk) in uv.iter_mut().zip(bytes.chunks_exact(4)) {
            *v = f32::from_le_bytes(chunk.try_into().unwrap());
        }
        Self::new(width, height, uv)
    }

    pub fn write_flo(&self, mut writer: impl Write) -> Result<()> {
        writer.write_all(&FLO_MAGIC.to_le_bytes())?;
        writer.write_all(&(self.width as i32).to_le_bytes())?;
        writer.write_all(&(self.height as i32).to_le_bytes())?;
        for v in &self.uv {
            writer.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }
}

#[inline]
fn sample_frame<S: Scalar>(frame: &[S], width: usize, height: usize, x: f64, y: f64) -> S {
    let xc = x.clamp(0.0, (width - 1) as f64);
    let yc = y.clamp(0.0, (height - 1) as f64);
    let x0 = xc.floor() as usize;
    let y0 = yc.floor() as usize;
    let x1 = (x0 + 1).min(width - 1);
    let y1 = (y0 + 1).min(height - 1);
    let fx = S::from_f64(xc - x0 as f64);
    let fy = S::from_f64(yc - y0 as f64);
    let one = S::one();
    let top = frame[y0 * width + x0] * (one - fx) + frame[y0 * width + x1] * fx;
    let bottom = frame[y1 * width + x0] * (one - fx) + frame[y1 * width + x1] * fx;
    top * (one - fy) + bottom * fy
}

/// Warp every frame back to the first frame of its window by composing the
/// inter-frame flows, removing scene motion so only temporal shimmer
/// remains. `flows[i]` maps frame `i` onto frame `i + 1`; there must be one
/// fewer flow than frames. The output has the same frame count.
pub fn motion_compensate<S: Scalar>(
    frames: &MemoryFrames<S>,
    flows: &[FlowField],
    window_frames: usize,
) -> Result<MemoryFrames<S>> {
    use crate::visibility::FrameSource;
    let (w, h) = (frames.width(), frames.height());
    let count = frames.frame_count();
    if count == 0 {
        return Err(Error::NotEnoughData("no frames".into()));
    }
    if flows.len() + 1 != count {
        return Err(Error::DimensionMismatch(format!(
            "{} flows for {} frames; need frames - 1",
            flows.len(),
            count
        )));
    }
    if flows.iter().any(|f| f.width != w || f.height != h) {
        return Err(Error::DimensionMismatch("flow size differs from frame size".into()));
    }
    if window_frames < 2 {
        return Err(Error::DimensionMismatch("window must cover at least 2 frames".into()));
    }

    let mut out = MemoryFrames::new(w, h);
    // Cumulative displacement from the window reference to the current
    // frame, tracked per reference pixel.
    let mut disp = vec![(0.0f64, 0.0f64); w * h];
    for start in (0..count).step_by(window_frames) {
        let end = (start + window_frames).min(count);
        out.push_frame(frames.frame(start).to_vec())?;
        for d in &mut disp {
            *d = (0.0, 0.0);
        }
        for t in start + 1..end {
            let flow = &flows[t - 1];
            let src = frames.frame(t);
            let mut warped = Vec::with_capacity(w * h);
            for y in 0..h {
                for x in 0..w {
                    let d = &mut disp[y * w + x];
                    let (u, v) = flow.sample(x as f64 + d.0, y as f64 + d.1);
                    d.0 += u;
                    d.1 += v;
                    warped.push(sample_frame(src, w, h, x as f64 + d.0, y as f64 + d.1));
                }
            }
            out.push_frame(warped)?;
        }
    }
    Ok(out)
}

/// Pool a probability map into one scalar flicker score:
/// `(mean over cells of p_norm^beta)^(1/beta)`. Normalizing by the cell
/// count makes scores comparable across grid sizes.
pub fn flicker_score(map: &VisibilityMap, beta: f64) -> f64 {
    assert!(beta > 0.0, "pooling exponent must be positive");
    assert!(!map.cells.is_empty(), "empty visibility map");
    let sum: f64 = map.cells.iter().map(|c| c.p_norm.powf(beta)).sum();
    (sum / map.cells.len() as f64).powf(1.0 / beta)
}

/// Critical flicker frequency for every (spatial frequency, eccentricity)
/// pair. Rows are spatial frequencies (applied as a horizontal grating),
/// columns eccentricities; `None` marks combinations never visible at the
/// probing contrast.
#[derive(Debug, Clone)]
pub struct CffTable {
    pub eccentricities_deg: Vec<f64>,
    pub spatial_freqs_cpd: Vec<f64>,
    pub c_max: f64,
    /// Row-major `[freq][ecc]`.
    pub values: Vec<Option<f64>>,
}

impl CffTable {
    pub fn get(&self, freq_idx: usize, ecc_idx: usize) -> Option<f64> {
        self.values[freq_idx * self.eccentricities_deg.len() + ecc_idx]
    }

    /// CSV with one row per spatial frequency; unattainable cells are empty.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        write!(out, "f_cpd")?;
        for e in &self.eccentricities_deg {
            write!(out, ",cff_hz_at_{e}deg")?;
        }
        writeln!(out)?;
        for (fi, f) in self.spatial_freqs_cpd.iter().enumerate() {
            write!(out, "{f}")?;
            for ei in 0..self.eccentricities_deg.len() {
                match self.get(fi, ei) {
                    Some(v) => write!(out, ",{v}")?,
                    None => write!(out, ",")?,
                }
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Compute a CFF table from the sensitivity model.
pub fn cff_table(
    eccentricities_deg: &[f64],
    spatial_freqs_cpd: &[f64],
    c_max: f64,
    params: &SensitivityParams<f64>,
) -> Result<CffTable> {
    if eccentricities_deg.is_empty() || spatial_freqs_cpd.is_empty() {
        return Err(Error::NotEnoughData("need at least one eccentricity and frequency".into()));
    }
    if !(c_max > 0.0 && c_max <= 1.0) {
        return Err(Error::Domain(format!("c_max must be in (0, 1], got {c_max}")));
    }
    let mut values = Vec::with_capacity(eccentricities_deg.len() * spatial_freqs_cpd.len());
    for &f in spatial_freqs_cpd {
        for &e in eccentricities_deg {
            values.push(params.critical_flicker_frequency(f, 0.0, e, c_max));
        }
    }
    Ok(CffTable {
        eccentricities_deg: eccentricities_deg.to_vec(),
        spatial_freqs_cpd: spatial_freqs_cpd.to_vec(),
        c_max,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dct::PatchDims;
    use crate::visibility::{Coverage, FrameSource, VisibilityCell};
    use approx::assert_abs_diff_eq;

    fn map_with(p: &[f64]) -> VisibilityMap {
        VisibilityMap {
            windows: 1,
            cols: p.len(),
            rows: 1,
            patch_dims: PatchDims::DEFAULT,
            cells: p
                .iter()
                .map(|&p_norm| VisibilityCell { ecc_deg: 0.0, c_m: 0.0, psi: 0.5, p_norm })
                .collect(),
            coverage: Coverage {
                total_frames: 25,
                used_frames: 25,
                frame_width: 71 * p.len(),
                frame_height: 71,
                used_width: 71 * p.len(),
                used_height: 71,
            },
        }
    }

    #[test]
    fn flo_round_trip() {
        let flow = FlowField::constant(5, 4, 1.5, -0.25);
        let mut bytes = Vec::new();
        flow.write_flo(&mut bytes).unwrap();
        assert_eq!(&bytes[0..4], b"PIEH");
        let back = FlowField::read_flo(bytes.as_slice()).unwrap();
        assert_eq!(back, flow);
        assert!(FlowField::read_flo([0u8; 12].as_slice()).is_err());
    }

    #[test]
    fn zero_flow_is_identity() {
        let frames = MemoryFrames::from_fn(16, 12, 7, |t, x, y| (t * 100 + y * 16 + x) as f64);
        let flows = vec![FlowField::zeros(16, 12); 6];
        let out = motion_compensate(&frames, &flows, 5).unwrap();
        assert_eq!(out.frame_count(), 7);
        for t in 0..7 {
            for (a, b) in frames.frame(t).iter().zip(out.frame(t)) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn exact_translation_compensates_to_static() {
        // Content slides 2 px/frame to the right; away from the border band
        // the compensated window is temporally constant.
        let (w, h, n) = (64, 16, 8);
        let base = |x: f64, y: f64| 50.0 + 30.0 * ((x * 0.37).sin() + (y * 0.53).cos());
        let frames = MemoryFrames::from_fn(w, h, n, |t, x, y| {
            base(x as f64 - 2.0 * t as f64, y as f64)
        });
        let flows = vec![FlowField::constant(w, h, 2.0, 0.0); n - 1];
        let out = motion_compensate(&frames, &flows, n).unwrap();
        let band = 2 * (n - 1);
        for t in 1..n {
            for y in 0..h {
                for x in 0..w - band {
                    let got = out.frame(t)[y * w + x];
                    let want = out.frame(0)[y * w + x];
                    assert!(
                        (got - want).abs() < 1e-6 * 80.0,
                        "t={t} x={x} y={y}: {got} vs {want}"
                    );
                }
            }
        }
    }

    #[test]
    fn compensation_restarts_per_window() {
        let (w, h) = (32, 8);
        let frames = MemoryFrames::from_fn(w, h, 6, |t, x, _| (x as f64 - t as f64).max(0.0));
        let flows = vec![FlowField::constant(w, h, 1.0, 0.0); 5];
        let out = motion_compensate(&frames, &flows, 3).unwrap();
        // Frames 0 and 3 are window references and stay untouched.
        for (a, b) in frames.frame(0).iter().zip(out.frame(0)) {
            assert_eq!(a, b);
        }
        for (a, b) in frames.frame(3).iter().zip(out.frame(3)) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn motion_compensate_rejects_bad_input() {
        let frames = MemoryFrames::from_fn(8, 8, 4, |_, _, _| 0.0);
        let flows = vec![FlowField::zeros(8, 8); 2];
        assert!(motion_compensate(&frames, &flows, 4).is_err());
        let flows = vec![FlowField::zeros(4, 8); 3];
        assert!(motion_compensate(&frames, &flows, 4).is_err());
    }

    #[test]
    fn flicker_score_cases() {
        assert_eq!(flicker_score(&map_with(&[0.0, 0.0, 0.0]), 3.0), 0.0);
        assert_abs_diff_eq!(flicker_score(&map_with(&[1.0; 5]), 3.0), 1.0, epsilon = 1e-12);
        let m = 8;
        let mut p = vec![0.0; m];
        p[3] = 1.0;
        assert_abs_diff_eq!(
            flicker_score(&map_with(&p), 3.0),
            (1.0 / m as f64).powf(1.0 / 3.0),
            epsilon = 1e-12
        );
    }

    #[test]
    fn flicker_score_invariances() {
        let p = [0.1, 0.7, 0.3, 0.9];
        let score = flicker_score(&map_with(&p), 3.0);
        let mut shuffled = p;
        shuffled.swap(0, 3);
        shuffled.swap(1, 2);
        assert_abs_diff_eq!(flicker_score(&map_with(&shuffled), 3.0), score, epsilon = 1e-12);

        // Uniform refinement of a constant map leaves the score unchanged.
        assert_abs_diff_eq!(
            flicker_score(&map_with(&[0.4; 2]), 3.0),
            flicker_score(&map_with(&[0.4; 32]), 3.0),
            epsilon = 1e-12
        );

        // Raising any cell cannot lower the score.
        let mut raised = p;
        raised[0] = 0.5;
        assert!(flicker_score(&map_with(&raised), 3.0) >= score);
    }

    #[test]
    fn cff_table_structure() {
        let params = SensitivityParams::<f64>::default();
        let table = cff_table(&[0.0, 10.0, 25.0, 40.0], &[0.0, 8.0], 0.5, &params).unwrap();
        // Row at 0 cpd decreases monotonically with eccentricity.
        let row: Vec<f64> = (0..4).map(|e| table.get(0, e).unwrap()).collect();
        for w in row.windows(2) {
            assert!(w[1] < w[0]);
        }
        // High spatial frequency in the periphery is never visible.
        assert!(table.get(1, 3).is_none());

        // Higher probing contrast cannot lower the CFF.
        let loose = cff_table(&[0.0, 10.0, 25.0, 40.0], &[0.0, 8.0], 1.0, &params).unwrap();
        for fi in 0..2 {
            for ei in 0..4 {
                match (table.get(fi, ei), loose.get(fi, ei)) {
                    (Some(a), Some(b)) => assert!(b >= a - 0.011),
                    (Some(_), None) => panic!("visible at 0.5 but not at 1.0"),
                    _ => {}
                }
            }
        }

        let mut csv = Vec::new();
        table.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("f_cpd,cff_hz_at_0deg,cff_hz_at_10deg"));
        assert_eq!(text.lines().count(), 3);
    }
}
