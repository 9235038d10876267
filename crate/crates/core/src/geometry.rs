//! Physical viewing model: the display, the viewer position, and the unit
//! conversions the rest of the crate relies on (pixels to visual degrees,
//! code values to luminance, patch indices to physical frequencies).
//!
//! The eye is assumed to sit on the normal through the screen center at the
//! viewing distance, which matches a centered chin-rest setup.

use serde::{Deserialize, Serialize};

use crate::dct::PatchDims;
use crate::error::{Error, Result};

/// Physical description of the display and viewer.
///
/// Immutable after construction; shared freely across workers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisplayGeometry {
    pub width_px: u32,
    pub height_px: u32,
    pub width_mm: f64,
    pub height_mm: f64,
    #[serde(rename = "distance_mm")]
    pub viewing_distance_mm: f64,
    /// Peak luminance in cd/m².
    #[serde(rename = "peak_cdm2")]
    pub peak_luminance: f64,
    /// Black level in cd/m². Defaults to 0.
    #[serde(rename = "black_cdm2", default)]
    pub black_luminance: f64,
    /// Refresh rate in Hz.
    #[serde(rename = "fps")]
    pub frame_rate: f64,
}

/// A point on (or off) the screen in pixel coordinates, sub-pixel precision
/// allowed. `(0, 0)` is the top-left screen corner; a pixel with index `i`
/// spans `[i, i + 1)`, so its center is at `i + 0.5`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GazePoint {
    pub x: f64,
    pub y: f64,
}

impl GazePoint {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

/// Physical frequencies of every DCT index along each patch axis.
#[derive(Debug, Clone)]
pub struct FrequencyAxes {
    /// Temporal frequency per `k_t`, Hz.
    pub temporal_hz: Vec<f64>,
    /// Horizontal spatial frequency per `k_h`, cycles per degree.
    pub horizontal_cpd: Vec<f64>,
    /// Vertical spatial frequency per `k_v`, cycles per degree.
    pub vertical_cpd: Vec<f64>,
}

impl DisplayGeometry {
    pub fn new(
        width_px: u32,
        height_px: u32,
        width_mm: f64,
        height_mm: f64,
        viewing_distance_mm: f64,
        peak_luminance: f64,
        black_luminance: f64,
        frame_rate: f64,
    ) -> Result<Self> {
        let geom = Self {
            width_px,
            height_px,
            width_mm,
            height_mm,
            viewing_distance_mm,
            peak_luminance,
            black_luminance,
            frame_rate,
        };
        geom.validate()?;
        Ok(geom)
    }

    /// Parse the JSON config form (`width_px`, `height_px`, `width_mm`,
    /// `height_mm`, `distance_mm`, `peak_cdm2`, `black_cdm2`, `fps`).
    pub fn from_json(json: &str) -> Result<Self> {
        let geom: Self = serde_json::from_str(json)?;
        geom.validate()?;
        Ok(geom)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("width_px", f64::from(self.width_px)),
            ("height_px", f64::from(self.height_px)),
            ("width_mm", self.width_mm),
            ("height_mm", self.height_mm),
            ("distance_mm", self.viewing_distance_mm),
            ("peak_cdm2", self.peak_luminance),
            ("fps", self.frame_rate),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidGeometry(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.black_luminance >= 0.0) || self.black_luminance >= self.peak_luminance {
            return Err(Error::InvalidGeometry(format!(
                "black_cdm2 must be in [0, peak_cdm2), got {}",
                self.black_luminance
            )));
        }
        Ok(())
    }

    /// Derive the black level from a full-on/full-off contrast ratio.
    pub fn with_contrast_ratio(mut self, ratio: f64) -> Result<Self> {
        if !(ratio > 1.0) {
            return Err(Error::InvalidGeometry(format!(
                "contrast ratio must exceed 1, got {ratio}"
            )));
        }
        self.black_luminance = self.peak_luminance / ratio;
        Ok(self)
    }

    fn pixel_pitch_mm(&self) -> f64 {
        self.width_mm / f64::from(self.width_px)
    }

    /// Nominal angular resolution at the screen center, degrees per pixel.
    /// Uses the horizontal pitch; the value is treated as isotropic.
    pub fn degrees_per_pixel(&self) -> f64 {
        (self.pixel_pitch_mm() / self.viewing_distance_mm).atan().to_degrees()
    }

    pub fn pixels_per_degree(&self) -> f64 {
        1.0 / self.degrees_per_pixel()
    }

    /// Direction from the eye to a screen point, in mm. The eye sits on the
    /// perpendicular through the screen center at the viewing distance.
    fn ray_to(&self, p: GazePoint) -> [f64; 3] {
        let pitch_x = self.width_mm / f64::from(self.width_px);
        let pitch_y = self.height_mm / f64::from(self.height_px);
        [
            (p.x - f64::from(self.width_px) / 2.0) * pitch_x,
            (p.y - f64::from(self.height_px) / 2.0) * pitch_y,
            self.viewing_distance_mm,
        ]
    }

    /// Angle in degrees between the eye→gaze and eye→point rays. Defined for
    /// any pair of points, on-screen or not, and always ≥ 0.
    pub fn eccentricity_deg(&self, gaze: GazePoint, point: GazePoint) -> f64 {
        let a = self.ray_to(gaze);
        let b = self.ray_to(point);
        let dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
        let cross = [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ];
        let cross_norm = (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt();
        cross_norm.atan2(dot).to_degrees()
    }

    /// Map a display-linear value in [0, 1] to luminance in cd/m².
    /// Out-of-range inputs are clamped with a warning.
    pub fn code_to_luminance(&self, v: f64) -> f64 {
        let v = if (0.0..=1.0).contains(&v) {
            v
        } else {
            log::warn!("display-linear value {v} outside [0,1]; clamping");
            v.clamp(0.0, 1.0)
        };
        self.black_luminance + (self.peak_luminance - self.black_luminance) * v
    }

    /// Inverse of [`code_to_luminance`](Self::code_to_luminance), clamped to [0, 1].
    pub fn luminance_to_code(&self, l: f64) -> f64 {
        ((l - self.black_luminance) / (self.peak_luminance - self.black_luminance)).clamp(0.0, 1.0)
    }

    /// Physical frequency of every DCT index for a patch of the given size:
    /// `f(k) = k / (2 (N − 1))` cycles per sample, scaled by the frame rate
    /// on the temporal axis and by pixels per degree on the spatial axes.
    pub fn component_frequencies(&self, dims: PatchDims) -> FrequencyAxes {
        let per_sample = |k: usize, n: usize| k as f64 / (2.0 * (n as f64 - 1.0));
        let ppd = self.pixels_per_degree();
        FrequencyAxes {
            temporal_hz: (0..dims.nt).map(|k| per_sample(k, dims.nt) * self.frame_rate).collect(),
            horizontal_cpd: (0..dims.nh).map(|k| per_sample(k, dims.nh) * ppd).collect(),
            vertical_cpd: (0..dims.nv).map(|k| per_sample(k, dims.nv) * ppd).collect(),
        }
    }
}

/// The standard sRGB electro-optical transfer function and its inverse,
/// used to decode stored frames to display-linear values.
pub mod srgb {
    /// sRGB-encoded -> display-linear.
    #[inline]
    pub fn to_linear(v: f64) -> f64 {
        if v <= 0.04045 {
            v / 12.92
        } else {
            ((v + 0.055) / 1.055).powf(2.4)
        }
    }

    /// Display-linear -> sRGB-encoded.
    #[inline]
    pub fn from_linear(v: f64) -> f64 {
        if v <= 0.003_130_8 {
            v * 12.92
        } else {
            1.055 * v.powf(1.0 / 2.4) - 0.055
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn tv_display() -> DisplayGeometry {
        // 55-inch 4K panel at 620 mm.
        DisplayGeometry::new(3840, 2160, 1218.0, 685.0, 620.0, 167.33, 0.0, 120.0).unwrap()
    }

    #[test]
    fn degrees_per_pixel_examples() {
        let geom = tv_display();
        // 71 px subtends about 2.08 degrees at center. Oracle: accumulate the
        // angle pixel by pixel with explicit trigonometry.
        let pitch = 1218.0 / 3840.0;
        let mut summed = 0.0;
        for i in 0..71 {
            let a = (i as f64 - 35.5) * pitch;
            let b = (i as f64 + 1.0 - 35.5) * pitch;
            summed += ((b / 620.0).atan() - (a / 620.0).atan()).to_degrees();
        }
        assert_abs_diff_eq!(71.0 * geom.degrees_per_pixel(), summed, epsilon = 1e-3);
        assert_abs_diff_eq!(71.0 * geom.degrees_per_pixel(), 2.08, epsilon = 0.01);

        let flat = DisplayGeometry::new(1000, 1000, 1000.0, 1000.0, 1000.0, 100.0, 0.0, 60.0).unwrap();
        assert_abs_diff_eq!(flat.degrees_per_pixel(), 0.0573, epsilon = 1e-4);

        let far = DisplayGeometry::new(1000, 1000, 1000.0, 1000.0, 2000.0, 100.0, 0.0, 60.0).unwrap();
        let ratio = flat.degrees_per_pixel() / far.degrees_per_pixel();
        assert!((ratio - 2.0).abs() / 2.0 < 0.01);
    }

    #[test]
    fn eccentricity_examples() {
        let geom = tv_display();
        let center = GazePoint::new(1920.0, 1080.0);
        assert_eq!(geom.eccentricity_deg(center, center), 0.0);

        // Point offset by one viewing distance horizontally: atan(1) = 45 deg.
        let px_per_mm = 3840.0 / 1218.0;
        let p = GazePoint::new(1920.0 + 620.0 * px_per_mm, 1080.0);
        assert_abs_diff_eq!(geom.eccentricity_deg(center, p), 45.0, epsilon = 1e-9);
    }

    #[test]
    fn eccentricity_matches_vector_oracle() {
        let geom = tv_display();
        let gaze = GazePoint::new(1920.0, 1080.0);
        // Point 10 degrees off by the small-angle placement.
        let offset_px = (10.0f64).to_radians().tan() * 620.0 * 3840.0 / 1218.0;
        let p = GazePoint::new(1920.0 + offset_px, 1080.0);

        // Independent oracle: explicit 3-D unit vectors and acos.
        let to_vec = |q: GazePoint| {
            let x = (q.x - 1920.0) * 1218.0 / 3840.0;
            let y = (q.y - 1080.0) * 685.0 / 2160.0;
            let n = (x * x + y * y + 620.0f64 * 620.0).sqrt();
            [x / n, y / n, 620.0 / n]
        };
        let a = to_vec(gaze);
        let b = to_vec(p);
        let oracle = (a[0] * b[0] + a[1] * b[1] + a[2] * b[2]).acos().to_degrees();
        assert_abs_diff_eq!(geom.eccentricity_deg(gaze, p), oracle, epsilon = 1e-9);
        assert_abs_diff_eq!(geom.eccentricity_deg(gaze, p), 10.0, epsilon = 1e-9);
    }

    #[test]
    fn eccentricity_symmetry_and_triangle() {
        let geom = tv_display();
        let pts = [
            GazePoint::new(0.0, 0.0),
            GazePoint::new(3000.0, 400.0),
            GazePoint::new(1200.0, 2000.0),
        ];
        for &a in &pts {
            for &b in &pts {
                assert_abs_diff_eq!(
                    geom.eccentricity_deg(a, b),
                    geom.eccentricity_deg(b, a),
                    epsilon = 1e-12
                );
            }
        }
        let ab = geom.eccentricity_deg(pts[0], pts[1]);
        let bc = geom.eccentricity_deg(pts[1], pts[2]);
        let ac = geom.eccentricity_deg(pts[0], pts[2]);
        assert!(ac <= ab + bc + 1e-12);
    }

    #[test]
    fn code_to_luminance_affine() {
        let geom = tv_display();
        assert_abs_diff_eq!(geom.code_to_luminance(0.5), 83.665, epsilon = 1e-9);
        assert_eq!(geom.code_to_luminance(0.0), 0.0);
        assert_eq!(geom.code_to_luminance(1.0), 167.33);
        // Clamped out of range.
        assert_eq!(geom.code_to_luminance(1.5), 167.33);
        assert_eq!(geom.code_to_luminance(-0.25), 0.0);
        // Monotone, endpoint-exact with a black level.
        let g = tv_display().with_contrast_ratio(494.0).unwrap();
        assert_abs_diff_eq!(g.black_luminance, 167.33 / 494.0, epsilon = 1e-12);
        assert_eq!(g.code_to_luminance(0.0), g.black_luminance);
        assert_eq!(g.code_to_luminance(1.0), 167.33);
        let l = g.code_to_luminance(0.37);
        assert_abs_diff_eq!(g.luminance_to_code(l), 0.37, epsilon = 1e-12);
    }

    #[test]
    fn component_frequency_examples() {
        let geom = tv_display();
        let axes = geom.component_frequencies(PatchDims::DEFAULT);
        assert_abs_diff_eq!(axes.temporal_hz[24], 60.0, epsilon = 1e-12);
        assert_eq!(axes.temporal_hz[0], 0.0);
        assert_eq!(axes.horizontal_cpd[0], 0.0);
        // k = 19 lands near the 4.54 cpd grating at this geometry.
        assert_abs_diff_eq!(axes.horizontal_cpd[19], 4.63, epsilon = 0.01);
        // Strictly increasing per axis.
        for axis in [&axes.temporal_hz, &axes.horizontal_cpd, &axes.vertical_cpd] {
            for w in axis.windows(2) {
                assert!(w[1] > w[0]);
            }
        }
    }

    #[test]
    fn srgb_round_trip() {
        for i in 0..=1000 {
            let v = i as f64 / 1000.0;
            assert_abs_diff_eq!(srgb::to_linear(srgb::from_linear(v)), v, epsilon = 1e-12);
        }
    }

    #[test]
    fn rejects_bad_geometry() {
        assert!(DisplayGeometry::new(0, 2160, 1218.0, 685.0, 620.0, 167.33, 0.0, 120.0).is_err());
        assert!(DisplayGeometry::new(3840, 2160, 1218.0, 685.0, 620.0, 100.0, 100.0, 120.0).is_err());
        assert!(DisplayGeometry::new(3840, 2160, 1218.0, 685.0, 620.0, 100.0, 0.0, 0.0).is_err());
    }
}
