//! Synthesis of calibration and test stimuli: cross-modulated cosine
//! gratings with counterphase temporal modulation, static projections, and
//! JND-targeted contrast scaling.

use crate::dct::{Dct3, PatchDims, PatchVolume};
use crate::error::{Error, Result};
use crate::geometry::DisplayGeometry;
use crate::model::SensitivityParams;
use crate::scalar::Scalar;
use crate::visibility::PatchAnalyzer;

/// A windowed cosine grating patch. Spatial frequencies in cycles per
/// degree, temporal frequency in Hz, contrast as a Weber amplitude relative
/// to the background luminance.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct GratingSpec {
    pub f_h: f64,
    pub f_v: f64,
    pub f_t: f64,
    pub contrast: f64,
    /// Background as a display-linear value.
    pub background: f64,
    /// Diameter of the circular window, degrees.
    pub window_diameter_deg: f64,
    /// Gaussian falloff beyond the window radius, degrees. Zero gives a
    /// hard edge.
    pub falloff_sigma_deg: f64,
    /// Temporal phase in radians; zero puts the modulation peak at frame 0.
    pub temporal_phase: f64,
    pub n_frames: usize,
    pub size_px: usize,
}

impl Default for GratingSpec {
    fn default() -> Self {
        Self {
            f_h: 0.0,
            f_v: 0.0,
            f_t: 10.0,
            contrast: 0.2,
            background: 0.5,
            window_diameter_deg: 2.0,
            falloff_sigma_deg: 0.1,
            temporal_phase: 0.0,
            n_frames: 25,
            size_px: 71,
        }
    }
}

impl GratingSpec {
    /// Structural checks that apply to any use of the spec.
    pub fn validate(&self, geom: &DisplayGeometry) -> Result<()> {
        if self.n_frames < 2 || self.size_px < 2 {
            return Err(Error::InvalidStimulus("patch needs at least 2 samples per axis".into()));
        }
        if !(self.background > 0.0 && self.background <= 1.0) {
            return Err(Error::InvalidStimulus(format!(
                "background must be in (0, 1], got {}",
                self.background
            )));
        }
        if self.contrast < 0.0 || !self.contrast.is_finite() {
            return Err(Error::InvalidStimulus(format!(
                "contrast must be nonnegative, got {}",
                self.contrast
            )));
        }
        if self.f_h < 0.0 || self.f_v < 0.0 || self.f_t < 0.0 {
            return Err(Error::InvalidStimulus("frequencies must be nonnegative".into()));
        }
        let spatial_nyquist = geom.pixels_per_degree() / 2.0;
        if self.f_h > spatial_nyquist || self.f_v > spatial_nyquist {
            return Err(Error::InvalidStimulus(format!(
                "spatial frequency beyond the Nyquist limit of {spatial_nyquist:.3} cpd"
            )));
        }
        if self.f_t > geom.frame_rate / 2.0 {
            return Err(Error::InvalidStimulus(format!(
                "temporal frequency beyond the Nyquist limit of {} Hz",
                geom.frame_rate / 2.0
            )));
        }
        Ok(())
    }

    /// Additionally require that the grating fits the display range, i.e.
    /// the contrast does not push any sample outside [0, 1] display-linear.
    /// Analysis-only stimuli may exceed this; rendered ones must not.
    pub fn validate_displayable(&self, geom: &DisplayGeometry) -> Result<()> {
        self.validate(geom)?;
        let limit = self.background.min(1.0 - self.background) / self.background;
        if self.contrast > limit + 1e-12 {
            return Err(Error::InvalidStimulus(format!(
                "contrast {} is not displayable on background {} (limit {limit:.4})",
                self.contrast, self.background
            )));
        }
        Ok(())
    }

    pub fn dims(&self) -> PatchDims {
        PatchDims { nt: self.n_frames, nh: self.size_px, nv: self.size_px }
    }
}

/// Generate the luminance volume of a windowed grating:
///
/// `L(x, y, t) = L0 (1 + c w(x, y) cos(2 pi f_h x) cos(2 pi f_v y) cos(2 pi f_t t + phase))`
///
/// with `x`, `y` in degrees from the patch center and `t` in seconds.
/// Contrasts beyond the displayable range are allowed (the pipeline is
/// linear and suprathreshold analysis needs them) but logged.
pub fn generate_grating<S: Scalar>(spec: &GratingSpec, geom: &DisplayGeometry) -> Result<PatchVolume<S>> {
    spec.validate(geom)?;
    if spec.validate_displayable(geom).is_err() {
        log::debug!(
            "grating contrast {} exceeds the displayable range; generating anyway",
            spec.contrast
        );
    }
    let dims = spec.dims();
    let l0 = geom.code_to_luminance(spec.background);
    let deg_per_px = geom.degrees_per_pixel();
    let half = spec.size_px as f64 / 2.0;
    let radius = spec.window_diameter_deg / 2.0;
    let sigma = spec.falloff_sigma_deg;
    let tau = std::f64::consts::TAU;

    let mut col_phase = Vec::with_capacity(spec.size_px);
    let mut col_deg = Vec::with_capacity(spec.size_px);
    for i in 0..spec.size_px {
        let deg = (i as f64 + 0.5 - half) * deg_per_px;
        col_deg.push(deg);
        col_phase.push(deg * tau);
    }

    let mut values = Vec::with_capacity(dims.len());
    for t in 0..spec.n_frames {
        let seconds = t as f64 / geom.frame_rate;
        let ct = (tau * spec.f_t * seconds + spec.temporal_phase).cos();
        for v in 0..spec.size_px {
            let y = col_deg[v];
            let cv = (col_phase[v] * spec.f_v).cos();
            for h in 0..spec.size_px {
                let x = col_deg[h];
                let ch = (col_phase[h] * spec.f_h).cos();
                let d = (x * x + y * y).sqrt();
                let w = if d <= radius {
                    1.0
                } else if sigma > 0.0 {
                    (-(d - radius) * (d - radius) / (2.0 * sigma * sigma)).exp()
                } else {
                    0.0
                };
                values.push(S::from_f64(l0 * (1.0 + spec.contrast * w * ch * cv * ct)));
            }
        }
    }
    PatchVolume::new(dims, values, Default::default())
}

/// Project a patch onto its temporally static component: zero every
/// spectral entry with `k_t > 0` and invert. Idempotent.
pub fn static_version<S: Scalar>(patch: &PatchVolume<S>) -> Result<PatchVolume<S>> {
    let plan = Dct3::new(patch.dims)?;
    let mut spectrum = plan.forward_spectrum(patch)?;
    for v in &mut spectrum.delta_l[patch.dims.plane()..] {
        *v = S::zero();
    }
    plan.inverse(&spectrum)
}

/// Scale the temporal (AC) content of a patch so its pooled JND contrast at
/// eccentricity `ecc_deg` equals `target`; the static component is kept.
pub fn scale_to_jnd<S: Scalar>(
    patch: &PatchVolume<S>,
    target: f64,
    ecc_deg: f64,
    params: &SensitivityParams<S>,
    geom: &DisplayGeometry,
) -> Result<PatchVolume<S>> {
    if target < 0.0 {
        return Err(Error::Domain(format!("target JND contrast must be >= 0, got {target}")));
    }
    let analyzer = PatchAnalyzer::new(geom, params, patch.dims)?;
    let mut scratch = analyzer.make_scratch();
    let current = analyzer.analyze_values(&patch.values, ecc_deg, &mut scratch)?.c_m;
    // Transform roundoff on a temporally constant patch leaves pooled
    // contrast around 1e-11; anything below this floor is noise, not signal.
    if current < 1e-9 {
        return Err(Error::DegenerateData(
            "patch has no pooled temporal contrast to scale".into(),
        ));
    }
    let factor = S::from_f64(target / current);
    let plan = Dct3::new(patch.dims)?;
    let mut spectrum = plan.forward_spectrum(patch)?;
    for v in &mut spectrum.delta_l[patch.dims.plane()..] {
        *v = *v * factor;
    }
    plan.inverse(&spectrum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::GazePoint;
    use crate::visibility::patch_probability;
    use approx::assert_abs_diff_eq;

    fn tv_display() -> DisplayGeometry {
        DisplayGeometry::new(3840, 2160, 1218.0, 685.0, 620.0, 167.33, 0.0, 120.0).unwrap()
    }

    #[test]
    fn zero_contrast_is_constant() {
        let geom = tv_display();
        let spec = GratingSpec { contrast: 0.0, ..Default::default() };
        let patch: PatchVolume<f64> = generate_grating(&spec, &geom).unwrap();
        let l0 = geom.code_to_luminance(0.5);
        for &v in &patch.values {
            assert_abs_diff_eq!(v, l0, epsilon = 1e-12);
        }
    }

    #[test]
    fn respects_contrast_bound() {
        let geom = tv_display();
        let spec = GratingSpec { f_h: 4.54, f_v: 4.54, contrast: 0.3, ..Default::default() };
        let patch: PatchVolume<f64> = generate_grating(&spec, &geom).unwrap();
        let l0 = geom.code_to_luminance(0.5);
        let mut max_dev: f64 = 0.0;
        for &v in &patch.values {
            max_dev = max_dev.max((v - l0).abs() / l0);
        }
        assert!(max_dev <= 0.3 + 1e-12);
        // The window center has w = 1 and all cosines peak at the first
        // frame near the patch center, so the bound is nearly attained.
        assert!(max_dev > 0.29);
    }

    #[test]
    fn grating_cycle_count() {
        let geom = tv_display();
        // 4.54 cpd at this geometry is about 9.4 cycles across the window.
        let cycles = 4.54 * 71.0 * geom.degrees_per_pixel();
        assert_abs_diff_eq!(cycles, 9.44, epsilon = 0.02);
    }

    #[test]
    fn uniform_flicker_spectrum_is_dominated_by_its_bin() {
        let geom = tv_display();
        let spec = GratingSpec { f_t: 10.0, contrast: 0.2, ..Default::default() };
        let patch: PatchVolume<f64> = generate_grating(&spec, &geom).unwrap();
        let plan = Dct3::new(patch.dims).unwrap();
        let spectrum = plan.forward_spectrum(&patch).unwrap();
        // 10 Hz at 120 fps over 25 frames is exactly bin k_t = 4.
        let l0 = geom.code_to_luminance(0.5);
        let dominant = spectrum.delta_l[patch.dims.idx(4, 0, 0)];
        let expected = 0.2 * l0;
        assert!(
            (dominant - expected).abs() / expected < 0.15,
            "window leakage too large: {dominant} vs {expected}"
        );
        // No other temporal bin carries appreciable energy.
        for kt in 1..25 {
            if kt == 4 {
                continue;
            }
            assert!(spectrum.delta_l[patch.dims.idx(kt, 0, 0)].abs() < 1e-9 * l0);
        }
    }

    #[test]
    fn rejects_beyond_nyquist() {
        let geom = tv_display();
        let too_fast = GratingSpec { f_t: 61.0, ..Default::default() };
        assert!(generate_grating::<f64>(&too_fast, &geom).is_err());
        let too_fine = GratingSpec { f_h: 18.0, ..Default::default() };
        assert!(generate_grating::<f64>(&too_fine, &geom).is_err());
    }

    #[test]
    fn displayable_validation() {
        let geom = tv_display();
        let ok = GratingSpec { contrast: 0.5, ..Default::default() };
        assert!(ok.validate_displayable(&geom).is_ok());
        let too_strong = GratingSpec { contrast: 1.2, ..Default::default() };
        assert!(too_strong.validate_displayable(&geom).is_err());
        assert!(generate_grating::<f64>(&too_strong, &geom).is_ok());
    }

    #[test]
    fn static_version_behaviour() {
        let geom = tv_display();
        // Odd temporal bin so the time average and the trapezoid-weighted DC
        // agree exactly.
        let spec = GratingSpec { f_t: 12.5, f_h: 4.54, contrast: 0.3, ..Default::default() };
        let patch: PatchVolume<f64> = generate_grating(&spec, &geom).unwrap();
        let flat = static_version(&patch).unwrap();

        // Temporally constant and equal to the per-pixel time average.
        for v in 0..patch.dims.nv {
            for h in 0..patch.dims.nh {
                let mean: f64 =
                    (0..patch.dims.nt).map(|t| patch.at(t, v, h)).sum::<f64>() / patch.dims.nt as f64;
                for t in 0..patch.dims.nt {
                    assert_abs_diff_eq!(flat.at(t, v, h), mean, epsilon = 1e-9);
                }
            }
        }

        // Idempotent.
        let again = static_version(&flat).unwrap();
        for (a, b) in flat.values.iter().zip(&again.values) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-9);
        }

        // A static patch has zero detection probability.
        let params = SensitivityParams::<f64>::default();
        let p = patch_probability(&flat, 10.0, &params, &geom, patch.dims).unwrap();
        assert_eq!(p.p_norm, 0.0);
    }

    #[test]
    fn already_static_is_identity() {
        let dims = PatchDims::new(5, 7, 6).unwrap();
        let patch = PatchVolume::from_fn(dims, |_, v, h| 40.0 + (v * 7 + h) as f64);
        let flat = static_version(&patch).unwrap();
        for (a, b) in patch.values.iter().zip(&flat.values) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-9);
        }
    }

    #[test]
    fn scale_to_jnd_fixed_point() {
        let geom = tv_display();
        let params = SensitivityParams::<f64>::default();
        let spec = GratingSpec { f_t: 10.0, f_h: 4.54, contrast: 0.1, ..Default::default() };
        let patch: PatchVolume<f64> = generate_grating(&spec, &geom).unwrap();

        let scaled = scale_to_jnd(&patch, 1.0, 10.0, &params, &geom).unwrap();
        let p = patch_probability(&scaled, 10.0, &params, &geom, patch.dims).unwrap();
        assert_abs_diff_eq!(p.c_m, 1.0, epsilon = 1e-6);

        // Scaling is linear in the target.
        let four = scale_to_jnd(&patch, 4.0, 10.0, &params, &geom).unwrap();
        let one = scaled;
        let flat = static_version(&patch).unwrap();
        for ((a, b), s) in four.values.iter().zip(&one.values).zip(&flat.values) {
            assert_abs_diff_eq!(a - s, 4.0 * (b - s), epsilon = 1e-6);
        }
    }

    #[test]
    fn scale_to_jnd_zero_target_and_errors() {
        let geom = tv_display();
        let params = SensitivityParams::<f64>::default();
        let spec = GratingSpec { f_t: 10.0, contrast: 0.1, ..Default::default() };
        let patch: PatchVolume<f64> = generate_grating(&spec, &geom).unwrap();

        let zeroed = scale_to_jnd(&patch, 0.0, 10.0, &params, &geom).unwrap();
        let flat = static_version(&patch).unwrap();
        for (a, b) in zeroed.values.iter().zip(&flat.values) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-9);
        }

        let static_patch = PatchVolume::from_fn(patch.dims, |_, _, _| 80.0);
        assert!(scale_to_jnd(&static_patch, 1.0, 10.0, &params, &geom).is_err());
    }
}
