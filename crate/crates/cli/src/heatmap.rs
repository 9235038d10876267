//! Probability heatmap overlays: the per-patch grid, nearest-neighbor
//! upsampled and alpha-blended over the first frame of its time window.

use image::{ImageBuffer, Rgb};
use tempvis::geometry::srgb;
use tempvis::VisibilityMap;

const OVERLAY_ALPHA: f64 = 0.45;

/// Black -> red -> yellow -> white ramp.
fn hot(p: f64) -> [f64; 3] {
    let p = p.clamp(0.0, 1.0);
    [(3.0 * p).min(1.0), (3.0 * p - 1.0).clamp(0.0, 1.0), (3.0 * p - 2.0).clamp(0.0, 1.0)]
}

/// Render one window of the map over its base frame (display-linear code
/// values, row-major).
pub fn render_overlay(
    base_codes: &[f64],
    width: usize,
    height: usize,
    map: &VisibilityMap,
    window: usize,
) -> ImageBuffer<Rgb<u8>, Vec<u8>> {
    let (nh, nv) = (map.patch_dims.nh, map.patch_dims.nv);
    ImageBuffer::from_fn(width as u32, height as u32, |x, y| {
        let (x, y) = (x as usize, y as usize);
        let gray = srgb::from_linear(base_codes[y * width + x].clamp(0.0, 1.0));
        let (col, row) = (x / nh, y / nv);
        let rgb = if col < map.cols && row < map.rows {
            let p = map.cell(window, row, col).p_norm;
            let tint = hot(p);
            [
                (1.0 - OVERLAY_ALPHA) * gray + OVERLAY_ALPHA * tint[0],
                (1.0 - OVERLAY_ALPHA) * gray + OVERLAY_ALPHA * tint[1],
                (1.0 - OVERLAY_ALPHA) * gray + OVERLAY_ALPHA * tint[2],
            ]
        } else {
            [gray, gray, gray]
        };
        Rgb(rgb.map(|c| (c.clamp(0.0, 1.0) * 255.0).round() as u8))
    })
}
