//! PNG frame ingestion and emission.
//!
//! Frames are numbered PNG files (8- or 16-bit, gray or color), sRGB-encoded
//! unless the run passes `--linear-input`. Decoding produces display-linear
//! code values in [0, 1]; luminance conversion happens against the display
//! geometry when frames enter the analysis.

use std::path::{Path, PathBuf};

use image::{DynamicImage, ImageBuffer, Luma};
use tempvis::geometry::srgb;
use tempvis::transition::LinearImage;
use tempvis::visibility::FrameSource;
use tempvis::DisplayGeometry;

use crate::common::{runtime, usage, CliResult};

/// All PNG files of a directory, sorted by file name.
pub fn list_pngs(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir)
        .map_err(|e| usage(anyhow::anyhow!("cannot read frame dir {}: {e}", dir.display())))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().map(|x| x.eq_ignore_ascii_case("png")).unwrap_or(false))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(usage(anyhow::anyhow!("no .png frames in {}", dir.display())));
    }
    Ok(paths)
}

/// Decode one image to display-linear code values in [0, 1], row-major.
/// Color inputs collapse to luminance with Rec. 709 weights after the
/// per-channel transfer function.
pub fn decode_to_codes(img: &DynamicImage, linear_input: bool) -> (usize, usize, Vec<f64>) {
    let to_linear = |v: f64| if linear_input { v } else { srgb::to_linear(v) };
    match img {
        DynamicImage::ImageLuma8(buf) => {
            let data = buf.pixels().map(|p| to_linear(f64::from(p.0[0]) / 255.0)).collect();
            (buf.width() as usize, buf.height() as usize, data)
        }
        DynamicImage::ImageLuma16(buf) => {
            let data = buf.pixels().map(|p| to_linear(f64::from(p.0[0]) / 65535.0)).collect();
            (buf.width() as usize, buf.height() as usize, data)
        }
        other => {
            let rgb = other.to_rgb32f();
            let data = rgb
                .pixels()
                .map(|p| {
                    let r = to_linear(f64::from(p.0[0]));
                    let g = to_linear(f64::from(p.0[1]));
                    let b = to_linear(f64::from(p.0[2]));
                    0.2126 * r + 0.7152 * g + 0.0722 * b
                })
                .collect();
            (rgb.width() as usize, rgb.height() as usize, data)
        }
    }
}

pub fn load_image(path: &Path) -> CliResult<DynamicImage> {
    image::open(path).map_err(|e| usage(anyhow::anyhow!("cannot decode {}: {e}", path.display())))
}

/// Load one image as a display-linear grayscale [`LinearImage`].
pub fn load_linear_image(path: &Path, linear_input: bool) -> CliResult<LinearImage> {
    let img = load_image(path)?;
    let (w, h, data) = decode_to_codes(&img, linear_input);
    LinearImage::new(w, h, data).map_err(|e| usage(anyhow::anyhow!("{}: {e}", path.display())))
}

/// Streaming frame source over a PNG directory, yielding luminance in
/// cd/m². Frames are decoded on demand.
pub struct PngDirSource {
    paths: Vec<PathBuf>,
    width: usize,
    height: usize,
    linear_input: bool,
    black: f64,
    span: f64,
}

impl PngDirSource {
    pub fn new(paths: Vec<PathBuf>, linear_input: bool, geom: &DisplayGeometry) -> CliResult<Self> {
        assert!(!paths.is_empty());
        let first = load_image(&paths[0])?;
        Ok(Self {
            paths,
            width: first.width() as usize,
            height: first.height() as usize,
            linear_input,
            black: geom.black_luminance,
            span: geom.peak_luminance - geom.black_luminance,
        })
    }

    /// Display-linear code values of one frame (used for heatmap bases).
    pub fn frame_codes(&self, index: usize) -> CliResult<(usize, usize, Vec<f64>)> {
        let img = load_image(&self.paths[index])?;
        Ok(decode_to_codes(&img, self.linear_input))
    }
}

impl FrameSource<f32> for PngDirSource {
    fn width(&self) -> usize {
        self.width
    }
    fn height(&self) -> usize {
        self.height
    }
    fn frame_count(&self) -> usize {
        self.paths.len()
    }
    fn fill_frame(&mut self, index: usize, out: &mut [f32]) -> tempvis::Result<()> {
        let path = &self.paths[index];
        let img = image::open(path).map_err(|e| {
            tempvis::Error::Parse(format!("cannot decode {}: {e}", path.display()))
        })?;
        let (w, h, codes) = decode_to_codes(&img, self.linear_input);
        if w != self.width || h != self.height {
            return Err(tempvis::Error::DimensionMismatch(format!(
                "{} is {w}x{h}, expected {}x{}",
                path.display(),
                self.width,
                self.height
            )));
        }
        for (o, v) in out.iter_mut().zip(codes) {
            *o = (self.black + self.span * v) as f32;
        }
        Ok(())
    }
}

/// Write a display-linear grayscale plane as an sRGB-encoded PNG.
pub fn write_gray_png(path: &Path, width: usize, height: usize, codes: &[f64], bit_depth: u8) -> CliResult<()> {
    match bit_depth {
        8 => {
            let buf: ImageBuffer<Luma<u8>, Vec<u8>> =
                ImageBuffer::from_fn(width as u32, height as u32, |x, y| {
                    let v = codes[y as usize * width + x as usize].clamp(0.0, 1.0);
                    Luma([(srgb::from_linear(v) * 255.0).round() as u8])
                });
            buf.save(path)
                .map_err(|e| runtime(anyhow::anyhow!("cannot write {}: {e}", path.display())))
        }
        16 => {
            let buf: ImageBuffer<Luma<u16>, Vec<u16>> =
                ImageBuffer::from_fn(width as u32, height as u32, |x, y| {
                    let v = codes[y as usize * width + x as usize].clamp(0.0, 1.0);
                    Luma([(srgb::from_linear(v) * 65535.0).round() as u16])
                });
            buf.save(path)
                .map_err(|e| runtime(anyhow::anyhow!("cannot write {}: {e}", path.display())))
        }
        other => Err(usage(anyhow::anyhow!("bit depth must be 8 or 16, got {other}"))),
    }
}
