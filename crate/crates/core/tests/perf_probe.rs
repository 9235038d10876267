//! Manual probe for the streaming analysis throughput. Run with
//! `cargo test -p tempvis --test perf_probe -- --ignored --nocapture`.

use std::time::Instant;

use tempvis::visibility::{analyze_video, AnalyzeOptions, FrameSource};
use tempvis::{DisplayGeometry, GazePoint, Params32};

/// Procedural 4K source: a fixed spatial pattern times a temporal flicker,
/// so each frame fill is one multiply pass.
struct PatternFlicker {
    width: usize,
    height: usize,
    frames: usize,
    base: Vec<f32>,
    fps: f64,
}

impl PatternFlicker {
    fn new(width: usize, height: usize, frames: usize, fps: f64) -> Self {
        let mut row = Vec::with_capacity(width);
        for x in 0..width {
            let t = x as f64 * 0.37;
            row.push(1.0 + 0.12 * (t.sin() + 0.5 * (t * 0.31 + 1.0).cos()));
        }
        let mut col = Vec::with_capacity(height);
        for y in 0..height {
            let t = y as f64 * 0.29;
            col.push(1.0 + 0.12 * ((t + 0.7).sin() + 0.5 * (t * 0.41).cos()));
        }
        let mut base = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                base.push((83.0 * row[x] * col[y]) as f32);
            }
        }
        Self { width, height, frames, base, fps }
    }
}

impl FrameSource<f32> for PatternFlicker {
    fn width(&self) -> usize {
        self.width
    }
    fn height(&self) -> usize {
        self.height
    }
    fn frame_count(&self) -> usize {
        self.frames
    }
    fn fill_frame(&mut self, index: usize, out: &mut [f32]) -> tempvis::Result<()> {
        let phase = (std::f64::consts::TAU * 10.0 * index as f64 / self.fps).cos();
        let gain = (1.0 + 0.2 * phase) as f32;
        for (o, &b) in out.iter_mut().zip(&self.base) {
            *o = gain * b;
        }
        Ok(())
    }
}

#[test]
#[ignore]
fn probe_4k_throughput() {
    let geom = DisplayGeometry::new(3840, 2160, 1218.0, 685.0, 620.0, 167.33, 0.0, 120.0).unwrap();
    let params = Params32::default();
    let frames = 600;
    let mut source = PatternFlicker::new(3840, 2160, frames, 120.0);
    let start = Instant::now();
    let map = analyze_video(
        &mut source,
        GazePoint::new(1920.0, 1080.0),
        &geom,
        &params,
        &AnalyzeOptions::default(),
    )
    .unwrap();
    let elapsed = start.elapsed();
    println!(
        "4K x {frames} frames: {:.1} s ({} windows x {}x{} cells)",
        elapsed.as_secs_f64(),
        map.windows,
        map.cols,
        map.rows
    );
}

#[test]
#[ignore]
fn probe_small_throughput() {
    let geom = DisplayGeometry::new(1136, 568, 361.3, 180.6, 620.0, 167.33, 0.0, 120.0).unwrap();
    let params = Params32::default();
    let mut source = PatternFlicker::new(1136, 568, 100, 120.0);
    let start = Instant::now();
    let map = analyze_video(
        &mut source,
        GazePoint::new(568.0, 284.0),
        &geom,
        &params,
        &AnalyzeOptions::default(),
    )
    .unwrap();
    let per_patch = start.elapsed().as_secs_f64() / (map.windows * map.cols * map.rows) as f64;
    println!("{} cells, {:.3} ms/patch", map.windows * map.cols * map.rows, per_patch * 1e3);
}
