//! Prediction of temporal luminance change visibility across the visual
//! field, and its applications.
//!
//! The core predicts the probability that a human observer notices temporal
//! changes in video content at any retinal eccentricity. Video is split into
//! fixed spatio-temporal windows (25 frames of 71x71 pixels), each window is
//! decomposed with a non-orthonormalized DCT-I into band-limited Weber
//! contrasts, every component is scaled by an eccentricity-dependent
//! contrast sensitivity model into JND units, Minkowski pooling collapses
//! the window into one contrast level, and a Weibull psychometric function
//! maps it to a detection probability.
//!
//! On top of the predictor sit three applications:
//!
//! * [`visibility`] — per-patch probability heatmaps for whole videos,
//! * [`transition`] — blending schedules that hold the predicted
//!   detectability of a content swap at a chosen level,
//! * [`aliasing`] — motion-compensated flicker scoring of rendered
//!   sequences and critical-flicker-frequency tables.
//!
//! [`calibration`] refits the model constants from threshold and detection
//! data; [`stimulus`] synthesizes the grating stimuli those measurements
//! use.
//!
//! Numeric kernels are generic over the scalar type via [`scalar::Scalar`]:
//! `f64` for calibration, oracles, and tight-tolerance work, `f32` for the
//! bandwidth-bound video pipeline.

pub mod aliasing;
pub mod calibration;
pub mod dct;
pub mod error;
pub mod geometry;
pub mod model;
pub mod scalar;
pub mod solve;
pub mod stimulus;
pub mod transition;
pub mod visibility;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use dct::{PatchDims, PatchOrigin, PatchVolume, SpectrumPatch};
pub use geometry::{DisplayGeometry, FrequencyAxes, GazePoint};
pub use model::{SensitivityParams, ShapeParams, StimulusCoords};
pub use visibility::{
    analyze_video, AnalyzeOptions, FrameSource, MemoryFrames, PatchAnalyzer, VisibilityCell,
    VisibilityMap,
};

/// Double-precision parameter set: calibration, model queries, oracles.
pub type Params64 = SensitivityParams<f64>;
/// Single-precision parameter set for the streaming video pipeline.
pub type Params32 = SensitivityParams<f32>;
/// Double-precision patch volume.
pub type Patch64 = PatchVolume<f64>;
/// Single-precision patch volume.
pub type Patch32 = PatchVolume<f32>;
