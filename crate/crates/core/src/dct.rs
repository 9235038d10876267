//! Spatio-temporal patch decomposition.
//!
//! Patches are fixed-size luminance volumes (25 frames of 71x71 pixels by
//! default) transformed with a separable, non-orthonormalized DCT-I along
//! each axis:
//!
//! `y_k = x_0 + (-1)^k x_{N-1} + 2 sum_{n=1..N-2} x_n cos(pi k n / (N - 1))`
//!
//! Coefficients are rescaled so a cosine basis product of amplitude `A`
//! recovers exactly `A` at its index, which makes the spectrum directly
//! comparable to Weber contrast amplitudes. The forward transform is an
//! accumulation over precomputed cosine rows; the inner loops are written so
//! they stay lane-parallel (no floating-point reductions) and vectorize.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Patch extent per axis: `nt` frames, `nh` columns, `nv` rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct PatchDims {
    pub nt: usize,
    pub nh: usize,
    pub nv: usize,
}

impl PatchDims {
    /// The calibrated window: 25 frames of 71x71 pixels.
    pub const DEFAULT: Self = Self { nt: 25, nh: 71, nv: 71 };

    pub fn new(nt: usize, nh: usize, nv: usize) -> Result<Self> {
        let dims = Self { nt, nh, nv };
        dims.validate()?;
        Ok(dims)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nt < 2 || self.nh < 2 || self.nv < 2 {
            return Err(Error::DimensionMismatch(format!(
                "patch dims must be >= 2 per axis, got {self:?}"
            )));
        }
        Ok(())
    }

    /// Parse the CLI form `TxHxV`, e.g. `25x71x71`.
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<_> = s.split('x').collect();
        if parts.len() != 3 {
            return Err(Error::Parse(format!("expected TxHxV patch dims, got '{s}'")));
        }
        let parse = |p: &str| {
            p.trim()
                .parse::<usize>()
                .map_err(|_| Error::Parse(format!("bad patch extent '{p}'")))
        };
        Self::new(parse(parts[0])?, parse(parts[1])?, parse(parts[2])?)
    }

    /// Total number of samples in a patch.
    pub fn len(&self) -> usize {
        self.nt * self.nh * self.nv
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Samples in one temporal plane.
    pub fn plane(&self) -> usize {
        self.nh * self.nv
    }

    /// Linear index of `(t, v, h)`; `h` is the fastest axis.
    #[inline(always)]
    pub fn idx(&self, t: usize, v: usize, h: usize) -> usize {
        (t * self.nv + v) * self.nh + h
    }
}

impl std::fmt::Display for PatchDims {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}x{}", self.nt, self.nh, self.nv)
    }
}

/// Position of a patch inside its source video.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PatchOrigin {
    pub frame: usize,
    pub x: usize,
    pub y: usize,
}

/// One spatio-temporal luminance window, values in cd/m², `h` fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchVolume<S> {
    pub dims: PatchDims,
    pub values: Vec<S>,
    pub origin: PatchOrigin,
}

impl<S: Scalar> PatchVolume<S> {
    pub fn new(dims: PatchDims, values: Vec<S>, origin: PatchOrigin) -> Result<Self> {
        dims.validate()?;
        if values.len() != dims.len() {
            return Err(Error::DimensionMismatch(format!(
                "patch expects {} values, got {}",
                dims.len(),
                values.len()
            )));
        }
        Ok(Self { dims, values, origin })
    }

    /// Build from a luminance function of `(t, v, h)` indices.
    pub fn from_fn(dims: PatchDims, mut f: impl FnMut(usize, usize, usize) -> S) -> Self {
        let mut values = Vec::with_capacity(dims.len());
        for t in 0..dims.nt {
            for v in 0..dims.nv {
                for h in 0..dims.nh {
                    values.push(f(t, v, h));
                }
            }
        }
        Self { dims, values, origin: PatchOrigin::default() }
    }

    #[inline]
    pub fn at(&self, t: usize, v: usize, h: usize) -> S {
        self.values[self.dims.idx(t, v, h)]
    }
}

/// Normalized DCT-I amplitudes of one patch: `delta_l[k]` is the luminance
/// amplitude of the basis product at index `k`, in cd/m²; the all-zero index
/// holds the (trapezoid-weighted) mean luminance.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumPatch<S> {
    pub dims: PatchDims,
    pub delta_l: Vec<S>,
    pub origin: PatchOrigin,
}

impl<S: Scalar> SpectrumPatch<S> {
    /// Mean (DC) luminance of the patch.
    #[inline]
    pub fn dc_luminance(&self) -> S {
        self.delta_l[0]
    }
}

/// Forward DCT-I of one sequence, straight from the definition. `N >= 2`.
pub fn dct1_forward<S: Scalar>(x: &[S]) -> Result<Vec<S>> {
    let n = x.len();
    if n < 2 {
        return Err(Error::DimensionMismatch(format!("DCT-I needs N >= 2, got {n}")));
    }
    let two = S::from_f64(2.0);
    let mut y = Vec::with_capacity(n);
    for k in 0..n {
        let sign = if k % 2 == 0 { S::one() } else { -S::one() };
        let mut acc = x[0] + sign * x[n - 1];
        for (i, &v) in x.iter().enumerate().take(n - 1).skip(1) {
            let angle = std::f64::consts::PI * (k * i) as f64 / (n as f64 - 1.0);
            acc = acc + two * v * S::from_f64(angle.cos());
        }
        y.push(acc);
    }
    Ok(y)
}

/// Cosine rows for one axis. `forward[k*n + i]` is the weight of sample `i`
/// in output `k`; `transposed` holds the same matrix with the roles swapped
/// for accumulation along the contiguous axis.
struct AxisTable<S> {
    forward: Vec<S>,
    transposed: Vec<S>,
    /// Amplitude normalization per index: `(2 for interior k else 1) / (2 (n-1))`.
    norm: Vec<S>,
}

impl<S: Scalar> AxisTable<S> {
    fn new(n: usize) -> Self {
        let mut forward = vec![S::zero(); n * n];
        for k in 0..n {
            for i in 0..n {
                let w = if i == 0 {
                    1.0
                } else if i == n - 1 {
                    if k % 2 == 0 {
                        1.0
                    } else {
                        -1.0
                    }
                } else {
                    2.0 * (std::f64::consts::PI * (k * i) as f64 / (n as f64 - 1.0)).cos()
                };
                forward[k * n + i] = S::from_f64(w);
            }
        }
        let mut transposed = vec![S::zero(); n * n];
        for k in 0..n {
            for i in 0..n {
                transposed[i * n + k] = forward[k * n + i];
            }
        }
        let denom = 2.0 * (n as f64 - 1.0);
        let norm = (0..n)
            .map(|k| {
                let c = if k == 0 || k == n - 1 { 1.0 } else { 2.0 };
                S::from_f64(c / denom)
            })
            .collect();
        Self { forward, transposed, norm }
    }
}

/// Separable 3-D DCT-I plan for a fixed patch size. Immutable and cheap to
/// share; callers supply scratch so transforms can run in parallel.
pub struct Dct3<S> {
    pub dims: PatchDims,
    t: Arc<AxisTable<S>>,
    h: Arc<AxisTable<S>>,
    v: Arc<AxisTable<S>>,
}

impl<S: Scalar> Clone for Dct3<S> {
    fn clone(&self) -> Self {
        Self { dims: self.dims, t: self.t.clone(), h: self.h.clone(), v: self.v.clone() }
    }
}

impl<S: Scalar> Dct3<S> {
    pub fn new(dims: PatchDims) -> Result<Self> {
        dims.validate()?;
        let t = Arc::new(AxisTable::new(dims.nt));
        let h = if dims.nh == dims.nt { t.clone() } else { Arc::new(AxisTable::new(dims.nh)) };
        let v = if dims.nv == dims.nt {
            t.clone()
        } else if dims.nv == dims.nh {
            h.clone()
        } else {
            Arc::new(AxisTable::new(dims.nv))
        };
        Ok(Self { dims, t, h, v })
    }

    /// Raw (unnormalized) forward coefficients of `x` into `out`.
    /// `scratch` must match the patch length.
    pub fn forward_raw(&self, x: &[S], out: &mut [S], scratch: &mut [S]) {
        let d = self.dims;
        assert_eq!(x.len(), d.len());
        assert_eq!(out.len(), d.len());
        assert_eq!(scratch.len(), d.len());

        // t axis: accumulate whole planes.
        let plane = d.plane();
        out.fill(S::zero());
        for kt in 0..d.nt {
            let orow = &mut out[kt * plane..(kt + 1) * plane];
            for t in 0..d.nt {
                let a = self.t.forward[kt * d.nt + t];
                let xrow = &x[t * plane..(t + 1) * plane];
                axpy(orow, xrow, a);
            }
        }

        // v axis: accumulate rows within each temporal plane.
        scratch.fill(S::zero());
        for kt in 0..d.nt {
            let pin = &out[kt * plane..(kt + 1) * plane];
            let pout = &mut scratch[kt * plane..(kt + 1) * plane];
            for kv in 0..d.nv {
                let orow = &mut pout[kv * d.nh..(kv + 1) * d.nh];
                for v in 0..d.nv {
                    let a = self.v.forward[kv * d.nv + v];
                    axpy(orow, &pin[v * d.nh..(v + 1) * d.nh], a);
                }
            }
        }

        // h axis: accumulate transposed rows so the inner loop stays
        // contiguous in both the table and the output.
        out.fill(S::zero());
        for (xrow, orow) in scratch.chunks_exact(d.nh).zip(out.chunks_exact_mut(d.nh)) {
            for (h, &xv) in xrow.iter().enumerate() {
                axpy(orow, &self.h.transposed[h * d.nh..(h + 1) * d.nh], xv);
            }
        }
    }

    /// Amplitude normalization factor for index `(kt, kv, kh)`.
    #[inline]
    pub fn norm_factor(&self, kt: usize, kv: usize, kh: usize) -> S {
        self.t.norm[kt] * self.v.norm[kv] * self.h.norm[kh]
    }

    /// Per-axis amplitude normalization vectors `(t, h, v)`.
    pub fn axis_norms(&self) -> (&[S], &[S], &[S]) {
        (&self.t.norm, &self.h.norm, &self.v.norm)
    }

    /// Rescale raw coefficients in place to amplitude-exact values.
    pub fn normalize(&self, coeffs: &mut [S]) {
        let d = self.dims;
        let mut i = 0;
        for kt in 0..d.nt {
            let wt = self.t.norm[kt];
            for kv in 0..d.nv {
                let w = wt * self.v.norm[kv];
                for wh in &self.h.norm {
                    coeffs[i] = coeffs[i] * w * *wh;
                    i += 1;
                }
            }
        }
    }

    /// Full forward transform of a patch to normalized amplitudes.
    pub fn forward_spectrum(&self, patch: &PatchVolume<S>) -> Result<SpectrumPatch<S>> {
        if patch.dims != self.dims {
            return Err(Error::DimensionMismatch(format!(
                "plan is {} but patch is {}",
                self.dims, patch.dims
            )));
        }
        let mut out = vec![S::zero(); self.dims.len()];
        let mut scratch = vec![S::zero(); self.dims.len()];
        self.forward_raw(&patch.values, &mut out, &mut scratch);
        self.normalize(&mut out);
        Ok(SpectrumPatch { dims: self.dims, delta_l: out, origin: patch.origin })
    }

    /// Reconstruct the luminance patch from a normalized spectrum.
    ///
    /// DCT-I is self-inverse up to a factor of `2 (N - 1)` per axis, so the
    /// inverse undoes the amplitude normalization and reapplies the forward
    /// pass with that scale.
    pub fn inverse(&self, spectrum: &SpectrumPatch<S>) -> Result<PatchVolume<S>> {
        if spectrum.dims != self.dims {
            return Err(Error::DimensionMismatch(format!(
                "plan is {} but spectrum is {}",
                self.dims, spectrum.dims
            )));
        }
        let d = self.dims;
        let mut raw = vec![S::zero(); d.len()];
        let mut i = 0;
        for kt in 0..d.nt {
            let wt = self.t.norm[kt];
            for kv in 0..d.nv {
                let w = wt * self.v.norm[kv];
                for wh in &self.h.norm {
                    raw[i] = spectrum.delta_l[i] / (w * *wh);
                    i += 1;
                }
            }
        }
        let mut out = vec![S::zero(); d.len()];
        let mut scratch = vec![S::zero(); d.len()];
        self.forward_raw(&raw, &mut out, &mut scratch);
        let scale = S::from_f64(
            1.0 / (2.0 * (d.nt as f64 - 1.0) * 2.0 * (d.nh as f64 - 1.0) * 2.0 * (d.nv as f64 - 1.0)),
        );
        for v in &mut out {
            *v = *v * scale;
        }
        Ok(PatchVolume { dims: d, values: out, origin: spectrum.origin })
    }
}

#[inline(always)]
fn axpy<S: Scalar>(out: &mut [S], x: &[S], a: S) {
    for (o, &v) in out.iter_mut().zip(x) {
        *o += a * v;
    }
}

/// Separable 2-D DCT-I plan for one spatial plane (`nv` rows of `nh`).
pub struct Dct2<S> {
    pub nh: usize,
    pub nv: usize,
    h: Arc<AxisTable<S>>,
    v: Arc<AxisTable<S>>,
}

impl<S: Scalar> Dct2<S> {
    pub fn new(nh: usize, nv: usize) -> Result<Self> {
        if nh < 2 || nv < 2 {
            return Err(Error::DimensionMismatch(format!(
                "2-D DCT needs at least 2 samples per axis, got {nh}x{nv}"
            )));
        }
        let h = Arc::new(AxisTable::new(nh));
        let v = if nv == nh { h.clone() } else { Arc::new(AxisTable::new(nv)) };
        Ok(Self { nh, nv, h, v })
    }

    /// Raw forward coefficients of a row-major plane.
    pub fn forward_raw(&self, x: &[S], out: &mut [S], scratch: &mut [S]) {
        let (nh, nv) = (self.nh, self.nv);
        assert_eq!(x.len(), nh * nv);
        assert_eq!(out.len(), nh * nv);
        assert_eq!(scratch.len(), nh * nv);
        scratch.fill(S::zero());
        for kv in 0..nv {
            let orow = &mut scratch[kv * nh..(kv + 1) * nh];
            for v in 0..nv {
                axpy(orow, &x[v * nh..(v + 1) * nh], self.v.forward[kv * nv + v]);
            }
        }
        out.fill(S::zero());
        for (xrow, orow) in scratch.chunks_exact(nh).zip(out.chunks_exact_mut(nh)) {
            for (h, &xv) in xrow.iter().enumerate() {
                axpy(orow, &self.h.transposed[h * nh..(h + 1) * nh], xv);
            }
        }
    }

    /// Per-axis amplitude normalization vectors `(h, v)`.
    pub fn axis_norms(&self) -> (&[S], &[S]) {
        (&self.h.norm, &self.v.norm)
    }

    /// Amplitude-normalized DC (the trapezoid-weighted plane mean).
    pub fn dc(&self, raw: &[S]) -> S {
        raw[0] * self.h.norm[0] * self.v.norm[0]
    }
}

/// Band-limited Weber contrast: every amplitude divided by
/// `max(dc_luminance, l_min)`. The result is dimensionless; the entry at the
/// all-zero index becomes `dc / max(dc, l_min)` and is excluded from pooling
/// downstream.
pub fn weber_contrast<S: Scalar>(spectrum: &SpectrumPatch<S>, l_min: S) -> Result<Vec<S>> {
    if !(l_min > S::zero()) {
        return Err(Error::Domain(format!("l_min must be positive, got {l_min}")));
    }
    let denom = spectrum.dc_luminance().max(l_min);
    Ok(spectrum.delta_l.iter().map(|&a| a / denom).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::ProptestConfig;
    use proptest::{prop_assert, proptest};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn small_dims() -> PatchDims {
        PatchDims::new(5, 7, 6).unwrap()
    }

    /// Reference 3-D transform built on the 1-D definition, applying axes in
    /// a caller-chosen order. Lanes along an axis are enumerated by the base
    /// index of every element whose coordinate on that axis is zero.
    fn dct3_reference(patch: &PatchVolume<f64>, order: [usize; 3]) -> Vec<f64> {
        let d = patch.dims;
        let mut data = patch.values.clone();
        for &axis in &order {
            let (n, stride) = match axis {
                0 => (d.nt, d.plane()),
                1 => (d.nv, d.nh),
                2 => (d.nh, 1),
                _ => unreachable!(),
            };
            let bases: Vec<usize> = (0..d.len())
                .filter(|i| match axis {
                    0 => i / d.plane() == 0,
                    1 => (i % d.plane()) / d.nh == 0,
                    _ => i % d.nh == 0,
                })
                .collect();
            let mut next = data.clone();
            for base in bases {
                let lane: Vec<f64> = (0..n).map(|i| data[base + i * stride]).collect();
                let y = dct1_forward(&lane).unwrap();
                for (i, &v) in y.iter().enumerate() {
                    next[base + i * stride] = v;
                }
            }
            data = next;
        }
        data
    }

    #[test]
    fn dct1_constant_input() {
        for n in [2usize, 5, 25, 71] {
            let x = vec![3.5f64; n];
            let y = dct1_forward(&x).unwrap();
            assert_abs_diff_eq!(y[0], 2.0 * 3.5 * (n as f64 - 1.0), epsilon = 1e-9);
            for &v in &y[1..] {
                assert_abs_diff_eq!(v, 0.0, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn dct1_interior_cosine() {
        let n = 25;
        for k0 in 1..n - 1 {
            let x: Vec<f64> = (0..n)
                .map(|i| (std::f64::consts::PI * (k0 * i) as f64 / (n as f64 - 1.0)).cos())
                .collect();
            let y = dct1_forward(&x).unwrap();
            for (k, &v) in y.iter().enumerate() {
                let expected = if k == k0 { n as f64 - 1.0 } else { 0.0 };
                assert_abs_diff_eq!(v, expected, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn dct1_two_point() {
        let y = dct1_forward(&[2.0f64, 5.0]).unwrap();
        assert_eq!(y, vec![7.0, -3.0]);
        assert!(dct1_forward(&[1.0f64]).is_err());
    }

    #[test]
    fn plan_matches_definition() {
        let dims = small_dims();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let patch =
            PatchVolume::from_fn(dims, |_, _, _| rng.gen_range(0.0..100.0));
        let plan = Dct3::<f64>::new(dims).unwrap();
        let mut out = vec![0.0; dims.len()];
        let mut scratch = vec![0.0; dims.len()];
        plan.forward_raw(&patch.values, &mut out, &mut scratch);
        let reference = dct3_reference(&patch, [0, 1, 2]);
        for (a, b) in out.iter().zip(&reference) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-9 * b.abs().max(1.0));
        }
    }

    #[test]
    fn axis_order_is_irrelevant() {
        let dims = small_dims();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let patch = PatchVolume::from_fn(dims, |_, _, _| rng.gen_range(0.0..50.0));
        let a = dct3_reference(&patch, [0, 1, 2]);
        let b = dct3_reference(&patch, [2, 0, 1]);
        let c = dct3_reference(&patch, [1, 2, 0]);
        for ((x, y), z) in a.iter().zip(&b).zip(&c) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-9 * x.abs().max(1.0));
            assert_abs_diff_eq!(x, z, epsilon = 1e-9 * x.abs().max(1.0));
        }
    }

    #[test]
    fn constant_patch_spectrum() {
        let dims = small_dims();
        let plan = Dct3::<f64>::new(dims).unwrap();
        let patch = PatchVolume::from_fn(dims, |_, _, _| 83.0);
        let spec = plan.forward_spectrum(&patch).unwrap();
        assert_abs_diff_eq!(spec.dc_luminance(), 83.0, epsilon = 1e-9);
        for &v in &spec.delta_l[1..] {
            assert_abs_diff_eq!(v, 0.0, epsilon = 1e-9);
        }
        // Raw DC of a constant patch is c * prod(2 (N - 1)).
        let mut out = vec![0.0; dims.len()];
        let mut scratch = vec![0.0; dims.len()];
        plan.forward_raw(&patch.values, &mut out, &mut scratch);
        let expected =
            83.0 * 2.0 * (dims.nt as f64 - 1.0) * 2.0 * (dims.nh as f64 - 1.0) * 2.0 * (dims.nv as f64 - 1.0);
        assert_abs_diff_eq!(out[0], expected, epsilon = 1e-6);
    }

    #[test]
    fn amplitude_recovery_single_basis() {
        let dims = PatchDims::new(6, 9, 8).unwrap();
        let plan = Dct3::<f64>::new(dims).unwrap();
        // Include edge indices on each axis.
        for (kt, kv, kh) in [(2, 3, 4), (0, 1, 2), (5, 7, 8), (1, 0, 0), (5, 0, 8)] {
            let amp = 0.37;
            let patch = PatchVolume::from_fn(dims, |t, v, h| {
                let ct = (std::f64::consts::PI * (kt * t) as f64 / (dims.nt as f64 - 1.0)).cos();
                let cv = (std::f64::consts::PI * (kv * v) as f64 / (dims.nv as f64 - 1.0)).cos();
                let ch = (std::f64::consts::PI * (kh * h) as f64 / (dims.nh as f64 - 1.0)).cos();
                amp * ct * cv * ch
            });
            let spec = plan.forward_spectrum(&patch).unwrap();
            for t in 0..dims.nt {
                for v in 0..dims.nv {
                    for h in 0..dims.nh {
                        let got = spec.delta_l[dims.idx(t, v, h)];
                        let expected = if (t, v, h) == (kt, kv, kh) { amp } else { 0.0 };
                        assert_abs_diff_eq!(got, expected, epsilon = 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn separable_product_equals_outer_product() {
        let dims = small_dims();
        let plan = Dct3::<f64>::new(dims).unwrap();
        let ft: Vec<f64> = (0..dims.nt).map(|t| 1.0 + (t as f64 * 0.7).sin()).collect();
        let fv: Vec<f64> = (0..dims.nv).map(|v| 2.0 + (v as f64 * 0.3).cos()).collect();
        let fh: Vec<f64> = (0..dims.nh).map(|h| 1.5 + (h as f64 * 0.5).sin()).collect();
        let patch = PatchVolume::from_fn(dims, |t, v, h| ft[t] * fv[v] * fh[h]);
        let mut out = vec![0.0; dims.len()];
        let mut scratch = vec![0.0; dims.len()];
        plan.forward_raw(&patch.values, &mut out, &mut scratch);
        let yt = dct1_forward(&ft).unwrap();
        let yv = dct1_forward(&fv).unwrap();
        let yh = dct1_forward(&fh).unwrap();
        for t in 0..dims.nt {
            for v in 0..dims.nv {
                for h in 0..dims.nh {
                    let expected = yt[t] * yv[v] * yh[h];
                    assert_abs_diff_eq!(
                        out[dims.idx(t, v, h)],
                        expected,
                        epsilon = 1e-9 * expected.abs().max(1.0)
                    );
                }
            }
        }
    }

    #[test]
    fn round_trip_random_patch() {
        let dims = small_dims();
        let plan = Dct3::<f64>::new(dims).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let peak = 167.33;
        let patch = PatchVolume::from_fn(dims, |_, _, _| rng.gen_range(0.0..peak));
        let spec = plan.forward_spectrum(&patch).unwrap();
        let back = plan.inverse(&spec).unwrap();
        for (a, b) in patch.values.iter().zip(&back.values) {
            assert!((a - b).abs() < 1e-9 * peak);
        }
        // Energy is preserved through the round trip.
        let e_in: f64 = patch.values.iter().map(|v| v * v).sum();
        let e_out: f64 = back.values.iter().map(|v| v * v).sum();
        assert!((e_in - e_out).abs() / e_in < 1e-6);
    }

    #[test]
    fn static_projection_is_temporally_constant() {
        let dims = small_dims();
        let plan = Dct3::<f64>::new(dims).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let patch = PatchVolume::from_fn(dims, |_, _, _| rng.gen_range(10.0..90.0));
        let mut spec = plan.forward_spectrum(&patch).unwrap();
        for i in dims.plane()..dims.len() {
            spec.delta_l[i] = 0.0;
        }
        let flat = plan.inverse(&spec).unwrap();
        for v in 0..dims.nv {
            for h in 0..dims.nh {
                let first = flat.at(0, v, h);
                for t in 1..dims.nt {
                    assert_abs_diff_eq!(flat.at(t, v, h), first, epsilon = 1e-9);
                }
            }
        }
    }

    #[test]
    fn inverse_of_unit_amplitude_is_basis_product() {
        let dims = small_dims();
        let plan = Dct3::<f64>::new(dims).unwrap();
        let (kt, kv, kh) = (3, 2, 5);
        let mut spec = SpectrumPatch {
            dims,
            delta_l: vec![0.0; dims.len()],
            origin: PatchOrigin::default(),
        };
        spec.delta_l[dims.idx(kt, kv, kh)] = 1.0;
        let patch = plan.inverse(&spec).unwrap();
        for t in 0..dims.nt {
            for v in 0..dims.nv {
                for h in 0..dims.nh {
                    let expected = (std::f64::consts::PI * (kt * t) as f64 / (dims.nt as f64 - 1.0)).cos()
                        * (std::f64::consts::PI * (kv * v) as f64 / (dims.nv as f64 - 1.0)).cos()
                        * (std::f64::consts::PI * (kh * h) as f64 / (dims.nh as f64 - 1.0)).cos();
                    assert_abs_diff_eq!(patch.at(t, v, h), expected, epsilon = 1e-9);
                }
            }
        }
    }

    #[test]
    fn weber_contrast_clips_denominator() {
        let dims = small_dims();
        let plan = Dct3::<f64>::new(dims).unwrap();
        let bright = plan.forward_spectrum(&PatchVolume::from_fn(dims, |_, _, _| 83.0)).unwrap();
        let c = weber_contrast(&bright, 50.0).unwrap();
        assert_abs_diff_eq!(c[0], 1.0, epsilon = 1e-9);
        for &v in &c[1..] {
            assert_abs_diff_eq!(v, 0.0, epsilon = 1e-12);
        }

        let dim = plan.forward_spectrum(&PatchVolume::from_fn(dims, |_, _, _| 10.0)).unwrap();
        let c = weber_contrast(&dim, 50.0).unwrap();
        // Denominator clips at l_min.
        assert_abs_diff_eq!(c[0], 10.0 / 50.0, epsilon = 1e-9);
        assert!(weber_contrast(&dim, 0.0).is_err());
    }

    #[test]
    fn f32_plan_matches_f64_loosely() {
        let dims = small_dims();
        let plan64 = Dct3::<f64>::new(dims).unwrap();
        let plan32 = Dct3::<f32>::new(dims).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p64 = PatchVolume::from_fn(dims, |_, _, _| rng.gen_range(0.0..160.0));
        let p32 = PatchVolume {
            dims,
            values: p64.values.iter().map(|&v| v as f32).collect(),
            origin: PatchOrigin::default(),
        };
        let s64 = plan64.forward_spectrum(&p64).unwrap();
        let s32 = plan32.forward_spectrum(&p32).unwrap();
        for (a, b) in s64.delta_l.iter().zip(&s32.delta_l) {
            assert!((a - f64::from(*b)).abs() < 1e-2);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn transform_is_linear(seed in 0u64..1000, alpha in -3.0f64..3.0, beta in -3.0f64..3.0) {
            let dims = PatchDims::new(4, 5, 3).unwrap();
            let plan = Dct3::<f64>::new(dims).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = PatchVolume::from_fn(dims, |_, _, _| rng.gen_range(-1.0..1.0));
            let y = PatchVolume::from_fn(dims, |_, _, _| rng.gen_range(-1.0..1.0));
            let combined = PatchVolume {
                dims,
                values: x.values.iter().zip(&y.values).map(|(a, b)| alpha * a + beta * b).collect(),
                origin: PatchOrigin::default(),
            };
            let sx = plan.forward_spectrum(&x).unwrap();
            let sy = plan.forward_spectrum(&y).unwrap();
            let sc = plan.forward_spectrum(&combined).unwrap();
            for ((a, b), c) in sx.delta_l.iter().zip(&sy.delta_l).zip(&sc.delta_l) {
                let expected = alpha * a + beta * b;
                prop_assert!((c - expected).abs() < 1e-9 * expected.abs().max(1.0));
            }
        }

        #[test]
        fn round_trip_is_tight(seed in 0u64..1000) {
            let dims = PatchDims::new(3, 4, 5).unwrap();
            let plan = Dct3::<f64>::new(dims).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = PatchVolume::from_fn(dims, |_, _, _| rng.gen_range(0.0..200.0));
            let back = plan.inverse(&plan.forward_spectrum(&x).unwrap()).unwrap();
            for (a, b) in x.values.iter().zip(&back.values) {
                prop_assert!((a - b).abs() < 1e-9 * 200.0);
            }
        }
    }
}
