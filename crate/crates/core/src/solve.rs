//! Scalar root finding and derivative-free minimization used by the
//! transition optimizer and the calibration fits.

/// Outcome of a bracketing root search.
#[derive(Debug, Clone, Copy)]
pub struct RootResult {
    pub root: f64,
    pub f_root: f64,
    pub iterations: usize,
    /// Width of the final bracket.
    pub bracket: f64,
}

/// Brent's method on `[a, b]`. Requires `f(a)` and `f(b)` of opposite sign
/// (either may be zero). Stops when the bracket shrinks below `xtol` or
/// `|f| <= ftol`.
pub fn brent_root(
    mut f: impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    xtol: f64,
    ftol: f64,
    max_iter: usize,
) -> Option<RootResult> {
    let (mut a, mut b) = (a, b);
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Some(RootResult { root: a, f_root: 0.0, iterations: 0, bracket: 0.0 });
    }
    if fb == 0.0 {
        return Some(RootResult { root: b, f_root: 0.0, iterations: 0, bracket: 0.0 });
    }
    if fa.signum() == fb.signum() {
        return None;
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for iter in 0..max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb.abs() <= ftol {
            return Some(RootResult { root: b, f_root: fb, iterations: iter, bracket: (c - b).abs() });
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            // Inverse quadratic interpolation, falling back to secant.
            let s = fb / fa;
            let (mut p, mut q) = if a == c {
                (2.0 * xm * s, 1.0 - s)
            } else {
                let q = fa / fc;
                let r = fb / fc;
                (s * (2.0 * xm * q * (q - r) - (b - a) * (r - 1.0)), (q - 1.0) * (r - 1.0) * (s - 1.0))
            };
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b);
    }
    Some(RootResult { root: b, f_root: fb, iterations: max_iter, bracket: (c - b).abs() })
}

/// Plain bisection for monotone predicates; returns the midpoint of the
/// final bracket.
pub fn bisect(mut f: impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64, xtol: f64, max_iter: usize) -> f64 {
    let mut flo = f(lo);
    for _ in 0..max_iter {
        if hi - lo <= xtol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Result of a Nelder-Mead run.
#[derive(Debug, Clone)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub loss: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Options for [`nelder_mead`].
#[derive(Debug, Clone)]
pub struct SimplexOptions {
    pub max_iter: usize,
    /// Converged when the simplex loss spread falls below this.
    pub ftol: f64,
    /// Initial simplex edge length, relative to each bound range.
    pub initial_step: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self { max_iter: 4000, ftol: 1e-12, initial_step: 0.08 }
    }
}

/// Nelder-Mead with box constraints: every candidate point is clamped into
/// the bounds before evaluation.
pub fn nelder_mead(
    mut f: impl FnMut(&[f64]) -> f64,
    x0: &[f64],
    bounds: &[(f64, f64)],
    opts: &SimplexOptions,
) -> SimplexResult {
    let n = x0.len();
    assert_eq!(bounds.len(), n);
    let clamp = |x: &mut Vec<f64>| {
        for (v, &(lo, hi)) in x.iter_mut().zip(bounds) {
            *v = v.clamp(lo, hi);
        }
    };

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    let mut start = x0.to_vec();
    clamp(&mut start);
    simplex.push(start.clone());
    for i in 0..n {
        let mut p = start.clone();
        let span = bounds[i].1 - bounds[i].0;
        let step = if span.is_finite() && span > 0.0 { span * opts.initial_step } else { 0.1 };
        p[i] = if p[i] + step <= bounds[i].1 { p[i] + step } else { p[i] - step };
        clamp(&mut p);
        simplex.push(p);
    }
    let mut losses: Vec<f64> = simplex.iter().map(|p| f(p)).collect();

    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        iterations += 1;
        // Order ascending by loss.
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&i, &j| losses[i].partial_cmp(&losses[j]).unwrap_or(std::cmp::Ordering::Equal));
        let reordered: Vec<Vec<f64>> = order.iter().map(|&i| simplex[i].clone()).collect();
        let reordered_loss: Vec<f64> = order.iter().map(|&i| losses[i]).collect();
        simplex = reordered;
        losses = reordered_loss;

        if (losses[n] - losses[0]).abs() <= opts.ftol * (1.0 + losses[0].abs()) {
            converged = true;
            break;
        }

        let mut centroid = vec![0.0; n];
        for p in &simplex[..n] {
            for (c, v) in centroid.iter_mut().zip(p) {
                *c += v / n as f64;
            }
        }
        let point = |base: &[f64], dir: f64| {
            let mut p: Vec<f64> =
                centroid.iter().zip(base).map(|(c, w)| c + dir * (c - w)).collect();
            clamp(&mut p);
            p
        };

        let reflected = point(&simplex[n], alpha);
        let fr = f(&reflected);
        if fr < losses[0] {
            let expanded = point(&simplex[n], gamma);
            let fe = f(&expanded);
            if fe < fr {
                simplex[n] = expanded;
                losses[n] = fe;
            } else {
                simplex[n] = reflected;
                losses[n] = fr;
            }
        } else if fr < losses[n - 1] {
            simplex[n] = reflected;
            losses[n] = fr;
        } else {
            let contracted = point(&simplex[n], -rho);
            let fc = f(&contracted);
            if fc < losses[n] {
                simplex[n] = contracted;
                losses[n] = fc;
            } else {
                // Shrink toward the best vertex.
                let best = simplex[0].clone();
                for i in 1..=n {
                    for (v, b) in simplex[i].iter_mut().zip(&best) {
                        *v = b + sigma * (*v - b);
                    }
                    let mut p = simplex[i].clone();
                    clamp(&mut p);
                    simplex[i] = p;
                    losses[i] = f(&simplex[i]);
                }
            }
        }
    }

    let mut best = 0;
    for i in 1..=n {
        if losses[i] < losses[best] {
            best = i;
        }
    }
    SimplexResult { x: simplex[best].clone(), loss: losses[best], iterations, converged }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brent_finds_cubic_root() {
        let f = |x: f64| x * x * x - 2.0 * x - 5.0;
        let r = brent_root(f, 1.0, 3.0, 1e-12, 0.0, 100).unwrap();
        assert!((f(r.root)).abs() < 1e-10);
        assert!((r.root - 2.0945514815423265).abs() < 1e-9);
    }

    #[test]
    fn brent_requires_bracket() {
        assert!(brent_root(|x| x * x + 1.0, -1.0, 1.0, 1e-9, 0.0, 100).is_none());
    }

    #[test]
    fn brent_accepts_root_at_endpoint() {
        let r = brent_root(|x| x, 0.0, 1.0, 1e-9, 0.0, 100).unwrap();
        assert_eq!(r.root, 0.0);
    }

    #[test]
    fn bisect_monotone() {
        let root = bisect(|x| x.exp() - 3.0, 0.0, 2.0, 1e-10, 200);
        assert!((root - 3.0f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn nelder_mead_quadratic_bowl() {
        let f = |x: &[f64]| (x[0] - 1.2).powi(2) + 3.0 * (x[1] + 0.4).powi(2) + 0.5;
        let r = nelder_mead(f, &[0.0, 0.0], &[(-5.0, 5.0), (-5.0, 5.0)], &SimplexOptions::default());
        assert!(r.converged);
        assert!((r.x[0] - 1.2).abs() < 1e-5);
        assert!((r.x[1] + 0.4).abs() < 1e-5);
        assert!((r.loss - 0.5).abs() < 1e-10);
    }

    #[test]
    fn nelder_mead_respects_bounds() {
        let f = |x: &[f64]| (x[0] + 2.0).powi(2);
        let r = nelder_mead(f, &[0.5, 0.0], &[(0.0, 1.0), (0.0, 1.0)], &SimplexOptions::default());
        assert!(r.x[0] >= 0.0);
        assert!((r.x[0] - 0.0).abs() < 1e-6);
    }
}
