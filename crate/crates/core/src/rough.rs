//! Regularity statistics of sampled paths: α-Hölder norms (full and
//! restricted to short windows), the discrete Lévy area and the homogeneous
//! rough-path norm built from both.
//!
//! All suprema run over pairs of grid times. Paths longer than
//! [`EXACT_PAIR_LIMIT`] intervals are coarsened by a power-of-two stride
//! first; the coarse supremum is inflated by `1 + 2^{−α}` and flagged.

use alloc::vec;
use alloc::vec::Vec;

use crate::control::Path;
use crate::models::wrap_angle;

/// Largest grid handled by the exact `O(K²)` pair scan.
pub const EXACT_PAIR_LIMIT: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HolderStats {
    pub alpha: f64,
    /// `sup |ω_t − ω_s| / |t − s|^α` over all grid pairs.
    pub full_norm: f64,
    /// Same supremum restricted to `0 < t − s ≤ 1/n`.
    pub window_norm: f64,
    pub window_n: usize,
    /// Set when the path was coarsened and the values are inflated bounds.
    pub coarsened: bool,
}

impl HolderStats {
    /// Membership in `C_N = {window_norm ≤ K}`.
    pub fn in_compact(&self, k_threshold: f64) -> bool {
        self.window_norm <= k_threshold
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RoughNorm {
    /// α-Hölder norm of the path increments.
    pub path_level: f64,
    /// `sup |A_{s,t}|^{1/2} / |t − s|^α`, `|·|` the Frobenius norm over `i < j`.
    pub area_level: f64,
    /// `max(path_level, area_level)`.
    pub homogeneous: f64,
    pub coarsened: bool,
}

/// Whether `alpha` lies in `(1/3, 1/2)`, the range where these norms control
/// the bridge (other values are accepted but worth flagging to the user).
pub fn alpha_in_rough_range(alpha: f64) -> bool {
    alpha > 1.0 / 3.0 && alpha < 0.5
}

/// Stride making the coarse grid at most [`EXACT_PAIR_LIMIT`] intervals.
fn stride_for(grid: usize) -> usize {
    let mut s = 1;
    while grid / s > EXACT_PAIR_LIMIT {
        s *= 2;
    }
    s
}

fn diff_norm(a: &[f64], b: &[f64], periodic: &[usize]) -> f64 {
    let mut acc = 0.0;
    for (j, (x, y)) in a.iter().zip(b).enumerate() {
        let mut d = y - x;
        if periodic.contains(&j) {
            d = wrap_angle(d);
        }
        acc += d * d;
    }
    libm::sqrt(acc)
}

/// Hölder statistics of `path` (periodic coordinates listed in `periodic`
/// are compared through their minimal representative).
pub fn holder_stats(path: &Path, periodic: &[usize], alpha: f64, window_n: usize) -> HolderStats {
    let grid = path.grid();
    if grid == 0 {
        return HolderStats { alpha, full_norm: 0.0, window_norm: 0.0, window_n, coarsened: false };
    }
    let stride = stride_for(grid);
    let coarse = grid / stride;
    let dt = stride as f64 / grid as f64;
    // Largest lag (in coarse steps) with lag·dt ≤ 1/n.
    let window_lag = if window_n == 0 {
        coarse
    } else {
        let raw = libm::floor((1.0 / window_n as f64) / dt + 1e-9) as usize;
        raw.min(coarse)
    };
    let pow_cache: Vec<f64> = (0..=coarse).map(|lag| libm::pow(lag as f64 * dt, alpha)).collect();
    let mut full: f64 = 0.0;
    let mut window: f64 = 0.0;
    for s in 0..coarse {
        let ps = path.point(s * stride);
        for t in s + 1..=coarse {
            let lag = t - s;
            let r = diff_norm(ps, path.point(t * stride), periodic) / pow_cache[lag];
            full = full.max(r);
            if lag <= window_lag {
                window = window.max(r);
            }
        }
    }
    let coarsened = stride > 1;
    let inflate = if coarsened { 1.0 + libm::pow(2.0, -alpha) } else { 1.0 };
    HolderStats { alpha, full_norm: full * inflate, window_norm: window * inflate, window_n, coarsened }
}

/// Discrete Lévy area of a sampled `ℝ^ℓ` path.
///
/// `A^{ij}_{s,t} = ½ Σ_{k=s}^{t−1} [(w^i_k − w^i_s) Δw^j_k − (w^j_k − w^j_s) Δw^i_k]`,
/// the signed area of the piecewise-linear interpolation, computed by direct
/// summation.
pub struct LevyArea<'a> {
    path: &'a Path,
}

pub fn levy_area(w: &Path) -> LevyArea<'_> {
    LevyArea { path: w }
}

impl LevyArea<'_> {
    /// `ℓ × ℓ` antisymmetric matrix for grid indices `s ≤ t`.
    pub fn between(&self, s: usize, t: usize) -> Vec<f64> {
        let l = self.path.dim();
        let mut a = vec![0.0; l * l];
        let ws = self.path.point(s);
        for k in s..t {
            let wk = self.path.point(k);
            let wn = self.path.point(k + 1);
            for i in 0..l {
                for j in i + 1..l {
                    let di = wn[i] - wk[i];
                    let dj = wn[j] - wk[j];
                    a[i * l + j] += 0.5 * ((wk[i] - ws[i]) * dj - (wk[j] - ws[j]) * di);
                }
            }
        }
        for i in 0..l {
            for j in i + 1..l {
                a[j * l + i] = -a[i * l + j];
            }
        }
        a
    }
}

/// Homogeneous rough-path norm of a sampled `ℝ^ℓ` path on the unit time grid.
pub fn rough_norm(w: &Path, alpha: f64) -> RoughNorm {
    let grid = w.grid();
    let l = w.dim();
    if grid == 0 {
        return RoughNorm { path_level: 0.0, area_level: 0.0, homogeneous: 0.0, coarsened: false };
    }
    let stride = stride_for(grid);
    let coarse = grid / stride;
    let dt = stride as f64 / grid as f64;
    let pow_cache: Vec<f64> = (0..=coarse).map(|lag| libm::pow(lag as f64 * dt, alpha)).collect();
    let npairs = l * (l.saturating_sub(1)) / 2;
    let mut area = vec![0.0; npairs];
    let mut path_level: f64 = 0.0;
    let mut area_level: f64 = 0.0;
    for s in 0..coarse {
        let ws = w.point(s * stride);
        area.iter_mut().for_each(|a| *a = 0.0);
        // Accumulate A_{s,t} over fine steps as t advances.
        let mut k = s * stride;
        for t in s + 1..=coarse {
            while k < t * stride {
                let wk = w.point(k);
                let wn = w.point(k + 1);
                let mut p = 0;
                for i in 0..l {
                    for j in i + 1..l {
                        let di = wn[i] - wk[i];
                        let dj = wn[j] - wk[j];
                        area[p] += 0.5 * ((wk[i] - ws[i]) * dj - (wk[j] - ws[j]) * di);
                        p += 1;
                    }
                }
                k += 1;
            }
            let wt = w.point(t * stride);
            let inc: f64 = ws.iter().zip(wt).map(|(a, b)| (b - a) * (b - a)).sum();
            let denom = pow_cache[t - s];
            path_level = path_level.max(libm::sqrt(inc) / denom);
            let amag: f64 = area.iter().map(|a| a * a).sum();
            area_level = area_level.max(libm::sqrt(libm::sqrt(amag)) / denom);
        }
    }
    let coarsened = stride > 1;
    let inflate = if coarsened { 1.0 + libm::pow(2.0, -alpha) } else { 1.0 };
    let (path_level, area_level) = (path_level * inflate, area_level * inflate);
    RoughNorm { path_level, area_level, homogeneous: path_level.max(area_level), coarsened }
}

/// Empirical log-survival curve with a Gaussian-tail fit.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TailCurve {
    /// `(K, log P̂(X ≥ K))` for the thresholds with enough exceedances.
    pub points: Vec<(f64, f64)>,
    /// Slope of `log P̂` against `K²`, when at least two points remain.
    pub slope_vs_sq: Option<f64>,
    pub intercept: Option<f64>,
}

/// Minimum exceedance count for a threshold to enter the curve.
pub const MIN_EXCEEDANCES: usize = 5;

pub fn tail_statistics(samples: &[f64], thresholds: &[f64]) -> TailCurve {
    let n = samples.len();
    let mut points = Vec::new();
    for &k in thresholds {
        let count = samples.iter().filter(|&&x| x >= k).count();
        // A threshold every sample clears carries no tail information beyond
        // the first one; one nobody clears is omitted.
        if count >= MIN_EXCEEDANCES && n > 0 {
            points.push((k, libm::log(count as f64 / n as f64)));
        }
    }
    let (slope_vs_sq, intercept) = if points.len() >= 2 {
        let xs: Vec<f64> = points.iter().map(|(k, _)| k * k).collect();
        let ys: Vec<f64> = points.iter().map(|(_, v)| *v).collect();
        match crate::stats::linear_fit(&xs, &ys) {
            Some(f) => (Some(f.slope), Some(f.intercept)),
            None => (None, None),
        }
    } else {
        (None, None)
    };
    TailCurve { points, slope_vs_sq, intercept }
}
