//! Closed forms for the Heisenberg group with `L = ½(V_1² + V_2²)`.
//!
//! The fields are left-invariant for the law
//! `(x, y, z)·(x', y', z') = (x + x', y + y', z + z' + ½(xy' − yx'))`, so
//! every two-point quantity reduces to one relative to the origin.

use core::f64::consts::PI;

/// `p⁻¹·q`.
pub fn heisenberg_relative(p: &[f64], q: &[f64]) -> [f64; 3] {
    let gx = q[0] - p[0];
    let gy = q[1] - p[1];
    let gz = q[2] - p[2] - 0.5 * (p[0] * q[1] - p[1] * q[0]);
    [gx, gy, gz]
}

/// `d(0, g)`.
///
/// Geodesics project to circular arcs whose chord joins `0` to `(x, y)` and
/// which enclose area `|z|` with the chord. For chord `r` and central angle
/// `θ`, area `= r²(θ − sin θ)/(8 sin²(θ/2))` and length `= rθ/(2 sin(θ/2))`.
/// The area is increasing in `θ ∈ (0, 2π)`, so `θ` follows by bisection.
pub fn heisenberg_distance(g: &[f64; 3]) -> f64 {
    let r = libm::hypot(g[0], g[1]);
    let z = libm::fabs(g[2]);
    if z == 0.0 {
        return r;
    }
    if r == 0.0 {
        return 2.0 * libm::sqrt(PI * z);
    }
    let target = z / (r * r);
    let area = |theta: f64| {
        let s = libm::sin(theta / 2.0);
        (theta - libm::sin(theta)) / (8.0 * s * s)
    };
    let (mut lo, mut hi) = (0.0f64, 2.0 * PI);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if area(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    let theta = 0.5 * (lo + hi);
    r * theta / (2.0 * libm::sin(theta / 2.0))
}

/// Heat kernel `p_t(0, g)` against Lebesgue measure, from Lévy's area formula:
///
/// ```text
/// p_t(x, y, z) = 1/(π² t²) ∫₀^∞ cos(2uz/t) · u/sinh(u) · exp(−(x²+y²)/(2t) · u coth u) du
/// ```
///
/// evaluated by composite Simpson on `[0, 60]`.
pub fn heisenberg_heat_kernel(t: f64, g: &[f64; 3]) -> f64 {
    let r2 = g[0] * g[0] + g[1] * g[1];
    let z = g[2];
    let f = |u: f64| {
        if u == 0.0 {
            return libm::exp(-r2 / (2.0 * t));
        }
        let ratio = u / libm::sinh(u);
        let coth = libm::cosh(u) / libm::sinh(u);
        libm::cos(2.0 * u * z / t) * ratio * libm::exp(-r2 / (2.0 * t) * u * coth)
    };
    let upper = 60.0;
    let n = 60_000;
    let h = upper / n as f64;
    let mut s = f(0.0) + f(upper);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(k as f64 * h);
    }
    s * h / 3.0 / (PI * PI * t * t)
}
