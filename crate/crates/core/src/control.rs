//! Controlled dynamics `γ̇ = Σ V_i(γ) ḣ^i` driven by piecewise-linear controls.
//!
//! A [`Control`] stores `h` at the uniform times `t_k = k/K`; between grid
//! times `ḣ` is constant, so one RK4 step per control interval integrates the
//! ODE with the slope frozen. [`endpoint_gradient`] differentiates that exact
//! discrete map (reverse-mode through every RK4 stage), so it agrees with
//! finite differences of [`integrate`] to rounding error.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::models::VectorFieldModel;

/// Element of `H¹₀`: piecewise-linear `ℝ^ℓ` path with `h(0) = 0`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Control {
    dim: usize,
    values: Vec<f64>,
}

impl Control {
    pub fn zeros(dim: usize, grid: usize) -> Self {
        assert!(dim >= 1 && grid >= 1, "control needs ℓ ≥ 1 and K ≥ 1");
        Self { dim, values: vec![0.0; (grid + 1) * dim] }
    }

    /// Validates row-major values (`(K+1) × ℓ`).
    pub fn from_values(dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 || !values.len().is_multiple_of(dim) || values.len() / dim < 2 {
            return Err(Error::InvalidControl(format!(
                "{} values do not form at least two rows of width {dim}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidControl("non-finite value".into()));
        }
        if values[..dim].iter().any(|&v| v != 0.0) {
            return Err(Error::InvalidControl("h(0) must be the zero vector".into()));
        }
        Ok(Self { dim, values })
    }

    /// Samples `t ↦ f(t)` on the grid and shifts it so that `h(0) = 0`.
    pub fn from_fn(dim: usize, grid: usize, mut f: impl FnMut(f64, &mut [f64])) -> Self {
        let mut values = vec![0.0; (grid + 1) * dim];
        for k in 0..=grid {
            f(k as f64 / grid as f64, &mut values[k * dim..(k + 1) * dim]);
        }
        let origin = values[..dim].to_vec();
        for k in 0..=grid {
            for i in 0..dim {
                values[k * dim + i] -= origin[i];
            }
        }
        Self { dim, values }
    }

    /// Control whose slope on interval `k` is `velocities[k]` (`K × ℓ`).
    pub fn from_velocities(dim: usize, velocities: &[f64]) -> Self {
        let grid = velocities.len() / dim;
        let dt = 1.0 / grid as f64;
        let mut values = vec![0.0; (grid + 1) * dim];
        for k in 0..grid {
            for i in 0..dim {
                values[(k + 1) * dim + i] = values[k * dim + i] + velocities[k * dim + i] * dt;
            }
        }
        Self { dim, values }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn grid(&self) -> usize {
        self.values.len() / self.dim - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    /// Slopes `ḣ` per interval, `K × ℓ`.
    pub fn velocities(&self) -> Vec<f64> {
        let k_grid = self.grid() as f64;
        let d = self.dim;
        (0..self.grid() * d).map(|j| (self.values[j + d] - self.values[j]) * k_grid).collect()
    }

    /// `‖h‖² = K Σ_k |h_{k+1} − h_k|²`.
    pub fn h1_norm_sq(&self) -> f64 {
        let d = self.dim;
        let s: f64 = (0..self.grid() * d)
            .map(|j| {
                let inc = self.values[j + d] - self.values[j];
                inc * inc
            })
            .sum();
        s * self.grid() as f64
    }

    /// `∫|ḣ|`, the length of the control.
    pub fn length(&self) -> f64 {
        let d = self.dim;
        (0..self.grid())
            .map(|k| {
                let s: f64 = (0..d)
                    .map(|i| {
                        let inc = self.values[(k + 1) * d + i] - self.values[k * d + i];
                        inc * inc
                    })
                    .sum();
                libm::sqrt(s)
            })
            .sum()
    }

    /// The control viewed as an `ℝ^ℓ`-valued path.
    pub fn as_path(&self) -> Path {
        Path { dim: self.dim, points: self.values.clone() }
    }
}

/// `‖h‖²` of a piecewise-linear control.
pub fn h1_norm_sq(h: &Control) -> f64 {
    h.h1_norm_sq()
}

/// Trajectory on the uniform grid of `[0, 1]`, `K + 1` points of `ℝ^m`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Path {
    dim: usize,
    points: Vec<f64>,
}

impl Path {
    pub fn new(dim: usize, points: Vec<f64>) -> Result<Self> {
        if dim == 0 || points.is_empty() || !points.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: points.len() });
        }
        if points.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("path has non-finite entries".into()));
        }
        Ok(Self { dim, points })
    }

    pub fn constant(x: &[f64], grid: usize) -> Self {
        let points = (0..=grid).flat_map(|_| x.iter().copied()).collect();
        Self { dim: x.len(), points }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of intervals `K`.
    pub fn grid(&self) -> usize {
        self.points.len() / self.dim - 1
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn point(&self, k: usize) -> &[f64] {
        &self.points[k * self.dim..(k + 1) * self.dim]
    }

    pub fn start(&self) -> &[f64] {
        self.point(0)
    }

    pub fn end(&self) -> &[f64] {
        self.point(self.len() - 1)
    }

    pub fn time(&self, k: usize) -> f64 {
        if self.grid() == 0 {
            0.0
        } else {
            k as f64 / self.grid() as f64
        }
    }

    /// `t ↦ γ_{1−t}`.
    pub fn reversed(&self) -> Path {
        let points = (0..self.len()).rev().flat_map(|k| self.point(k).iter().copied()).collect();
        Path { dim: self.dim, points }
    }

    /// Linear interpolation at time `t ∈ [0, 1]`.
    pub fn interpolate(&self, t: f64, out: &mut [f64]) {
        let grid = self.grid();
        if grid == 0 {
            out.copy_from_slice(self.point(0));
            return;
        }
        let s = (t.clamp(0.0, 1.0)) * grid as f64;
        let k = (libm::floor(s) as usize).min(grid - 1);
        let w = s - k as f64;
        let (a, b) = (self.point(k), self.point(k + 1));
        for j in 0..self.dim {
            out[j] = a[j] + w * (b[j] - a[j]);
        }
    }

    /// The same curve sampled on a uniform grid with `grid` intervals.
    pub fn resample(&self, grid: usize) -> Path {
        let mut points = vec![0.0; (grid + 1) * self.dim];
        for k in 0..=grid {
            self.interpolate(k as f64 / grid as f64, &mut points[k * self.dim..(k + 1) * self.dim]);
        }
        Path { dim: self.dim, points }
    }

    /// `max_k |self_k − other(t_k)|` on this path's grid, with `other`
    /// interpolated and distances measured by `model`.
    pub fn sup_distance(&self, other: &Path, model: &VectorFieldModel) -> f64 {
        let mut buf = vec![0.0; self.dim];
        (0..self.len())
            .map(|k| {
                other.interpolate(self.time(k), &mut buf);
                model.ambient_distance(self.point(k), &buf)
            })
            .fold(0.0, f64::max)
    }
}

/// Scratch buffers for RK4 and its adjoint.
pub(crate) struct Workspace {
    m: usize,
    l: usize,
    fields: Vec<f64>,
    drift: Vec<f64>,
    fjac: Vec<f64>,
    djac: Vec<f64>,
    stages: [Vec<f64>; 4],
    slopes: [Vec<f64>; 4],
    tmp: Vec<f64>,
}

impl Workspace {
    pub(crate) fn new(model: &VectorFieldModel) -> Self {
        let (m, l) = (model.dim(), model.num_fields());
        let z = || vec![0.0; m];
        Self {
            m,
            l,
            fields: vec![0.0; l * m],
            drift: vec![0.0; m],
            fjac: vec![0.0; l * m * m],
            djac: vec![0.0; m * m],
            stages: [z(), z(), z(), z()],
            slopes: [z(), z(), z(), z()],
            tmp: z(),
        }
    }
}

/// `out = Σ u_i V_i(x) + s·V(x)`.
#[inline]
fn rhs(
    model: &VectorFieldModel,
    x: &[f64],
    u: &[f64],
    drift_scale: f64,
    ws_fields: &mut [f64],
    ws_drift: &mut [f64],
    out: &mut [f64],
) {
    let m = x.len();
    model.eval_fields(x, ws_fields);
    out.iter_mut().for_each(|v| *v = 0.0);
    for (i, &ui) in u.iter().enumerate() {
        if ui != 0.0 {
            for r in 0..m {
                out[r] += ui * ws_fields[i * m + r];
            }
        }
    }
    if drift_scale != 0.0 {
        model.eval_drift(x, ws_drift);
        for r in 0..m {
            out[r] += drift_scale * ws_drift[r];
        }
    }
}

/// One RK4 step from `x` with frozen slope `u`; fills the workspace stages.
fn rk4_step(
    model: &VectorFieldModel,
    x: &[f64],
    u: &[f64],
    dt: f64,
    drift_scale: f64,
    ws: &mut Workspace,
    out: &mut [f64],
) {
    let m = ws.m;
    let Workspace { fields, drift, stages, slopes, .. } = ws;
    stages[0].copy_from_slice(x);
    for s in 0..4 {
        if s > 0 {
            let c = if s == 3 { dt } else { 0.5 * dt };
            for r in 0..m {
                stages[s][r] = x[r] + c * slopes[s - 1][r];
            }
        }
        let (st, sl) = (&stages[s], &mut slopes[s]);
        rhs(model, st, u, drift_scale, fields, drift, sl);
    }
    for r in 0..m {
        out[r] = x[r] + dt / 6.0 * (slopes[0][r] + 2.0 * slopes[1][r] + 2.0 * slopes[2][r] + slopes[3][r]);
    }
}

/// Integrates with per-interval slopes `velocities` (`K × ℓ`), writing the
/// `K + 1` states into `points`.
pub(crate) fn integrate_into(
    model: &VectorFieldModel,
    x0: &[f64],
    velocities: &[f64],
    drift_scale: f64,
    ws: &mut Workspace,
    points: &mut Vec<f64>,
) -> Result<()> {
    let (m, l) = (ws.m, ws.l);
    let grid = velocities.len() / l;
    let dt = 1.0 / grid as f64;
    points.clear();
    points.extend_from_slice(x0);
    points.resize((grid + 1) * m, 0.0);
    for k in 0..grid {
        let (head, tail) = points.split_at_mut((k + 1) * m);
        let x = &head[k * m..];
        let next = &mut tail[..m];
        rk4_step(model, x, &velocities[k * l..(k + 1) * l], dt, drift_scale, ws, next);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::IntegrationDiverged { step: k + 1 });
        }
    }
    Ok(())
}

/// Integrates `γ̇ = Σ V_i(γ) ḣ^i (+ drift_scale·V(γ))` on the grid of `h` with
/// one RK4 step per control interval. Without the drift flag this is exactly
/// the controlled ODE; the flag serves drifted skeleton paths.
pub fn integrate(
    model: &VectorFieldModel,
    x0: &[f64],
    h: &Control,
    include_drift: bool,
    drift_scale: f64,
) -> Result<Path> {
    check_dims(model, x0, h)?;
    let mut ws = Workspace::new(model);
    let mut points = Vec::new();
    let scale = if include_drift { drift_scale } else { 0.0 };
    integrate_into(model, x0, &h.velocities(), scale, &mut ws, &mut points)?;
    Ok(Path { dim: model.dim(), points })
}

fn check_dims(model: &VectorFieldModel, x0: &[f64], h: &Control) -> Result<()> {
    if x0.len() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), got: x0.len() });
    }
    if h.dim() != model.num_fields() {
        return Err(Error::DimensionMismatch { expected: model.num_fields(), got: h.dim() });
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidConfig("non-finite start point".into()));
    }
    Ok(())
}

/// Endpoint loss `½|γ_1 − target|²` (wrap-aware) and its gradient with respect
/// to the per-interval slopes, by the discrete adjoint of RK4. `points` must
/// hold the forward trajectory for `velocities`.
pub(crate) fn endpoint_adjoint(
    model: &VectorFieldModel,
    velocities: &[f64],
    points: &[f64],
    target: &[f64],
    ws: &mut Workspace,
    grad_vel: &mut [f64],
) -> f64 {
    let (m, l) = (ws.m, ws.l);
    let grid = velocities.len() / l;
    let dt = 1.0 / grid as f64;
    let end = &points[grid * m..];
    let mut lambda = vec![0.0; m];
    model.ambient_diff(target, end, &mut lambda);
    let loss = 0.5 * lambda.iter().map(|v| v * v).sum::<f64>();

    let mut lam_k = [vec![0.0; m], vec![0.0; m], vec![0.0; m], vec![0.0; m]];
    let mut xbar = vec![0.0; m];
    let mut a = vec![0.0; m];
    for k in (0..grid).rev() {
        let x = &points[k * m..(k + 1) * m];
        let u = &velocities[k * l..(k + 1) * l];
        // Recompute the stage states of this step.
        let mut scratch = core::mem::take(&mut ws.tmp);
        rk4_step(model, x, u, dt, 0.0, ws, &mut scratch);
        ws.tmp = scratch;

        let weights = [dt / 6.0, dt / 3.0, dt / 3.0, dt / 6.0];
        for s in 0..4 {
            for r in 0..m {
                lam_k[s][r] = weights[s] * lambda[r];
            }
        }
        xbar.copy_from_slice(&lambda);
        let gu = &mut grad_vel[k * l..(k + 1) * l];
        gu.iter_mut().for_each(|v| *v = 0.0);
        for s in (0..4).rev() {
            let st = &ws.stages[s];
            model.eval_fields(st, &mut ws.fields);
            model.eval_jacobians(st, &mut ws.fjac, &mut ws.djac);
            // a = J(st)ᵀ λ_s with J = Σ u_i DV_i
            a.iter_mut().for_each(|v| *v = 0.0);
            for (i, &ui) in u.iter().enumerate() {
                let mut g = 0.0;
                for r in 0..m {
                    let lr = lam_k[s][r];
                    g += ws.fields[i * m + r] * lr;
                    if ui != 0.0 {
                        let row = &ws.fjac[(i * m + r) * m..(i * m + r + 1) * m];
                        for c in 0..m {
                            a[c] += ui * row[c] * lr;
                        }
                    }
                }
                gu[i] += g;
            }
            for r in 0..m {
                xbar[r] += a[r];
            }
            if s > 0 {
                let c = if s == 3 { dt } else { 0.5 * dt };
                for r in 0..m {
                    lam_k[s - 1][r] += c * a[r];
                }
            }
        }
        lambda.copy_from_slice(&xbar);
    }
    loss
}

/// Gradient of `½|γ^h_1 − target|²` with respect to the control values
/// `h_0..h_K` (`(K+1) × ℓ`, row-major). Row 0 is zero since `h_0 = 0` is
/// pinned.
pub fn endpoint_gradient(model: &VectorFieldModel, x0: &[f64], h: &Control, target: &[f64]) -> Result<Vec<f64>> {
    check_dims(model, x0, h)?;
    if target.len() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), got: target.len() });
    }
    let mut ws = Workspace::new(model);
    let vel = h.velocities();
    let mut points = Vec::new();
    integrate_into(model, x0, &vel, 0.0, &mut ws, &mut points)?;
    let mut gv = vec![0.0; vel.len()];
    endpoint_adjoint(model, &vel, &points, target, &mut ws, &mut gv);
    Ok(velocity_grad_to_values(&gv, h.dim(), h.grid()))
}

/// Chain rule through `u_k = K (h_{k+1} − h_k)`.
pub(crate) fn velocity_grad_to_values(gv: &[f64], dim: usize, grid: usize) -> Vec<f64> {
    let kf = grid as f64;
    let mut g = vec![0.0; (grid + 1) * dim];
    for k in 0..grid {
        for i in 0..dim {
            g[(k + 1) * dim + i] += kf * gv[k * dim + i];
            g[k * dim + i] -= kf * gv[k * dim + i];
        }
    }
    g[..dim].iter_mut().for_each(|v| *v = 0.0);
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{make_model, ModelParams};
    use core::f64::consts::PI;

    fn circle(grid: usize) -> Control {
        Control::from_fn(2, grid, |t, out| {
            out[0] = libm::cos(2.0 * PI * t);
            out[1] = libm::sin(2.0 * PI * t);
        })
    }

    #[test]
    fn straight_line_along_v1() {
        let model = VectorFieldModel::heisenberg();
        let h = Control::from_fn(2, 16, |t, out| {
            out[0] = t;
            out[1] = 0.0;
        });
        let path = integrate(&model, &[0.0; 3], &h, false, 0.0).unwrap();
        assert_eq!(path.end(), &[1.0, 0.0, 0.0]);
        assert_eq!(path.grid(), 16);
    }

    #[test]
    fn zero_control_is_constant() {
        let model = VectorFieldModel::torus_hypo();
        let path = integrate(&model, &[0.3, 1.0], &Control::zeros(2, 10), false, 0.0).unwrap();
        for k in 0..=10 {
            assert_eq!(path.point(k), &[0.3, 1.0]);
        }
    }

    #[test]
    fn unit_circle_lifts_to_enclosed_area() {
        // Green: ½∮(x dy − y dx) over the unit circle is π.
        let model = VectorFieldModel::heisenberg();
        let h = circle(1000);
        let end = integrate(&model, &[0.0; 3], &h, false, 0.0).unwrap().end().to_vec();
        // The piecewise-linear control is the inscribed 1000-gon, whose area
        // (n/2)·sin(2π/n) differs from π by ~2e-5; compare to the polygon.
        let polygon = 500.0 * libm::sin(2.0 * PI / 1000.0);
        assert!(end[0].abs() < 1e-9 && end[1].abs() < 1e-9);
        assert!((end[2] - polygon).abs() < 1e-9);
        assert!((end[2] - PI).abs() < 1e-4);
    }

    #[test]
    fn h1_norm_examples() {
        assert_eq!(Control::zeros(2, 8).h1_norm_sq(), 0.0);
        for grid in [1, 7, 64] {
            let h = Control::from_fn(2, grid, |t, o| {
                o[0] = t;
                o[1] = 0.0;
            });
            assert!((h.h1_norm_sq() - 1.0).abs() < 1e-12);
        }
        // Inscribed polygon: K²·(2 sin(π/K))² → 4π².
        let e = circle(1000).h1_norm_sq();
        assert!((e - 4.0 * PI * PI).abs() < 1e-3);
    }

    #[test]
    fn control_validation() {
        assert!(Control::from_values(2, vec![0.0, 0.0, 1.0, 2.0]).is_ok());
        assert!(Control::from_values(2, vec![1.0, 0.0, 1.0, 2.0]).is_err());
        assert!(Control::from_values(2, vec![0.0, 0.0]).is_err());
        assert!(Control::from_values(2, vec![0.0, 0.0, f64::NAN, 0.0]).is_err());
    }

    #[test]
    fn velocities_round_trip() {
        let h = circle(12);
        let back = Control::from_velocities(2, &h.velocities());
        for (a, b) in h.values().iter().zip(back.values()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn divergence_is_reported() {
        let model = make_model("custom", &[("fields".into(), "V1=(x0^2)".into())].into_iter().collect::<ModelParams>())
            .unwrap();
        let h = Control::from_fn(1, 20, |t, o| o[0] = 50.0 * t);
        let err = integrate(&model, &[1.0], &h, false, 0.0).unwrap_err();
        assert!(matches!(err, Error::IntegrationDiverged { .. }));
    }

    #[test]
    fn gradient_vanishes_at_target() {
        let model = VectorFieldModel::heisenberg();
        let h = Control::from_fn(2, 32, |t, o| {
            o[0] = t;
            o[1] = 0.0;
        });
        let g = endpoint_gradient(&model, &[0.0; 3], &h, &[1.0, 0.0, 0.0]).unwrap();
        assert!(g.iter().map(|v| v * v).sum::<f64>().sqrt() < 1e-8);
    }

    #[test]
    fn path_reverse_and_interpolate() {
        let p = Path::new(1, vec![0.0, 1.0, 4.0]).unwrap();
        assert_eq!(p.reversed().points(), &[4.0, 1.0, 0.0]);
        let mut out = [0.0];
        p.interpolate(0.75, &mut out);
        assert_eq!(out[0], 2.5);
        assert_eq!(p.resample(4).points(), &[0.0, 0.5, 1.0, 2.5, 4.0]);
    }
}
