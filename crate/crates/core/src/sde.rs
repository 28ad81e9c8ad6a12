//! The `εL` diffusion `dX = εV dt + √ε Σ V_i(X) ∘ dB^i` and its bridges.
//!
//! Trajectories use the Euler–Heun predictor-corrector, which converges to
//! the Stratonovich solution without an Itô correction. Trajectory `j` of a
//! run draws its Gaussians from stream `j` of the master seed (see
//! [`crate::rng`]), so ensembles are identical under any [`Executor`].
//!
//! Bridges are sampled by rejection: an unconditioned trajectory is kept when
//! its endpoint lands in the ambient ball `B(y, r)`.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::control::{Control, Path};
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::models::VectorFieldModel;
use crate::rng::stream_rng;
use crate::stats::{batch_mean_se, silverman_factor, std_dev};

/// Proposals per deterministic bridge block.
pub const BRIDGE_BLOCK: usize = 4096;

/// Number of batches behind every reported standard error.
pub const SE_BATCHES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Scheme {
    #[default]
    EulerHeun,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SimConfig {
    pub epsilon: f64,
    pub steps: usize,
    pub seed: u64,
    pub scheme: Scheme,
    pub drift_on: bool,
}

impl SimConfig {
    pub fn new(epsilon: f64, steps: usize, seed: u64) -> Self {
        Self { epsilon, steps, seed, scheme: Scheme::EulerHeun, drift_on: false }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(Error::InvalidConfig(alloc::format!("epsilon must lie in (0, 1], got {}", self.epsilon)));
        }
        if self.steps < 16 {
            return Err(Error::InvalidConfig(alloc::format!("steps must be at least 16, got {}", self.steps)));
        }
        Ok(())
    }
}

/// Per-step noise shift `u_k` (the slopes of a control resampled onto the
/// simulation grid). Under the tilt `ΔW = u_k Δt + √ε ΔB`, and the returned
/// log-weight is the exact Gaussian likelihood ratio of the untilted law.
struct Tilt {
    slopes: Vec<f64>,
}

impl Tilt {
    fn new(h: &Control, steps: usize) -> Self {
        let l = h.dim();
        let vel = h.velocities();
        let grid = h.grid();
        let mut slopes = vec![0.0; steps * l];
        for k in 0..steps {
            let mid = (k as f64 + 0.5) / steps as f64;
            let j = ((mid * grid as f64) as usize).min(grid - 1);
            slopes[k * l..(k + 1) * l].copy_from_slice(&vel[j * l..(j + 1) * l]);
        }
        Self { slopes }
    }
}

struct Stepper<'a> {
    model: &'a VectorFieldModel,
    m: usize,
    l: usize,
    fields: Vec<f64>,
    drift: Vec<f64>,
    f0: Vec<f64>,
    f1: Vec<f64>,
    pred: Vec<f64>,
    dw: Vec<f64>,
}

impl<'a> Stepper<'a> {
    fn new(model: &'a VectorFieldModel) -> Self {
        let (m, l) = (model.dim(), model.num_fields());
        Self {
            model,
            m,
            l,
            fields: vec![0.0; l * m],
            drift: vec![0.0; m],
            f0: vec![0.0; m],
            f1: vec![0.0; m],
            pred: vec![0.0; m],
            dw: vec![0.0; l],
        }
    }

    /// `out = Σ dw_i V_i(x) + drift_dt·V(x)`.
    fn increment(&mut self, x: &[f64], drift_dt: f64, second: bool) {
        let m = self.m;
        self.model.eval_fields(x, &mut self.fields);
        let out = if second { &mut self.f1 } else { &mut self.f0 };
        out.iter_mut().for_each(|v| *v = 0.0);
        for (i, &w) in self.dw.iter().enumerate() {
            for r in 0..m {
                out[r] += w * self.fields[i * m + r];
            }
        }
        if drift_dt != 0.0 {
            self.model.eval_drift(x, &mut self.drift);
            for r in 0..m {
                out[r] += drift_dt * self.drift[r];
            }
        }
    }

    /// Runs one trajectory into `points` and returns its log-weight.
    fn run(
        &mut self,
        x0: &[f64],
        cfg: &SimConfig,
        stream: u64,
        tilt: Option<&Tilt>,
        points: &mut Vec<f64>,
    ) -> Result<f64> {
        let (m, l, n) = (self.m, self.l, cfg.steps);
        let dt = 1.0 / n as f64;
        let noise = libm::sqrt(cfg.epsilon * dt);
        let drift_dt = if cfg.drift_on { cfg.epsilon * dt } else { 0.0 };
        let mut rng = stream_rng(cfg.seed, stream);
        let mut log_w = 0.0;
        points.clear();
        points.extend_from_slice(x0);
        points.resize((n + 1) * m, 0.0);
        for k in 0..n {
            for i in 0..l {
                let b: f64 = rng.sample(StandardNormal);
                self.dw[i] = noise * b;
                if let Some(t) = tilt {
                    let u = t.slopes[k * l + i];
                    self.dw[i] += u * dt;
                    // −u·ΔB/√ε − |u|²Δt/(2ε), with ΔB = √Δt·b.
                    log_w -= u * libm::sqrt(dt) * b / libm::sqrt(cfg.epsilon) + 0.5 * u * u * dt / cfg.epsilon;
                }
            }
            let (head, tail) = points.split_at_mut((k + 1) * m);
            let x = &head[k * m..];
            let next = &mut tail[..m];
            if drift_dt == 0.0 && self.model.heun_step_closed_form(x, &self.dw, next) {
                continue;
            }
            self.increment(x, drift_dt, false);
            for r in 0..m {
                self.pred[r] = x[r] + self.f0[r];
            }
            let pred = core::mem::take(&mut self.pred);
            self.increment(&pred, drift_dt, true);
            self.pred = pred;
            for r in 0..m {
                next[r] = x[r] + 0.5 * (self.f0[r] + self.f1[r]);
            }
        }
        // Non-finite values propagate, so one scan finds the first bad step.
        if let Some(bad) = points.iter().position(|v| !v.is_finite()) {
            return Err(Error::SimulationDiverged { step: bad / m });
        }
        Ok(log_w)
    }
}

fn check_point(model: &VectorFieldModel, p: &[f64]) -> Result<()> {
    if p.len() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), got: p.len() });
    }
    if p.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidConfig("non-finite point".into()));
    }
    Ok(())
}

fn check_tilt(model: &VectorFieldModel, tilt: Option<&Control>) -> Result<()> {
    match tilt {
        Some(h) if h.dim() != model.num_fields() => {
            Err(Error::DimensionMismatch { expected: model.num_fields(), got: h.dim() })
        }
        _ => Ok(()),
    }
}

/// Trajectory 0 of the configuration.
pub fn simulate(model: &VectorFieldModel, x0: &[f64], cfg: &SimConfig) -> Result<Path> {
    simulate_indexed(model, x0, cfg, 0)
}

/// Trajectory `index` of the configuration.
pub fn simulate_indexed(model: &VectorFieldModel, x0: &[f64], cfg: &SimConfig, index: u64) -> Result<Path> {
    cfg.validate()?;
    check_point(model, x0)?;
    let mut points = Vec::new();
    Stepper::new(model).run(x0, cfg, index, None, &mut points)?;
    Path::new(model.dim(), points)
}

/// Trajectory `index` with its noise shifted along the slopes of `tilt`;
/// returns the path and the log likelihood ratio `log dP/dQ` that makes
/// weighted averages unbiased for the untilted diffusion.
pub fn simulate_tilted(
    model: &VectorFieldModel,
    x0: &[f64],
    cfg: &SimConfig,
    index: u64,
    tilt: &Control,
) -> Result<(Path, f64)> {
    cfg.validate()?;
    check_point(model, x0)?;
    check_tilt(model, Some(tilt))?;
    let t = Tilt::new(tilt, cfg.steps);
    let mut points = Vec::new();
    let lw = Stepper::new(model).run(x0, cfg, index, Some(&t), &mut points)?;
    Ok((Path::new(model.dim(), points)?, lw))
}

/// Endpoints (row-major `n × m`) of trajectories `0..n`, with log-weights when
/// tilted.
pub fn simulate_endpoints<E: Executor>(
    model: &VectorFieldModel,
    x0: &[f64],
    cfg: &SimConfig,
    num: usize,
    tilt: Option<&Control>,
    exec: &E,
) -> Result<(Vec<f64>, Vec<f64>)> {
    cfg.validate()?;
    check_point(model, x0)?;
    check_tilt(model, tilt)?;
    let t = tilt.map(|h| Tilt::new(h, cfg.steps));
    let m = model.dim();
    // Chunks amortize the per-trajectory buffers.
    const CHUNK: usize = 256;
    let chunks = num.div_ceil(CHUNK);
    let parts = exec.map(chunks, |c| -> Result<(Vec<f64>, Vec<f64>)> {
        let mut st = Stepper::new(model);
        let mut buf = Vec::new();
        let lo = c * CHUNK;
        let hi = (lo + CHUNK).min(num);
        let mut ends = Vec::with_capacity((hi - lo) * m);
        let mut lws = Vec::with_capacity(hi - lo);
        for j in lo..hi {
            let lw = st.run(x0, cfg, j as u64, t.as_ref(), &mut buf)?;
            ends.extend_from_slice(&buf[buf.len() - m..]);
            lws.push(lw);
        }
        Ok((ends, lws))
    });
    let mut ends = Vec::with_capacity(num * m);
    let mut lws = Vec::with_capacity(num);
    for p in parts {
        let (e, w) = p?;
        ends.extend(e);
        lws.extend(w);
    }
    Ok((ends, lws))
}

/// Empirical bridge `P^{x,y}_ε`: accepted trajectories in proposal order.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BridgeEnsemble {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub epsilon: f64,
    pub paths: Vec<Path>,
    pub acceptance_rate: f64,
    pub ball_radius: f64,
    pub num_proposals: u64,
    pub seed: u64,
}

impl BridgeEnsemble {
    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    /// Point at grid index `k` of every path (row-major).
    pub fn marginal(&self, k: usize) -> Vec<f64> {
        self.paths.iter().flat_map(|p| p.point(k).iter().copied()).collect()
    }
}

/// Default acceptance radius `0.5·√ε`.
pub fn default_ball_radius(epsilon: f64) -> f64 {
    0.5 * libm::sqrt(epsilon)
}

/// Rejection sampler for the bridge from `x` to `y`.
///
/// Proposals run in blocks of [`BRIDGE_BLOCK`]; sampling stops at the first
/// proposal that completes `target_count` acceptances or at `max_proposals`.
/// `num_proposals` counts proposals up to that point, so the ensemble and its
/// acceptance rate do not depend on the executor.
#[allow(clippy::too_many_arguments)]
pub fn sample_bridge<E: Executor>(
    model: &VectorFieldModel,
    x: &[f64],
    y: &[f64],
    cfg: &SimConfig,
    ball_radius: f64,
    target_count: usize,
    max_proposals: u64,
    exec: &E,
) -> Result<BridgeEnsemble> {
    cfg.validate()?;
    check_point(model, x)?;
    check_point(model, y)?;
    if ball_radius.is_nan() || ball_radius <= 0.0 {
        return Err(Error::InvalidConfig(alloc::format!("ball radius must be positive, got {ball_radius}")));
    }
    if target_count == 0 {
        return Err(Error::InvalidConfig("target count must be positive".into()));
    }
    let m = model.dim();
    let mut paths = Vec::new();
    let mut closest = f64::INFINITY;
    let mut used: u64 = 0;
    'blocks: while used < max_proposals {
        let block = (max_proposals - used).min(BRIDGE_BLOCK as u64) as usize;
        let base = used;
        // Each entry: (distance to y, accepted path).
        let results = exec.map(block.div_ceil(64), |c| -> Result<Vec<(f64, Option<Path>)>> {
            let mut st = Stepper::new(model);
            let mut buf = Vec::new();
            let lo = c * 64;
            let hi = (lo + 64).min(block);
            let mut out = Vec::with_capacity(hi - lo);
            for j in lo..hi {
                st.run(x, cfg, base + j as u64, None, &mut buf)?;
                let d = model.ambient_distance(&buf[buf.len() - m..], y);
                let keep = (d <= ball_radius).then(|| Path::new(m, buf.clone())).transpose()?;
                out.push((d, keep));
            }
            Ok(out)
        });
        for chunk in results {
            for (d, keep) in chunk? {
                used += 1;
                closest = closest.min(d);
                if let Some(p) = keep {
                    paths.push(p);
                    if paths.len() == target_count {
                        break 'blocks;
                    }
                }
            }
        }
    }
    if paths.is_empty() {
        return Err(Error::EmptyEnsemble { num_proposals: used, ball_radius, closest_distance: closest });
    }
    Ok(BridgeEnsemble {
        x: x.to_vec(),
        y: y.to_vec(),
        epsilon: cfg.epsilon,
        acceptance_rate: paths.len() as f64 / used as f64,
        paths,
        ball_radius,
        num_proposals: used,
        seed: cfg.seed,
    })
}

/// Time reversal: every path reversed, `x` and `y` swapped.
pub fn reverse_ensemble(ens: &BridgeEnsemble) -> BridgeEnsemble {
    BridgeEnsemble {
        x: ens.y.clone(),
        y: ens.x.clone(),
        paths: ens.paths.iter().map(Path::reversed).collect(),
        ..ens.clone()
    }
}

/// Kernel bandwidth choice for [`estimate_heat_kernel`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Bandwidth {
    /// Silverman's rule per coordinate from the sample spread (which scales
    /// like `√ε` along the fields and like `ε` along brackets).
    Silverman,
    /// Same bandwidth on every coordinate.
    Fixed(f64),
    PerCoordinate(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HeatKernelEstimate {
    pub value: f64,
    pub std_error: f64,
    pub bandwidth: Vec<f64>,
    pub num_samples: usize,
    /// Every endpoint farther than 8 bandwidths from `y` in some coordinate.
    pub underflow: bool,
    /// Whether the noise was tilted along a control.
    pub tilted: bool,
}

/// Product-Gaussian KDE of `p_ε(x, y)` from endpoints, optionally weighted.
pub fn kde_at(
    model: &VectorFieldModel,
    ends: &[f64],
    log_weights: Option<&[f64]>,
    y: &[f64],
    bandwidth: &[f64],
) -> (Vec<f64>, bool) {
    let m = model.dim();
    let n = ends.len() / m;
    let norm: f64 = bandwidth.iter().map(|h| libm::sqrt(2.0 * core::f64::consts::PI) * h).product();
    let mut diff = vec![0.0; m];
    let mut all_far = true;
    let contrib = (0..n)
        .map(|j| {
            model.ambient_diff(y, &ends[j * m..(j + 1) * m], &mut diff);
            let mut q = 0.0;
            let mut far = false;
            for r in 0..m {
                let u = diff[r] / bandwidth[r];
                far |= u.abs() > 8.0;
                q += u * u;
            }
            all_far &= far;
            let lw = log_weights.map_or(0.0, |w| w[j]);
            libm::exp(lw - 0.5 * q) / norm
        })
        .collect();
    (contrib, all_far && n > 0)
}

/// Resolves a bandwidth choice against a sample of endpoints.
pub fn resolve_bandwidth(model: &VectorFieldModel, ends: &[f64], bw: &Bandwidth) -> Result<Vec<f64>> {
    let m = model.dim();
    let h = match bw {
        Bandwidth::Fixed(h) => vec![*h; m],
        Bandwidth::PerCoordinate(h) => {
            if h.len() != m {
                return Err(Error::DimensionMismatch { expected: m, got: h.len() });
            }
            h.clone()
        }
        Bandwidth::Silverman => {
            let n = ends.len() / m;
            let f = silverman_factor(n, m);
            (0..m)
                .map(|r| {
                    let col: Vec<f64> = (0..n).map(|j| ends[j * m + r]).collect();
                    f * std_dev(&col)
                })
                .collect()
        }
    };
    if h.iter().any(|v| !v.is_finite() || *v <= 0.0) {
        return Err(Error::InvalidConfig("bandwidth must be positive".into()));
    }
    Ok(h)
}

/// Kernel-density estimate of `p_ε(x, y)` (density against Lebesgue measure
/// in the ambient coordinates) from `num_samples` trajectories.
///
/// With `tilt`, trajectories follow the noise shifted along that control and
/// the kernel is weighted by the likelihood ratio; a control steering `x`
/// towards `y` moves the samples into the region the kernel sees, which is
/// what keeps the relative error bounded as `ε → 0`.
#[allow(clippy::too_many_arguments)]
pub fn estimate_heat_kernel<E: Executor>(
    model: &VectorFieldModel,
    x: &[f64],
    y: &[f64],
    cfg: &SimConfig,
    bandwidth: &Bandwidth,
    num_samples: usize,
    tilt: Option<&Control>,
    exec: &E,
) -> Result<HeatKernelEstimate> {
    check_point(model, y)?;
    if num_samples < 2 {
        return Err(Error::InvalidConfig("need at least two samples".into()));
    }
    let (ends, lws) = simulate_endpoints(model, x, cfg, num_samples, tilt, exec)?;
    let h = resolve_bandwidth(model, &ends, bandwidth)?;
    let (contrib, underflow) = kde_at(model, &ends, tilt.map(|_| lws.as_slice()), y, &h);
    let (value, std_error) = if underflow { (0.0, 0.0) } else { batch_mean_se(&contrib, SE_BATCHES) };
    Ok(HeatKernelEstimate { value, std_error, bandwidth: h, num_samples, underflow, tilted: tilt.is_some() })
}

/// Brownian path `W` on `[0, τ]` sampled on `steps` uniform intervals and
/// reported on the unit grid (time `k/steps` carries `W_{kτ/steps}`).
pub fn brownian_path(dim: usize, steps: usize, tau: f64, seed: u64, index: u64) -> Path {
    let mut rng = stream_rng(seed, index);
    let s = libm::sqrt(tau / steps as f64);
    let mut pts = vec![0.0; (steps + 1) * dim];
    for k in 0..steps {
        for i in 0..dim {
            let b: f64 = rng.sample(StandardNormal);
            pts[(k + 1) * dim + i] = pts[k * dim + i] + s * b;
        }
    }
    Path::new(dim, pts).expect("grid has at least one point")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Sequential;
    use crate::models::{make_model, ModelParams};

    fn heis() -> VectorFieldModel {
        make_model("heisenberg", &ModelParams::new()).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(SimConfig::new(0.5, 16, 1).validate().is_ok());
        assert!(SimConfig::new(0.5, 15, 1).validate().is_err());
        assert!(SimConfig::new(1.5, 64, 1).validate().is_err());
        assert!(SimConfig::new(0.0, 64, 1).validate().is_err());
    }

    #[test]
    fn vanishing_noise_stays_put() {
        let p = simulate(&heis(), &[0.3, -0.2, 0.1], &SimConfig::new(1e-12, 64, 9)).unwrap();
        for k in 0..p.len() {
            assert!(heis().ambient_distance(p.point(k), &[0.3, -0.2, 0.1]) < 1e-5);
        }
    }

    #[test]
    fn same_seed_same_path() {
        let cfg = SimConfig::new(0.7, 64, 42);
        let a = simulate(&heis(), &[0.0; 3], &cfg).unwrap();
        let b = simulate(&heis(), &[0.0; 3], &cfg).unwrap();
        assert_eq!(a, b);
        let c = simulate_indexed(&heis(), &[0.0; 3], &cfg, 1).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn heun_gives_exact_polygonal_area() {
        let cfg = SimConfig::new(1.0, 32, 3);
        let p = simulate(&heis(), &[0.0; 3], &cfg).unwrap();
        let mut area = 0.0;
        for k in 0..32 {
            let (a, b) = (p.point(k), p.point(k + 1));
            area += 0.5 * (a[0] * (b[1] - a[1]) - a[1] * (b[0] - a[0]));
        }
        assert!((p.end()[2] - area).abs() < 1e-14);
    }

    #[test]
    fn closed_form_steps_match_generic_heun() {
        let cfg = SimConfig::new(0.8, 64, 12);
        for (name, fields, x0) in [
            ("heisenberg", "V1=(1, 0, -x1/2); V2=(0, 1, x0/2)", vec![0.2, -0.1, 0.3]),
            ("torus_hypo", "V1=(1, 0); V2=(0, sin(x0))", vec![0.5, 1.0]),
        ] {
            let mut params = ModelParams::new();
            params.insert("fields".into(), fields.into());
            let generic = make_model("custom", &params).unwrap();
            let a = simulate_indexed(&make_model(name, &ModelParams::new()).unwrap(), &x0, &cfg, 3).unwrap();
            let b = simulate_indexed(&generic, &x0, &cfg, 3).unwrap();
            for (u, v) in a.points().iter().zip(b.points()) {
                assert!((u - v).abs() < 1e-12, "{name}: {u} vs {v}");
            }
        }
    }

    #[test]
    fn endpoints_match_full_paths() {
        let cfg = SimConfig::new(0.4, 32, 5);
        let (ends, _) = simulate_endpoints(&heis(), &[0.0; 3], &cfg, 300, None, &Sequential).unwrap();
        let p = simulate_indexed(&heis(), &[0.0; 3], &cfg, 299).unwrap();
        assert_eq!(&ends[299 * 3..], p.end());
    }

    #[test]
    fn tilt_with_zero_control_is_untilted() {
        let cfg = SimConfig::new(0.4, 32, 5);
        let zero = Control::zeros(2, 8);
        let (p, lw) = simulate_tilted(&heis(), &[0.0; 3], &cfg, 7, &zero).unwrap();
        assert_eq!(lw, 0.0);
        assert_eq!(p, simulate_indexed(&heis(), &[0.0; 3], &cfg, 7).unwrap());
    }

    #[test]
    fn bridge_respects_ball_and_rate() {
        let cfg = SimConfig::new(0.5, 32, 11);
        let y = [0.5, 0.0, 0.0];
        let e = sample_bridge(&heis(), &[0.0; 3], &y, &cfg, 0.3, 50, 100_000, &Sequential).unwrap();
        assert_eq!(e.len(), 50);
        assert!((e.acceptance_rate - 50.0 / e.num_proposals as f64).abs() < 1e-15);
        for p in &e.paths {
            assert!(heis().ambient_distance(p.end(), &y) <= 0.3);
            assert_eq!(p.start(), &[0.0; 3]);
        }
        let r = reverse_ensemble(&e);
        assert_eq!(r.x, y.to_vec());
        assert_eq!(reverse_ensemble(&r), e);
    }

    #[test]
    fn empty_bridge_reports_diagnostics() {
        let cfg = SimConfig::new(0.01, 16, 1);
        let err = sample_bridge(&heis(), &[0.0; 3], &[5.0, 0.0, 0.0], &cfg, 0.01, 10, 500, &Sequential).unwrap_err();
        match err {
            Error::EmptyEnsemble { num_proposals, closest_distance, .. } => {
                assert_eq!(num_proposals, 500);
                assert!(closest_distance > 4.0);
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn far_target_underflows() {
        let cfg = SimConfig::new(0.01, 16, 1);
        let est = estimate_heat_kernel(
            &heis(),
            &[0.0; 3],
            &[10.0, 0.0, 0.0],
            &cfg,
            &Bandwidth::Fixed(0.05),
            200,
            None,
            &Sequential,
        )
        .unwrap();
        assert!(est.underflow);
        assert_eq!(est.value, 0.0);
    }

    #[test]
    fn brownian_scaling_is_exact_per_sample() {
        let a = brownian_path(2, 64, 1.0, 3, 4);
        let b = brownian_path(2, 64, 0.25, 3, 4);
        for (u, v) in a.points().iter().zip(b.points()) {
            assert!((0.5 * u - v).abs() < 1e-15);
        }
    }
}
