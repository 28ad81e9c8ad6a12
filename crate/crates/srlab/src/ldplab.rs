//! Experiments checking the small-noise asymptotics of bridges and heat
//! kernels, and their reports.
//!
//! Each `run_*` function is a pure function of its configuration: the ε-loop
//! is an index map on the executor and every ε draws from its own derived
//! seed, so `report.json` is bitwise reproducible for any worker count.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use srlab_core::rng::derive_seed;
use srlab_core::stats::{batch_mean_se, ks_two_sample, linear_fit, ols};
use srlab_core::{
    estimate_heat_kernel, holder_stats, integrate, minimize_energy, rate_function, reverse_ensemble, sample_bridge,
    Control, Error, Executor, GeodesicResult, Path, SimConfig, VectorFieldModel,
};

use crate::config::{ExperimentConfig, GammaSpec, RadiusRule};
use crate::error::{LabError, LabResult};

pub const SE_BATCHES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Leandre,
    Tube,
    Concentration,
    Tightness,
    Reversal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Pass,
    Fail,
    Inconclusive,
}

impl Outcome {
    /// Process exit code: 0 pass, 2 fail, 3 inconclusive.
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Pass => 0,
            Outcome::Fail => 2,
            Outcome::Inconclusive => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub outcome: Outcome,
    pub tolerance: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub epsilon: f64,
    pub value: f64,
    pub std_error: f64,
    pub sample_size: u64,
    /// Hölder threshold, for tightness runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    /// Quantity plotted against ε (`ε·log value`, or the value itself for
    /// fractions and test statistics); absent when undefined.
    pub curve: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    /// Coefficient of ε.
    pub slope: f64,
    /// Extrapolated ε → 0 limit.
    pub intercept: f64,
    /// Coefficient of `ε·log ε`, when that regressor is used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_slope: Option<f64>,
    pub target: f64,
    /// `|intercept − target| / |target|`, absent for a zero target.
    pub relative_error: Option<f64>,
    pub abs_error: f64,
    pub residual_rms: f64,
}

impl Fit {
    /// Fitted curve at ε.
    pub fn eval(&self, eps: f64) -> f64 {
        let log_term = if eps > 0.0 { self.log_slope.unwrap_or(0.0) * eps * eps.ln() } else { 0.0 };
        self.intercept + self.slope * eps + log_term
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: Experiment,
    pub model: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub eps_grid: Vec<f64>,
    pub estimates: Vec<Estimate>,
    pub fit: Option<Fit>,
    pub seed: u64,
    /// Wall-clock time; kept out of `report.json` (see [`crate::report`]).
    #[serde(skip)]
    pub runtime_s: f64,
    pub verdict: Verdict,
    #[serde(default)]
    pub metrics: BTreeMap<String, f64>,
    #[serde(default)]
    pub notes: Vec<String>,
    pub config: ExperimentConfig,
}

impl ExperimentReport {
    fn new(experiment: Experiment, cfg: &ExperimentConfig) -> Self {
        Self {
            experiment,
            model: cfg.model.name().to_string(),
            x: cfg.x.clone(),
            y: cfg.y.clone(),
            eps_grid: cfg.eps_grid.clone(),
            estimates: Vec::new(),
            fit: None,
            seed: cfg.seed,
            runtime_s: 0.0,
            verdict: Verdict { outcome: Outcome::Inconclusive, tolerance: 0.0, reason: String::new() },
            metrics: BTreeMap::new(),
            notes: Vec::new(),
            config: cfg.clone(),
        }
    }

    fn conclude(&mut self, outcome: Outcome, tolerance: f64, reason: impl Into<String>) {
        self.verdict = Verdict { outcome, tolerance, reason: reason.into() };
    }

    fn metric(&mut self, key: impl Into<String>, v: f64) {
        if v.is_finite() {
            self.metrics.insert(key.into(), v);
        } else {
            let key = key.into();
            self.notes.push(format!("{key} is not finite ({v})"));
        }
    }

    /// Estimates on the primary curve (the first threshold for tightness).
    pub fn primary_estimates(&self) -> Vec<&Estimate> {
        let primary = self.config.thresholds.first().copied();
        self.estimates.iter().filter(|e| e.threshold.is_none() || e.threshold == primary).collect()
    }
}

fn sim(cfg: &ExperimentConfig, eps: f64, stream: u64) -> SimConfig {
    SimConfig { drift_on: cfg.drift_on, ..SimConfig::new(eps, cfg.steps, derive_seed(cfg.seed, stream)) }
}

fn scaled_log(eps: f64, v: f64) -> Option<f64> {
    (v > 0.0).then(|| eps * v.ln())
}

/// Geodesic from `x` to `y` and the distance used as the experiment target
/// (the closed form when the model has one).
fn geodesic<E: Executor>(
    model: &VectorFieldModel,
    cfg: &ExperimentConfig,
    report: &mut ExperimentReport,
    exec: &E,
) -> LabResult<(GeodesicResult, f64)> {
    let g = minimize_energy(model, &cfg.x, &cfg.y, &cfg.geodesic_options(), exec)?;
    report.metric("distance_estimate", g.distance_estimate);
    report.metric("geodesic_endpoint_gap", g.endpoint_gap);
    report.metric("geodesic_converged", f64::from(u8::from(g.converged)));
    report.metric("geodesic_alternates", g.alternates.len() as f64);
    let d = match model.distance_oracle(&cfg.x, &cfg.y) {
        Some(d) => {
            report.metric("distance_oracle", d);
            d
        }
        None => g.distance_estimate,
    };
    Ok((g, d))
}

/// Fit of `ε·log p̂` by `a + bε + c·ε log ε` (or `a + bε` with three points).
fn fit_scaled_logs(points: &[(f64, f64)], target: f64, with_log: bool) -> Option<Fit> {
    let (eps, vals): (Vec<f64>, Vec<f64>) = points.iter().copied().unzip();
    let (slope, intercept, log_slope, rms) = if with_log && points.len() >= 4 {
        let design: Vec<f64> = eps.iter().flat_map(|&e| [1.0, e, e * e.ln()]).collect();
        let (c, rms) = ols(&design, 3, &vals)?;
        (c[1], c[0], Some(c[2]), rms)
    } else {
        let f = linear_fit(&eps, &vals)?;
        (f.slope, f.intercept, None, f.residual_rms)
    };
    let abs_error = (intercept - target).abs();
    let relative_error = (target != 0.0).then(|| abs_error / target.abs());
    Some(Fit { slope, intercept, log_slope, target, relative_error, abs_error, residual_rms: rms })
}

/// `v = bε` by least squares, for curves whose limit is pinned at 0.
fn fit_through_origin(points: &[(f64, f64)], target: f64) -> Fit {
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let slope = sxy / sxx;
    let rss: f64 = points.iter().map(|p| (p.1 - slope * p.0).powi(2)).sum();
    Fit {
        slope,
        intercept: 0.0,
        log_slope: None,
        target,
        relative_error: (target != 0.0).then_some(1.0),
        abs_error: target.abs(),
        residual_rms: (rss / points.len() as f64).sqrt(),
    }
}

/// Logarithmic heat-kernel asymptotics: `ε·log p̂_ε(x, y) → −d(x, y)²/2`.
pub fn run_leandre<E: Executor>(cfg: &ExperimentConfig, exec: &E) -> LabResult<ExperimentReport> {
    let start = Instant::now();
    cfg.validate()?;
    let model = cfg.model.build()?;
    let mut report = ExperimentReport::new(Experiment::Leandre, cfg);
    let (g, d) = geodesic(&model, cfg, &mut report, exec)?;
    let target = -0.5 * d * d;
    let tilt = cfg.heat_kernel.tilt.then_some(&g.h_star);
    if tilt.is_some() {
        report.notes.push("heat-kernel samples tilted along the geodesic control and reweighted".into());
    }
    let runs = exec.map(cfg.eps_grid.len(), |i| {
        let eps = cfg.eps_grid[i];
        estimate_heat_kernel(
            &model,
            &cfg.x,
            &cfg.y,
            &sim(cfg, eps, i as u64),
            &cfg.heat_kernel.bandwidth,
            cfg.samples_per_eps,
            tilt,
            exec,
        )
    });
    let mut points = Vec::new();
    for (i, r) in runs.into_iter().enumerate() {
        let eps = cfg.eps_grid[i];
        let est = r?;
        let mut flags = Vec::new();
        if est.underflow || est.value <= 0.0 {
            flags.push("underflow".to_string());
        }
        let curve = scaled_log(eps, est.value).filter(|_| flags.is_empty());
        if let Some(c) = curve {
            points.push((eps, c));
        }
        report.estimates.push(Estimate {
            epsilon: eps,
            value: est.value,
            std_error: est.std_error,
            sample_size: est.num_samples as u64,
            threshold: None,
            curve,
            flags,
        });
    }
    let tol = cfg.tolerances.leandre;
    if points.len() < 3 {
        report.conclude(Outcome::Inconclusive, tol, format!("only {} usable ε values", points.len()));
    } else {
        if points.len() < 4 {
            report.notes.push("three points: fitted a + b·ε without the ε·log ε term".into());
        }
        let fit = fit_scaled_logs(&points, target, true).ok_or_else(|| LabError::Config("degenerate ε grid".into()))?;
        let (outcome, reason) = match fit.relative_error {
            Some(rel) => (
                if rel <= tol { Outcome::Pass } else { Outcome::Fail },
                format!("limit {:.4} vs −d²/2 = {:.4}: relative error {:.3}", fit.intercept, target, rel),
            ),
            None => (
                if fit.abs_error <= cfg.tolerances.leandre_null { Outcome::Pass } else { Outcome::Fail },
                format!("limit {:.4} vs 0: absolute error {:.3}", fit.intercept, fit.abs_error),
            ),
        };
        let used = if fit.relative_error.is_some() { tol } else { cfg.tolerances.leandre_null };
        report.fit = Some(fit);
        report.conclude(outcome, used, reason);
    }
    report.runtime_s = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Builds the reference path of a tube experiment.
pub fn build_gamma<E: Executor>(
    model: &VectorFieldModel,
    cfg: &ExperimentConfig,
    report: &mut ExperimentReport,
    exec: &E,
) -> LabResult<(Path, f64)> {
    let (g, d) = geodesic(model, cfg, report, exec)?;
    let gamma = match &cfg.tube.gamma {
        GammaSpec::Geodesic => g.path,
        GammaSpec::Detour { amplitude } => {
            let h = detour_control(model, &cfg.x, &cfg.y, *amplitude, 256)?;
            integrate(model, &cfg.x, &h, false, 0.0)?
        }
    };
    if model.ambient_distance(gamma.end(), &cfg.y) > cfg.geodesic_options().endpoint_tol {
        return Err(LabError::Config(
            "reference path does not end at y; the geodesic optimizer did not converge".into(),
        ));
    }
    Ok((gamma, d))
}

/// `h(t) = t·Δ + b·sin(2πt)·Δ^⊥/|Δ|` with `Δ` the planar displacement of the
/// first two coordinates. The wiggle encloses no net area, so the endpoint is
/// that of the straight segment.
pub fn detour_control(
    model: &VectorFieldModel,
    x: &[f64],
    y: &[f64],
    amplitude: f64,
    grid: usize,
) -> LabResult<Control> {
    if model.num_fields() != 2 || x.len() < 2 {
        return Err(LabError::Config("detours need a model with two driving fields".into()));
    }
    let (dx, dy) = (y[0] - x[0], y[1] - x[1]);
    let n = (dx * dx + dy * dy).sqrt();
    if n == 0.0 {
        return Err(LabError::Config("detours need distinct planar endpoints".into()));
    }
    let (px, py) = (-dy / n, dx / n);
    let h = Control::from_fn(2, grid, |t, o| {
        let w = amplitude * (2.0 * PI * t).sin();
        o[0] = t * dx + w * px;
        o[1] = t * dy + w * py;
    });
    let end = integrate(model, x, &h, false, 0.0)?;
    if model.ambient_distance(end.end(), y) > 1e-6 {
        return Err(LabError::Config("y is not reached by a horizontal segment from x".into()));
    }
    Ok(h)
}

fn radius_rule(cfg: &ExperimentConfig, default: f64) -> RadiusRule {
    cfg.ball_radius_rule.unwrap_or(RadiusRule::SqrtEps(default))
}

/// Bridge ensembles for every ε, each reduced to per-path values by `f`.
/// Empty ensembles come back as `None`.
#[allow(clippy::type_complexity)]
fn bridge_values<E, F>(
    model: &VectorFieldModel,
    cfg: &ExperimentConfig,
    rule: RadiusRule,
    exec: &E,
    f: F,
) -> LabResult<Vec<Option<(Vec<f64>, f64, u64)>>>
where
    E: Executor,
    F: Fn(&Path) -> f64 + Sync + Send,
{
    let runs = exec.map(cfg.eps_grid.len(), |i| {
        let eps = cfg.eps_grid[i];
        let ens = sample_bridge(
            model,
            &cfg.x,
            &cfg.y,
            &sim(cfg, eps, i as u64),
            rule.radius(eps),
            cfg.samples_per_eps,
            cfg.max_proposals_per_eps,
            exec,
        );
        match ens {
            Ok(e) => Ok(Some((e.paths.iter().map(&f).collect::<Vec<_>>(), e.acceptance_rate, e.num_proposals))),
            Err(Error::EmptyEnsemble { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    });
    runs.into_iter().map(|r| r.map_err(LabError::from)).collect()
}

fn indicator_estimate(hits: &[f64]) -> (f64, f64) {
    batch_mean_se(hits, SE_BATCHES)
}

/// Large-deviation tube probabilities `q_ε = P^{x,y}_ε(‖ω − γ‖_∞ < r)`.
pub fn run_tube<E: Executor>(cfg: &ExperimentConfig, exec: &E) -> LabResult<ExperimentReport> {
    let start = Instant::now();
    cfg.validate()?;
    let model = cfg.model.build()?;
    let mut report = ExperimentReport::new(Experiment::Tube, cfg);
    let (gamma, d) = build_gamma(&model, cfg, &mut report, exec)?;
    let j = rate_function(&model, &cfg.x, &cfg.y, &gamma, d, &cfg.geodesic_options());
    report.metric("rate_j", j);
    let gamma_grid = gamma.resample(cfg.steps);
    let radius = cfg.tube.radius;
    let values = bridge_values(&model, cfg, radius_rule(cfg, 0.5), exec, |p| {
        f64::from(u8::from(p.sup_distance(&gamma_grid, &model) < radius))
    })?;
    let tol = cfg.tolerances.tube;
    let mut points = Vec::new();
    for (i, v) in values.into_iter().enumerate() {
        let eps = cfg.eps_grid[i];
        match v {
            None => report.estimates.push(Estimate {
                epsilon: eps,
                value: 0.0,
                std_error: 0.0,
                sample_size: 0,
                threshold: None,
                curve: None,
                flags: vec!["empty_ensemble".into()],
            }),
            Some((hits, acc, _)) => {
                let (q, se) = indicator_estimate(&hits);
                report.metric(format!("acceptance_rate_eps{eps}"), acc);
                let curve = scaled_log(eps, q);
                let mut flags = Vec::new();
                match curve {
                    Some(c) => points.push((eps, c)),
                    None => flags.push("no_paths_in_tube".into()),
                }
                report.estimates.push(Estimate {
                    epsilon: eps,
                    value: q,
                    std_error: se,
                    sample_size: hits.len() as u64,
                    threshold: None,
                    curve,
                    flags,
                });
            }
        }
    }
    if !j.is_finite() {
        report.conclude(Outcome::Inconclusive, tol, "reference path has infinite rate");
    } else if report.estimates.iter().any(|e| e.flags.iter().any(|f| f == "empty_ensemble")) {
        report.conclude(Outcome::Inconclusive, tol, "empty bridge ensemble");
    } else if points.len() < 2 {
        report.conclude(Outcome::Inconclusive, tol, format!("only {} usable ε values", points.len()));
    } else {
        let mut fit =
            fit_scaled_logs(&points, -j, false).ok_or_else(|| LabError::Config("degenerate ε grid".into()))?;
        if fit.intercept > 0.0 {
            report.metric("unconstrained_intercept", fit.intercept);
            report.notes.push("ε·log q̂ ≤ 0 at every ε, so the limit was refitted through the origin".into());
            fit = fit_through_origin(&points, -j);
        }
        let (lo, hi) = (-j - tol, tol);
        report.metric("sandwich_lower", -j);
        report.metric("sandwich_upper", 0.0);
        let ok = fit.intercept >= lo && fit.intercept <= hi;
        let reason = format!("limit {:.4} against [−J(γ) − tol, tol] = [{lo:.4}, {hi:.4}]", fit.intercept);
        report.fit = Some(fit);
        report.conclude(if ok { Outcome::Pass } else { Outcome::Fail }, tol, reason);
    }
    report.runtime_s = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Concentration of bridges on the minimizer: fraction of paths within `δ`.
pub fn run_concentration<E: Executor>(cfg: &ExperimentConfig, exec: &E) -> LabResult<ExperimentReport> {
    let start = Instant::now();
    cfg.validate()?;
    let model = cfg.model.build()?;
    let mut report = ExperimentReport::new(Experiment::Concentration, cfg);
    let (g, _) = geodesic(&model, cfg, &mut report, exec)?;
    let floor = cfg.tolerances.concentration_floor;
    if !g.converged || !g.is_unique() {
        report.conclude(
            Outcome::Inconclusive,
            floor,
            if g.converged { "distinct near-minimal paths found" } else { "geodesic optimizer did not converge" },
        );
        report.runtime_s = start.elapsed().as_secs_f64();
        return Ok(report);
    }
    if model.distance_oracle(&cfg.x, &cfg.y).is_none() {
        report.notes.push("no closed-form distance for this model; the minimizer is the optimizer's".into());
    }
    let gamma = g.path.resample(cfg.steps);
    let delta = cfg.delta;
    let values = bridge_values(&model, cfg, radius_rule(cfg, 0.5), exec, |p| {
        f64::from(u8::from(p.sup_distance(&gamma, &model) < delta))
    })?;
    let mut fr: Vec<(f64, f64)> = Vec::new();
    for (i, v) in values.into_iter().enumerate() {
        let eps = cfg.eps_grid[i];
        match v {
            None => report.estimates.push(Estimate {
                epsilon: eps,
                value: 0.0,
                std_error: 0.0,
                sample_size: 0,
                threshold: None,
                curve: None,
                flags: vec!["empty_ensemble".into()],
            }),
            Some((hits, acc, _)) => {
                let (f, se) = indicator_estimate(&hits);
                report.metric(format!("acceptance_rate_eps{eps}"), acc);
                fr.push((f, se));
                report.estimates.push(Estimate {
                    epsilon: eps,
                    value: f,
                    std_error: se,
                    sample_size: hits.len() as u64,
                    threshold: None,
                    curve: Some(f),
                    flags: Vec::new(),
                });
            }
        }
    }
    if fr.len() < cfg.eps_grid.len() {
        report.conclude(Outcome::Inconclusive, floor, "empty bridge ensemble");
    } else {
        let k = cfg.tolerances.monotone_se;
        let drop = fr.windows(2).position(|w| w[1].0 < w[0].0 - k * (w[0].1 * w[0].1 + w[1].1 * w[1].1).sqrt());
        let last = fr.last().expect("nonempty grid").0;
        let (outcome, reason) = match drop {
            Some(i) => (
                Outcome::Fail,
                format!(
                    "fraction drops from {:.3} to {:.3} between ε = {} and {}",
                    fr[i].0,
                    fr[i + 1].0,
                    cfg.eps_grid[i],
                    cfg.eps_grid[i + 1]
                ),
            ),
            None if last < floor => (Outcome::Fail, format!("fraction {last:.3} at the smallest ε is below {floor}")),
            None => (Outcome::Pass, format!("nondecreasing within {k} SE, final fraction {last:.3}")),
        };
        report.conclude(outcome, floor, reason);
    }
    report.runtime_s = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Hölder-window exceedance probabilities `r_ε = P^{x,y}_ε(window norm > K)`.
pub fn run_tightness<E: Executor>(cfg: &ExperimentConfig, exec: &E) -> LabResult<ExperimentReport> {
    let start = Instant::now();
    cfg.validate()?;
    let model = cfg.model.build()?;
    let mut report = ExperimentReport::new(Experiment::Tightness, cfg);
    if !(cfg.alpha > 1.0 / 3.0 && cfg.alpha < 0.5) {
        report.notes.push(format!("α = {} lies outside (1/3, 1/2)", cfg.alpha));
    }
    let periodic = model.periodic_dims().to_vec();
    let values = bridge_values(&model, cfg, radius_rule(cfg, 0.5), exec, |p| {
        holder_stats(p, &periodic, cfg.alpha, cfg.window_n).window_norm
    })?;
    let mut primary: Vec<Option<f64>> = Vec::new();
    let mut k_monotone = true;
    let mut k_detail = String::new();
    for (i, v) in values.into_iter().enumerate() {
        let eps = cfg.eps_grid[i];
        let Some((norms, acc, _)) = v else {
            report.estimates.push(Estimate {
                epsilon: eps,
                value: 0.0,
                std_error: 0.0,
                sample_size: 0,
                threshold: cfg.thresholds.first().copied(),
                curve: None,
                flags: vec!["empty_ensemble".into()],
            });
            primary.push(None);
            continue;
        };
        report.metric(format!("acceptance_rate_eps{eps}"), acc);
        report.metric(format!("max_window_norm_eps{eps}"), norms.iter().copied().fold(0.0, f64::max));
        let n = norms.len() as f64;
        let mut per_k = Vec::new();
        for (t, &k) in cfg.thresholds.iter().enumerate() {
            let hits: Vec<f64> = norms.iter().map(|&w| f64::from(u8::from(w > k))).collect();
            let count = hits.iter().sum::<f64>();
            let (mut r, mut se) = batch_mean_se(&hits, SE_BATCHES);
            let mut flags = Vec::new();
            if count == 0.0 {
                // One-sided 95% bound for zero events.
                r = 3.0 / n;
                se = r;
                flags.push("rule_of_three".into());
            }
            let curve = scaled_log(eps, r);
            if t == 0 {
                primary.push(curve);
            }
            per_k.push((k, r));
            report.estimates.push(Estimate {
                epsilon: eps,
                value: r,
                std_error: se,
                sample_size: norms.len() as u64,
                threshold: Some(k),
                curve,
                flags,
            });
        }
        per_k.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in per_k.windows(2) {
            if w[1].0 > w[0].0 && w[1].1 >= w[0].1 && k_monotone {
                k_monotone = false;
                k_detail = format!(
                    "at ε = {eps}, r̂ does not drop from K = {} ({:.3e}) to K = {} ({:.3e})",
                    w[0].0, w[0].1, w[1].0, w[1].1
                );
            }
        }
    }
    let k0 = cfg.thresholds[0];
    if primary.iter().any(Option::is_none) {
        report.conclude(Outcome::Inconclusive, k0, "empty bridge ensemble");
    } else {
        let s: Vec<f64> = primary.into_iter().flatten().collect();
        let eps_mono = s.windows(2).all(|w| w[1] < w[0]);
        report.metric("eps_monotone", f64::from(u8::from(eps_mono)));
        report.metric("threshold_monotone", f64::from(u8::from(k_monotone)));
        let (outcome, reason) = match (eps_mono, k_monotone) {
            (true, true) => (Outcome::Pass, "ε·log r̂ decreases along the grid and r̂ drops with K".to_string()),
            (false, _) => (Outcome::Fail, format!("ε·log r̂ at K = {k0} is not strictly decreasing: {s:.4?}")),
            (true, false) => (Outcome::Fail, k_detail),
        };
        report.conclude(outcome, k0, reason);
    }
    report.runtime_s = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Time reversal: the reversed `x → y` bridge against the `y → x` bridge
/// (of the same model, which must be its own adjoint), compared through the
/// per-coordinate marginals at `t = 1/2` by two-sample KS tests.
pub fn run_reversal<E: Executor>(cfg: &ExperimentConfig, exec: &E) -> LabResult<ExperimentReport> {
    let start = Instant::now();
    cfg.validate()?;
    let model = cfg.model.build()?;
    let mut report = ExperimentReport::new(Experiment::Reversal, cfg);
    let alpha = cfg.tolerances.ks_alpha;
    if !model.is_self_adjoint() {
        report.conclude(
            Outcome::Inconclusive,
            alpha,
            "the model is not its own adjoint and no adjoint model is available",
        );
        report.runtime_s = start.elapsed().as_secs_f64();
        return Ok(report);
    }
    if cfg.eps_grid.len() > 1 {
        report.notes.push("reversal uses the first ε of the grid only".into());
    }
    let eps = cfg.eps_grid[0];
    let eps_back = cfg.reversal_backward_eps.unwrap_or(eps);
    let rule = radius_rule(cfg, 0.1);
    report.metric("backward_epsilon", eps_back);
    let sample = |from: &[f64], to: &[f64], e: f64, stream: u64| {
        sample_bridge(
            &model,
            from,
            to,
            &sim(cfg, e, stream),
            rule.radius(e),
            cfg.samples_per_eps,
            cfg.max_proposals_per_eps,
            exec,
        )
    };
    let fwd = sample(&cfg.x, &cfg.y, eps, 0);
    let bwd = sample(&cfg.y, &cfg.x, eps_back, 1);
    let (fwd, bwd) = match (fwd, bwd) {
        (Ok(f), Ok(b)) => (f, b),
        (Err(Error::EmptyEnsemble { .. }), _) | (_, Err(Error::EmptyEnsemble { .. })) => {
            report.conclude(Outcome::Inconclusive, alpha, "empty bridge ensemble");
            report.runtime_s = start.elapsed().as_secs_f64();
            return Ok(report);
        }
        (Err(e), _) | (_, Err(e)) => return Err(e.into()),
    };
    report.metric("acceptance_rate_forward", fwd.acceptance_rate);
    report.metric("acceptance_rate_backward", bwd.acceptance_rate);
    let rev = reverse_ensemble(&fwd);
    let mid = cfg.steps / 2;
    let m = model.dim();
    let (a, b) = (rev.marginal(mid), bwd.marginal(mid));
    let mut worst_p = 1.0f64;
    let mut worst_d = 0.0f64;
    for c in 0..m {
        let col = |v: &[f64]| v.chunks(m).map(|p| p[c]).collect::<Vec<_>>();
        let ks = ks_two_sample(&col(&a), &col(&b));
        report.metric(format!("ks_statistic_coord{c}"), ks.statistic);
        report.metric(format!("ks_p_value_coord{c}"), ks.p_value);
        worst_p = worst_p.min(ks.p_value);
        worst_d = worst_d.max(ks.statistic);
    }
    let (n1, n2) = (rev.len() as f64, bwd.len() as f64);
    report.estimates.push(Estimate {
        epsilon: eps,
        value: worst_d,
        // Null scale of the two-sample KS statistic.
        std_error: ((n1 + n2) / (n1 * n2)).sqrt(),
        sample_size: rev.len().min(bwd.len()) as u64,
        threshold: None,
        curve: Some(worst_d),
        flags: Vec::new(),
    });
    let adjusted = (worst_p * m as f64).min(1.0);
    report.metric("bonferroni_p_value", adjusted);
    let ok = adjusted > alpha;
    report.conclude(
        if ok { Outcome::Pass } else { Outcome::Fail },
        alpha,
        format!("smallest Bonferroni-adjusted KS p-value {adjusted:.3e} over {m} coordinates"),
    );
    report.runtime_s = start.elapsed().as_secs_f64();
    Ok(report)
}

pub fn run_experiment<E: Executor>(kind: Experiment, cfg: &ExperimentConfig, exec: &E) -> LabResult<ExperimentReport> {
    match kind {
        Experiment::Leandre => run_leandre(cfg, exec),
        Experiment::Tube => run_tube(cfg, exec),
        Experiment::Concentration => run_concentration(cfg, exec),
        Experiment::Tightness => run_tightness(cfg, exec),
        Experiment::Reversal => run_reversal(cfg, exec),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use srlab_core::{h1_norm_sq, make_model, ModelParams, Sequential};

    fn heis() -> VectorFieldModel {
        make_model("heisenberg", &ModelParams::new()).unwrap()
    }

    #[test]
    fn fit_recovers_exact_coefficients() {
        let pts: Vec<(f64, f64)> =
            [0.5f64, 0.3, 0.2, 0.1].iter().map(|&e| (e, -0.5 + 2.0 * e - 0.7 * e * e.ln())).collect();
        let f = fit_scaled_logs(&pts, -0.5, true).unwrap();
        assert!((f.intercept + 0.5).abs() < 1e-12);
        assert!((f.log_slope.unwrap() + 0.7).abs() < 1e-10);
        assert!(f.relative_error.unwrap() < 1e-10);
        assert!((f.eval(0.3) - pts[1].1).abs() < 1e-12);
        let lin = fit_scaled_logs(&pts[..2], 0.0, true).unwrap();
        assert!(lin.log_slope.is_none() && lin.relative_error.is_none());
    }

    #[test]
    fn detour_has_known_energy() {
        let h = detour_control(&heis(), &[0.0; 3], &[1.0, 0.0, 0.0], 0.1, 256).unwrap();
        assert!((h1_norm_sq(&h) - (1.0 + 2.0 * PI * PI * 0.01)).abs() < 1e-3);
        assert!(detour_control(&heis(), &[0.0; 3], &[1.0, 0.0, 0.5], 0.1, 64).is_err());
    }

    #[test]
    fn origin_fit_is_least_squares() {
        let pts = [(0.5, -1.0), (0.25, -0.6), (0.1, -0.1)];
        let f = fit_through_origin(&pts, -0.2);
        let grad: f64 = pts.iter().map(|p| p.0 * (p.1 - f.slope * p.0)).sum();
        assert!(grad.abs() < 1e-12);
        assert_eq!(f.intercept, 0.0);
        assert!((f.abs_error - 0.2).abs() < 1e-15);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(Outcome::Pass.exit_code(), 0);
        assert_eq!(Outcome::Fail.exit_code(), 2);
        assert_eq!(Outcome::Inconclusive.exit_code(), 3);
    }

    #[test]
    fn huge_tube_holds_everything() {
        let mut cfg = ExperimentConfig::new("heisenberg", vec![0.0; 3], vec![0.5, 0.0, 0.0], vec![0.5, 0.3, 0.2]);
        cfg.samples_per_eps = 200;
        cfg.steps = 32;
        cfg.tube.radius = 1e6;
        let r = run_tube(&cfg, &Sequential).unwrap();
        assert!(r.estimates.iter().all(|e| e.value == 1.0));
        assert_eq!(r.verdict.outcome, Outcome::Pass);
        assert!(r.fit.unwrap().intercept.abs() < 1e-12);
    }

    #[test]
    fn zero_threshold_is_always_exceeded() {
        let mut cfg = ExperimentConfig::new("heisenberg", vec![0.0; 3], vec![0.5, 0.0, 0.0], vec![0.5, 0.2]);
        cfg.samples_per_eps = 200;
        cfg.steps = 32;
        cfg.thresholds = vec![0.0, 0.5, 1.0];
        let r = run_tightness(&cfg, &Sequential).unwrap();
        for e in r.estimates.iter().filter(|e| e.threshold == Some(0.0)) {
            assert_eq!(e.value, 1.0);
            assert_eq!(e.curve, Some(0.0));
        }
        // Nested events.
        for eps in [0.5, 0.2] {
            let at = |k| r.estimates.iter().find(|e| e.epsilon == eps && e.threshold == Some(k)).unwrap().value;
            assert!(at(0.0) >= at(0.5) && at(0.5) >= at(1.0));
        }
    }

    #[test]
    fn wide_delta_concentrates_trivially() {
        let mut cfg = ExperimentConfig::new("heisenberg", vec![0.0; 3], vec![0.5, 0.0, 0.0], vec![0.5, 0.3]);
        cfg.samples_per_eps = 200;
        cfg.steps = 32;
        cfg.delta = 1e6;
        let r = run_concentration(&cfg, &Sequential).unwrap();
        assert!(r.estimates.iter().all(|e| e.value == 1.0));
        assert_eq!(r.verdict.outcome, Outcome::Pass);
    }

    #[test]
    fn drifted_model_reversal_is_inconclusive() {
        let mut cfg = ExperimentConfig::new("heisenberg", vec![0.0; 3], vec![0.5, 0.0, 0.0], vec![0.5]);
        cfg.model = crate::config::ModelSpec::Full {
            name: "custom".into(),
            params: [
                ("fields".to_string(), "V1=(1,0,-x1/2);V2=(0,1,x0/2)".to_string()),
                ("drift".to_string(), "(1,0,0)".to_string()),
            ]
            .into(),
        };
        cfg.drift_on = true;
        let r = run_reversal(&cfg, &Sequential).unwrap();
        assert_eq!(r.verdict.outcome, Outcome::Inconclusive);
    }
}
