//! Experiment configuration (JSON).
//!
//! ```json
//! {
//!   "model": {"name": "heisenberg", "params": {}},
//!   "x": [0, 0, 0], "y": [1, 0, 0],
//!   "eps_grid": [0.5, 0.3, 0.2, 0.15, 0.1],
//!   "samples_per_eps": 100000,
//!   "ball_radius_rule": {"sqrt_eps": 0.5},
//!   "alpha": 0.4, "window_n": 8, "thresholds": [6.0],
//!   "tolerances": {"leandre": 0.15}
//! }
//! ```
//!
//! Every other field has a default; unknown fields are rejected.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use srlab_core::{make_model, Bandwidth, GeodesicOptions, ModelParams, VectorFieldModel};

use crate::error::{io_err, LabError, LabResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelSpec {
    Name(String),
    Full {
        name: String,
        #[serde(default)]
        params: BTreeMap<String, String>,
    },
}

impl ModelSpec {
    pub fn name(&self) -> &str {
        match self {
            ModelSpec::Name(n) | ModelSpec::Full { name: n, .. } => n,
        }
    }

    pub fn build(&self) -> LabResult<VectorFieldModel> {
        let params: ModelParams = match self {
            ModelSpec::Name(_) => ModelParams::new(),
            ModelSpec::Full { params, .. } => params.clone(),
        };
        Ok(make_model(self.name(), &params)?)
    }
}

/// Acceptance-ball radius as a function of ε.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadiusRule {
    /// `c·√ε`.
    SqrtEps(f64),
    Fixed(f64),
}

impl RadiusRule {
    pub fn radius(&self, eps: f64) -> f64 {
        match *self {
            RadiusRule::SqrtEps(c) => c * eps.sqrt(),
            RadiusRule::Fixed(r) => r,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative error of the extrapolated `ε log p̂` against `−d²/2`.
    pub leandre: f64,
    /// Absolute error used instead when the target is 0.
    pub leandre_null: f64,
    /// Slack, in rate units, around the tube sandwich `[−J(γ), 0]`.
    pub tube: f64,
    /// Required tube fraction at the smallest ε.
    pub concentration_floor: f64,
    /// Standard errors allowed between consecutive tube fractions.
    pub monotone_se: f64,
    /// Family-wise level of the reversal KS tests.
    pub ks_alpha: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { leandre: 0.15, leandre_null: 0.1, tube: 0.2, concentration_floor: 0.9, monotone_se: 2.0, ks_alpha: 0.01 }
    }
}

/// Reference path for tube experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaSpec {
    /// The minimizer returned by the geodesic optimizer.
    Geodesic,
    /// Straight horizontal segment with a transverse sine wiggle,
    /// `h(t) = t·Δ + b·sin(2πt)·Δ^⊥/|Δ|`. Requires `y` to lie on the
    /// horizontal segment from `x`.
    Detour { amplitude: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TubeSpec {
    pub radius: f64,
    pub gamma: GammaSpec,
}

impl Default for TubeSpec {
    fn default() -> Self {
        Self { radius: 0.5, gamma: GammaSpec::Geodesic }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeatKernelSpec {
    /// Shift the driving noise along the geodesic control and reweight.
    pub tilt: bool,
    pub bandwidth: Bandwidth,
}

impl Default for HeatKernelSpec {
    fn default() -> Self {
        Self { tilt: true, bandwidth: Bandwidth::Silverman }
    }
}

fn default_samples() -> usize {
    100_000
}
fn default_alpha() -> f64 {
    0.4
}
fn default_window_n() -> usize {
    8
}
fn default_thresholds() -> Vec<f64> {
    vec![6.0]
}
fn default_steps() -> usize {
    64
}
fn default_max_proposals() -> u64 {
    200_000_000
}
fn default_delta() -> f64 {
    0.25
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Strictly decreasing, within `(0, 1]`.
    pub eps_grid: Vec<f64>,
    /// Heat-kernel samples, or accepted bridge paths, per ε.
    #[serde(default = "default_samples")]
    pub samples_per_eps: usize,
    /// Defaults to `0.5·√ε` (`0.1·√ε` for reversal runs).
    #[serde(default)]
    pub ball_radius_rule: Option<RadiusRule>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_window_n")]
    pub window_n: usize,
    /// Hölder thresholds `K`; the first is the primary one.
    #[serde(default = "default_thresholds")]
    pub thresholds: Vec<f64>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_max_proposals")]
    pub max_proposals_per_eps: u64,
    /// Tube half-width for concentration runs.
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default)]
    pub tube: TubeSpec,
    #[serde(default)]
    pub heat_kernel: HeatKernelSpec,
    #[serde(default)]
    pub geodesic: Option<GeodesicOptions>,
    /// ε of the `y → x` ensemble in reversal runs (defaults to the forward ε).
    #[serde(default)]
    pub reversal_backward_eps: Option<f64>,
    #[serde(default)]
    pub drift_on: bool,
}

impl ExperimentConfig {
    pub fn new(model: &str, x: Vec<f64>, y: Vec<f64>, eps_grid: Vec<f64>) -> Self {
        serde_json::from_value(serde_json::json!({
            "model": model, "x": x, "y": y, "eps_grid": eps_grid,
        }))
        .expect("defaults deserialize")
    }

    pub fn load(path: &Path) -> LabResult<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let cfg: Self =
            serde_json::from_str(&text).map_err(|source| LabError::Json { path: path.to_path_buf(), source })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn geodesic_options(&self) -> GeodesicOptions {
        self.geodesic.clone().unwrap_or_else(|| GeodesicOptions { seed: self.seed, ..GeodesicOptions::default() })
    }

    pub fn validate(&self) -> LabResult<()> {
        let bad = |m: String| Err(LabError::Config(m));
        if self.eps_grid.is_empty() {
            return bad("eps_grid is empty".into());
        }
        if self.eps_grid.iter().any(|e| !(*e > 0.0 && *e <= 1.0)) {
            return bad(format!("eps_grid entries must lie in (0, 1]: {:?}", self.eps_grid));
        }
        if self.eps_grid.windows(2).any(|w| w[1] >= w[0]) {
            return bad(format!("eps_grid must be strictly decreasing: {:?}", self.eps_grid));
        }
        if self.samples_per_eps < 2 {
            return bad("samples_per_eps must be at least 2".into());
        }
        if self.steps < 16 {
            return bad("steps must be at least 16".into());
        }
        if self.thresholds.is_empty() {
            return bad("thresholds is empty".into());
        }
        if self.window_n == 0 {
            return bad("window_n must be positive".into());
        }
        if let Some(RadiusRule::SqrtEps(r) | RadiusRule::Fixed(r)) = self.ball_radius_rule {
            if r.is_nan() || r <= 0.0 {
                return bad("ball radius must be positive".into());
            }
        }
        let model = self.model.build()?;
        for (name, p) in [("x", &self.x), ("y", &self.y)] {
            if p.len() != model.dim() {
                return bad(format!(
                    "{name} has {} coordinates, model `{}` has {}",
                    p.len(),
                    model.name(),
                    model.dim()
                ));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_takes_defaults() {
        let c: ExperimentConfig =
            serde_json::from_str(r#"{"model": "heisenberg", "x": [0,0,0], "y": [1,0,0], "eps_grid": [0.5, 0.2]}"#)
                .unwrap();
        assert_eq!(c.samples_per_eps, 100_000);
        assert_eq!(c.tolerances.leandre, 0.15);
        c.validate().unwrap();
    }

    #[test]
    fn full_model_block_and_rules() {
        let c: ExperimentConfig = serde_json::from_str(
            r#"{"model": {"name": "custom", "params": {"fields": "V1=(1,0);V2=(0,x0)"}},
                "x": [0,0], "y": [1,0], "eps_grid": [0.5],
                "ball_radius_rule": {"fixed": 0.2},
                "tube": {"radius": 0.3, "gamma": {"detour": {"amplitude": 0.1}}},
                "tolerances": {"tube": 0.3}}"#,
        )
        .unwrap();
        c.validate().unwrap();
        assert_eq!(c.ball_radius_rule.unwrap().radius(0.9), 0.2);
        assert_eq!(c.tube.gamma, GammaSpec::Detour { amplitude: 0.1 });
        assert_eq!(c.tolerances.leandre, 0.15);
    }

    #[test]
    fn rejects_bad_grids_and_fields() {
        let mut c = ExperimentConfig::new("heisenberg", vec![0.0; 3], vec![1.0, 0.0, 0.0], vec![0.2, 0.5]);
        assert!(c.validate().is_err());
        c.eps_grid = vec![1.5];
        assert!(c.validate().is_err());
        c.eps_grid = vec![0.5];
        c.x = vec![0.0; 2];
        assert!(c.validate().is_err());
        let r: Result<ExperimentConfig, _> = serde_json::from_str(
            r#"{"model": "heisenberg", "x": [0,0,0], "y": [1,0,0], "eps_grid": [0.5], "colour": 1}"#,
        );
        assert!(r.is_err());
    }
}
