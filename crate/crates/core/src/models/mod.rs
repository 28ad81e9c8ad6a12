//! Vector-field models for operators `L = ½ΣV_i² + V`.
//!
//! A [`VectorFieldModel`] evaluates the driving fields `V_1..V_ℓ`, the drift
//! `V` and their Jacobians at a point of an `m`-dimensional chart. Periodic
//! coordinates (period 2π) are kept unwrapped along paths; only distances
//! reduce them to the minimal representative.

mod expr;
mod oracles;

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use crate::error::{Error, Result};
use crate::linalg;

pub use expr::{parse_expr, parse_field_spec, Expr, FieldSpec};
pub use oracles::{heisenberg_distance, heisenberg_heat_kernel, heisenberg_relative};

/// Key-value model configuration.
pub type ModelParams = BTreeMap<String, String>;

/// `(point, out)` callback; `out` has one row of length `m` per vector.
pub type FieldFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

/// `(point, fields_jac, drift_jac)` callback. `fields_jac[(i*m + r)*m + c]`
/// holds `∂V_i^r/∂x_c`; `drift_jac[r*m + c]` holds `∂V^r/∂x_c`.
pub type JacobianFn = Arc<dyn Fn(&[f64], &mut [f64], &mut [f64]) + Send + Sync>;

/// Central-difference step used when a model has no analytic Jacobian.
pub const FD_JACOBIAN_STEP: f64 = 1e-6;

#[derive(Clone)]
enum Kind {
    Heisenberg,
    TorusHypo,
    Custom(Custom),
}

#[derive(Clone)]
struct Custom {
    fields: FieldFn,
    drift: Option<FieldFn>,
    jacobians: Option<JacobianFn>,
}

/// A hypoelliptic model: `ℓ` driving fields and a drift on an `m`-dimensional chart.
#[derive(Clone)]
pub struct VectorFieldModel {
    name: String,
    dim: usize,
    num_fields: usize,
    periodic: Vec<usize>,
    kind: Kind,
}

impl fmt::Debug for VectorFieldModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VectorFieldModel")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("num_fields", &self.num_fields)
            .field("periodic", &self.periodic)
            .finish_non_exhaustive()
    }
}

/// Builds a catalog model (`heisenberg`, `torus_hypo`) or a `custom` model
/// from field expressions.
///
/// `custom` reads `fields` (`"V1=(1,0);V2=(0,x0)"`, optionally with a drift
/// item `V=(…)`), an optional separate `drift` tuple and an optional
/// comma-separated `periodic` coordinate list.
pub fn make_model(name: &str, params: &ModelParams) -> Result<VectorFieldModel> {
    match name {
        "heisenberg" | "torus_hypo" => {
            if let Some(key) = params.keys().next() {
                return Err(Error::InvalidParam {
                    key: key.clone(),
                    reason: format!("model `{name}` takes no parameters"),
                });
            }
            Ok(if name == "heisenberg" { VectorFieldModel::heisenberg() } else { VectorFieldModel::torus_hypo() })
        }
        "custom" => custom_from_params(params),
        other => Err(Error::UnknownModel(other.to_string())),
    }
}

fn custom_from_params(params: &ModelParams) -> Result<VectorFieldModel> {
    for key in params.keys() {
        if !matches!(key.as_str(), "fields" | "drift" | "periodic" | "name") {
            return Err(Error::InvalidParam { key: key.clone(), reason: "unknown key".to_string() });
        }
    }
    let src = params.get("fields").ok_or_else(|| Error::InvalidParam {
        key: "fields".to_string(),
        reason: "custom models need field expressions".to_string(),
    })?;
    let mut spec = parse_field_spec(src)?;
    if let Some(d) = params.get("drift") {
        if spec.drift.is_some() {
            return Err(Error::InvalidParam { key: "drift".to_string(), reason: "drift given twice".to_string() });
        }
        spec.drift = Some(expr::parse_tuple(d)?);
    }
    let dim = spec.fields[0].len();
    for (i, f) in spec.fields.iter().enumerate() {
        if f.len() != dim {
            return Err(Error::Parse(format!("V{} has {} components, V1 has {dim}", i + 1, f.len())));
        }
    }
    if let Some(d) = &spec.drift {
        if d.len() != dim {
            return Err(Error::Parse(format!("drift has {} components, fields have {dim}", d.len())));
        }
    }
    let max_var = spec.fields.iter().flatten().chain(spec.drift.iter().flatten()).filter_map(Expr::max_var).max();
    if let Some(v) = max_var {
        if v >= dim {
            return Err(Error::Parse(format!("variable x{v} used in a {dim}-dimensional model")));
        }
    }
    let periodic = match params.get("periodic") {
        None => Vec::new(),
        Some(s) => parse_periodic(s, dim)?,
    };
    // Probe evaluation so that a domain error (e.g. ln of a negative constant)
    // surfaces at construction time.
    let probe = vec![0.0; dim];
    for e in spec.fields.iter().flatten().chain(spec.drift.iter().flatten()) {
        let v = e.eval(&probe);
        if !v.is_finite() {
            return Err(Error::Parse("field expression is not finite at the origin".to_string()));
        }
    }
    let num_fields = spec.fields.len();
    let fields = spec.fields;
    let field_fn: FieldFn = Arc::new(move |p: &[f64], out: &mut [f64]| {
        for (i, f) in fields.iter().enumerate() {
            for (j, e) in f.iter().enumerate() {
                out[i * dim + j] = e.eval(p);
            }
        }
    });
    let mut builder =
        CustomModel::new(params.get("name").map(String::as_str).unwrap_or("custom"), dim, num_fields, field_fn)
            .periodic(periodic);
    if let Some(d) = spec.drift {
        builder = builder.drift(Arc::new(move |p: &[f64], out: &mut [f64]| {
            for (j, e) in d.iter().enumerate() {
                out[j] = e.eval(p);
            }
        }));
    }
    Ok(builder.build())
}

fn parse_periodic(s: &str, dim: usize) -> Result<Vec<usize>> {
    let mut dims = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let d: usize = part.parse().map_err(|_| Error::InvalidParam {
            key: "periodic".to_string(),
            reason: format!("`{part}` is not a coordinate index"),
        })?;
        if d >= dim {
            return Err(Error::InvalidParam {
                key: "periodic".to_string(),
                reason: format!("coordinate {d} out of range for dimension {dim}"),
            });
        }
        dims.push(d);
    }
    dims.sort_unstable();
    dims.dedup();
    Ok(dims)
}

/// Builder for models given by host callbacks.
pub struct CustomModel {
    name: String,
    dim: usize,
    num_fields: usize,
    periodic: Vec<usize>,
    custom: Custom,
}

impl CustomModel {
    pub fn new(name: &str, dim: usize, num_fields: usize, fields: FieldFn) -> Self {
        Self {
            name: name.to_string(),
            dim,
            num_fields,
            periodic: Vec::new(),
            custom: Custom { fields, drift: None, jacobians: None },
        }
    }

    pub fn drift(mut self, drift: FieldFn) -> Self {
        self.custom.drift = Some(drift);
        self
    }

    /// Analytic Jacobians; without them central differences are used.
    pub fn jacobians(mut self, jac: JacobianFn) -> Self {
        self.custom.jacobians = Some(jac);
        self
    }

    pub fn periodic(mut self, dims: Vec<usize>) -> Self {
        self.periodic = dims;
        self
    }

    pub fn build(self) -> VectorFieldModel {
        VectorFieldModel {
            name: self.name,
            dim: self.dim,
            num_fields: self.num_fields,
            periodic: self.periodic,
            kind: Kind::Custom(self.custom),
        }
    }
}

impl VectorFieldModel {
    /// Heisenberg group: `V_1 = (1, 0, −y/2)`, `V_2 = (0, 1, x/2)`, no drift.
    pub fn heisenberg() -> Self {
        Self { name: "heisenberg".to_string(), dim: 3, num_fields: 2, periodic: Vec::new(), kind: Kind::Heisenberg }
    }

    /// Flat torus `ℝ²/(2πℤ)²` with `V_1 = (1, 0)`, `V_2 = (0, sin x)`, no drift.
    pub fn torus_hypo() -> Self {
        Self { name: "torus_hypo".to_string(), dim: 2, num_fields: 2, periodic: vec![0, 1], kind: Kind::TorusHypo }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_fields(&self) -> usize {
        self.num_fields
    }

    pub fn periodic_dims(&self) -> &[usize] {
        &self.periodic
    }

    /// Whether the drift can be nonzero.
    pub fn has_drift(&self) -> bool {
        matches!(&self.kind, Kind::Custom(c) if c.drift.is_some())
    }

    /// Writes `V_i(p)` into row `i` of `out` (`ℓ × m`, row-major).
    #[inline]
    pub fn eval_fields(&self, p: &[f64], out: &mut [f64]) {
        match &self.kind {
            Kind::Heisenberg => {
                out[0] = 1.0;
                out[1] = 0.0;
                out[2] = -0.5 * p[1];
                out[3] = 0.0;
                out[4] = 1.0;
                out[5] = 0.5 * p[0];
            }
            Kind::TorusHypo => {
                out[0] = 1.0;
                out[1] = 0.0;
                out[2] = 0.0;
                out[3] = libm::sin(p[0]);
            }
            Kind::Custom(c) => (c.fields)(p, out),
        }
    }

    /// Closed form of one drift-free Euler–Heun step with increments `dw`,
    /// for the catalog models. Returns `false` when no closed form exists.
    #[inline]
    pub(crate) fn heun_step_closed_form(&self, p: &[f64], dw: &[f64], out: &mut [f64]) -> bool {
        match &self.kind {
            Kind::Heisenberg => {
                // The predictor-corrector cross terms cancel exactly.
                out[0] = p[0] + dw[0];
                out[1] = p[1] + dw[1];
                out[2] = p[2] + 0.5 * (p[0] * dw[1] - p[1] * dw[0]);
                true
            }
            Kind::TorusHypo => {
                out[0] = p[0] + dw[0];
                out[1] = p[1] + 0.5 * (libm::sin(p[0]) + libm::sin(p[0] + dw[0])) * dw[1];
                true
            }
            Kind::Custom(_) => false,
        }
    }

    /// Writes `V(p)` into `out`.
    #[inline]
    pub fn eval_drift(&self, p: &[f64], out: &mut [f64]) {
        match &self.kind {
            Kind::Custom(Custom { drift: Some(d), .. }) => d(p, out),
            _ => out.iter_mut().for_each(|v| *v = 0.0),
        }
    }

    /// Jacobians of the fields and drift; layout as in [`JacobianFn`].
    pub fn eval_jacobians(&self, p: &[f64], fields_jac: &mut [f64], drift_jac: &mut [f64]) {
        let m = self.dim;
        match &self.kind {
            Kind::Heisenberg => {
                fields_jac.iter_mut().for_each(|v| *v = 0.0);
                drift_jac.iter_mut().for_each(|v| *v = 0.0);
                // ∂V_1^z/∂y = −1/2, ∂V_2^z/∂x = 1/2
                fields_jac[2 * m + 1] = -0.5;
                fields_jac[(m + 2) * m] = 0.5;
            }
            Kind::TorusHypo => {
                fields_jac.iter_mut().for_each(|v| *v = 0.0);
                drift_jac.iter_mut().for_each(|v| *v = 0.0);
                fields_jac[(2 + 1) * m] = libm::cos(p[0]);
            }
            Kind::Custom(c) => match &c.jacobians {
                Some(j) => j(p, fields_jac, drift_jac),
                None => self.fd_jacobians(p, fields_jac, drift_jac),
            },
        }
    }

    /// Central-difference Jacobians with step [`FD_JACOBIAN_STEP`].
    pub fn fd_jacobians(&self, p: &[f64], fields_jac: &mut [f64], drift_jac: &mut [f64]) {
        let (m, l) = (self.dim, self.num_fields);
        let mut q = p.to_vec();
        let mut fp = vec![0.0; l * m];
        let mut fm = vec![0.0; l * m];
        let mut dp = vec![0.0; m];
        let mut dm = vec![0.0; m];
        for c in 0..m {
            let h = FD_JACOBIAN_STEP * (1.0 + libm::fabs(p[c]));
            q[c] = p[c] + h;
            self.eval_fields(&q, &mut fp);
            self.eval_drift(&q, &mut dp);
            q[c] = p[c] - h;
            self.eval_fields(&q, &mut fm);
            self.eval_drift(&q, &mut dm);
            q[c] = p[c];
            for i in 0..l {
                for r in 0..m {
                    fields_jac[(i * m + r) * m + c] = (fp[i * m + r] - fm[i * m + r]) / (2.0 * h);
                }
            }
            for r in 0..m {
                drift_jac[r * m + c] = (dp[r] - dm[r]) / (2.0 * h);
            }
        }
    }

    pub fn fields_at(&self, p: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.num_fields * self.dim];
        self.eval_fields(p, &mut out);
        out
    }

    pub fn drift_at(&self, p: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.eval_drift(p, &mut out);
        out
    }

    /// Lie bracket `[V_i, V_j](p) = DV_j·V_i − DV_i·V_j`.
    pub fn lie_bracket(&self, i: usize, j: usize, p: &[f64]) -> Vec<f64> {
        let (m, l) = (self.dim, self.num_fields);
        let fields = self.fields_at(p);
        let mut fj = vec![0.0; l * m * m];
        let mut dj = vec![0.0; m * m];
        self.eval_jacobians(p, &mut fj, &mut dj);
        let mut out = vec![0.0; m];
        for (r, o) in out.iter_mut().enumerate() {
            for c in 0..m {
                *o += fj[(j * m + r) * m + c] * fields[i * m + c] - fj[(i * m + r) * m + c] * fields[j * m + c];
            }
        }
        out
    }

    /// Rank of `{V_i} ∪ {[V_i, V_j]}` at `p`: a sampled bracket-generation witness.
    pub fn bracket_span_rank(&self, p: &[f64]) -> usize {
        let (m, l) = (self.dim, self.num_fields);
        let mut rows = self.fields_at(p);
        for i in 0..l {
            for j in i + 1..l {
                rows.extend(self.lie_bracket(i, j, p));
            }
        }
        linalg::rank(&rows, rows.len() / m, m, 1e-9)
    }

    /// Writes `q − p` into `out`, periodic coordinates reduced to `(−π, π]`.
    pub fn ambient_diff(&self, p: &[f64], q: &[f64], out: &mut [f64]) {
        for j in 0..self.dim {
            out[j] = q[j] - p[j];
        }
        for &j in &self.periodic {
            out[j] = wrap_angle(out[j]);
        }
    }

    /// Euclidean distance in the chart, wrap-aware on periodic coordinates.
    pub fn ambient_distance(&self, p: &[f64], q: &[f64]) -> f64 {
        let mut acc = 0.0;
        for j in 0..self.dim {
            let mut d = q[j] - p[j];
            if self.periodic.binary_search(&j).is_ok() {
                d = wrap_angle(d);
            }
            acc += d * d;
        }
        libm::sqrt(acc)
    }

    /// Closed-form sub-Riemannian distance, where one is known.
    pub fn distance_oracle(&self, p: &[f64], q: &[f64]) -> Option<f64> {
        match self.kind {
            Kind::Heisenberg => Some(heisenberg_distance(&heisenberg_relative(p, q))),
            Kind::TorusHypo => {
                // Points on a common horizontal circle y = const: the V_1 flow is optimal.
                (libm::fabs(wrap_angle(q[1] - p[1])) < 1e-15).then(|| libm::fabs(wrap_angle(q[0] - p[0])))
            }
            Kind::Custom(_) => None,
        }
    }

    /// Closed-form heat kernel `p_t(p, q)` against Lebesgue measure, where known.
    pub fn heat_kernel_oracle(&self, t: f64, p: &[f64], q: &[f64]) -> Option<f64> {
        match self.kind {
            Kind::Heisenberg => Some(heisenberg_heat_kernel(t, &heisenberg_relative(p, q))),
            _ => None,
        }
    }

    /// Whether `L` is symmetric with respect to Lebesgue measure in the chart,
    /// i.e. the time-reversed bridge is the bridge of the same model.
    ///
    /// Catalog models are known to be; custom models qualify when they have
    /// no drift and every field is divergence-free at a fixed set of sample
    /// points (a sampled check, not a proof).
    pub fn is_self_adjoint(&self) -> bool {
        match &self.kind {
            Kind::Heisenberg | Kind::TorusHypo => true,
            Kind::Custom(c) => {
                if c.drift.is_some() {
                    return false;
                }
                let (m, l) = (self.dim, self.num_fields);
                let mut fj = vec![0.0; l * m * m];
                let mut dj = vec![0.0; m * m];
                (0..16).all(|k| {
                    let p: Vec<f64> =
                        (0..m).map(|j| libm::sin(1.3 * (k as f64 + 1.0) + 0.7 * j as f64) * PI / 2.0).collect();
                    self.eval_jacobians(&p, &mut fj, &mut dj);
                    (0..l).all(|i| {
                        let div: f64 = (0..m).map(|r| fj[(i * m + r) * m + r]).sum();
                        libm::fabs(div) < 1e-6
                    })
                })
            }
        }
    }
}

/// Reduces an angle difference to `(−π, π]`.
pub fn wrap_angle(d: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let r = d - two_pi * libm::round(d / two_pi);
    if r <= -PI {
        r + two_pi
    } else {
        r
    }
}
