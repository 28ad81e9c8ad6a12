//! Sub-Riemannian distance, minimal-energy paths and the bridge rate function.
//!
//! The distance is computed by direct optimization over piecewise-linear
//! controls: minimize `½‖h‖² + ½μ|γ^h_1 − y|²` for a geometric sequence of
//! penalties `μ`, each stage warm-started from the previous one, with
//! accelerated gradient descent. Gradients come from the discrete adjoint in
//! [`crate::control`]. Several randomized restarts cover distinct homotopy
//! classes of candidate geodesics.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::control::{self, integrate_into, Control, Path, Workspace};
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::linalg;
use crate::models::VectorFieldModel;
use crate::rng;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GeodesicOptions {
    /// Control grid `K`.
    pub grid: usize,
    /// Number of multi-start runs `R`.
    pub restarts: usize,
    /// Penalty weights, applied in order.
    pub penalties: Vec<f64>,
    /// Iteration cap per penalty stage.
    pub max_iters: usize,
    /// `τ_end`: a result is converged iff its endpoint gap is at most this.
    pub endpoint_tol: f64,
    pub seed: u64,
    /// Fourier modes in the random initial slopes.
    pub init_modes: usize,
    /// Per-step residual allowed by [`path_energy`], relative to path speed.
    pub horizontality_tol: f64,
    /// Relative energy window in which distinct minimizers are recorded.
    pub uniqueness_rel_tol: f64,
}

impl Default for GeodesicOptions {
    fn default() -> Self {
        Self {
            grid: 64,
            restarts: 8,
            penalties: (1..=6).map(|j| libm::pow(10.0, j as f64)).collect(),
            max_iters: 4000,
            endpoint_tol: 1e-3,
            seed: 0x5eed,
            init_modes: 3,
            horizontality_tol: 1e-2,
            uniqueness_rel_tol: 5e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GeodesicResult {
    pub h_star: Control,
    pub path: Path,
    /// `‖h*‖²`.
    pub energy: f64,
    /// `∫|ḣ*|`; equals `√energy` for a constant-speed control.
    pub distance_estimate: f64,
    pub endpoint_gap: f64,
    pub restarts_used: usize,
    pub converged: bool,
    /// Other converged minimizers whose energy is within the uniqueness window
    /// of the best one but whose paths differ from it.
    pub alternates: Vec<Control>,
    /// Final energy of every restart (infinite when a restart diverged).
    pub restart_energies: Vec<f64>,
}

impl GeodesicResult {
    /// Whether no distinct near-minimal path was found.
    pub fn is_unique(&self) -> bool {
        self.alternates.is_empty()
    }
}

struct Candidate {
    control: Control,
    path: Path,
    energy: f64,
    gap: f64,
}

/// Computes `d(x, y)` and a minimal-energy path by multi-start penalty
/// optimization. Restarts are independent tasks on `exec`; the result depends
/// only on `opts` (restart `r` seeds from `(opts.seed, r)`).
///
/// A restart whose integration blows up is discarded. If no restart reaches
/// `endpoint_tol`, the smallest-gap result is returned with `converged` unset.
pub fn minimize_energy<E: Executor>(
    model: &VectorFieldModel,
    x: &[f64],
    y: &[f64],
    opts: &GeodesicOptions,
    exec: &E,
) -> Result<GeodesicResult> {
    let (m, l) = (model.dim(), model.num_fields());
    for p in [x, y] {
        if p.len() != m {
            return Err(Error::DimensionMismatch { expected: m, got: p.len() });
        }
    }
    if opts.grid == 0 || opts.restarts == 0 || opts.penalties.is_empty() {
        return Err(Error::InvalidConfig("grid, restarts and penalties must be nonempty".into()));
    }
    if model.ambient_distance(x, y) == 0.0 {
        let h = Control::zeros(l, opts.grid);
        return Ok(GeodesicResult {
            path: Path::constant(x, opts.grid),
            h_star: h,
            energy: 0.0,
            distance_estimate: 0.0,
            endpoint_gap: 0.0,
            restarts_used: 0,
            converged: true,
            alternates: Vec::new(),
            restart_energies: Vec::new(),
        });
    }

    let runs: Vec<Option<Candidate>> = exec.map(opts.restarts, |r| run_restart(model, x, y, opts, r).ok());
    let restart_energies = runs.iter().map(|c| c.as_ref().map_or(f64::INFINITY, |c| c.energy)).collect();
    let mut candidates: Vec<Candidate> = runs.into_iter().flatten().collect();
    if candidates.is_empty() {
        return Err(Error::IntegrationDiverged { step: 0 });
    }
    let tol = opts.endpoint_tol;
    let any_converged = candidates.iter().any(|c| c.gap <= tol);
    let key = |c: &Candidate| if any_converged { c.energy } else { c.gap };
    let best_idx = (0..candidates.len())
        .filter(|&i| !any_converged || candidates[i].gap <= tol)
        .min_by(|&a, &b| key(&candidates[a]).total_cmp(&key(&candidates[b])))
        .expect("nonempty");
    let best = candidates.swap_remove(best_idx);

    let mut alternates: Vec<Candidate> = Vec::new();
    if any_converged {
        let scale = 1.0 + model.ambient_distance(x, y);
        for c in candidates.into_iter().filter(|c| c.gap <= tol) {
            if c.energy > best.energy * (1.0 + opts.uniqueness_rel_tol) {
                continue;
            }
            let distinct_tol = 0.05 * scale;
            let new = c.path.sup_distance(&best.path, model) > distinct_tol
                && alternates.iter().all(|a| c.path.sup_distance(&a.path, model) > distinct_tol);
            if new {
                alternates.push(c);
            }
        }
    }
    Ok(GeodesicResult {
        distance_estimate: best.control.length(),
        energy: best.energy,
        endpoint_gap: best.gap,
        converged: best.gap <= tol,
        h_star: best.control,
        path: best.path,
        restarts_used: opts.restarts,
        alternates: alternates.into_iter().map(|c| c.control).collect(),
        restart_energies,
    })
}

/// Initial slopes for restart `r`: restart 0 is the constant least-norm slope
/// towards `y`, the others add random low-frequency Fourier terms of amplitude
/// `|y − x|`.
fn initial_velocities(model: &VectorFieldModel, x: &[f64], y: &[f64], opts: &GeodesicOptions, r: usize) -> Vec<f64> {
    let (m, l, grid) = (model.dim(), model.num_fields(), opts.grid);
    let mut diff = vec![0.0; m];
    model.ambient_diff(x, y, &mut diff);
    let mut base = vec![0.0; l];
    linalg::least_norm_combination(&model.fields_at(x), l, m, &diff, &mut base);
    let mut vel: Vec<f64> = (0..grid).flat_map(|_| base.iter().copied()).collect();
    if r == 0 {
        return vel;
    }
    let amp = model.ambient_distance(x, y);
    let mut rng = rng::stream_rng(rng::derive_seed(opts.seed, r as u64), 0);
    let mut coef = vec![0.0; l * (2 * opts.init_modes + 1)];
    for c in coef.iter_mut() {
        let z: f64 = rng.sample(StandardNormal);
        *c = amp * z;
    }
    for k in 0..grid {
        let t = (k as f64 + 0.5) / grid as f64;
        for i in 0..l {
            let row = &coef[i * (2 * opts.init_modes + 1)..(i + 1) * (2 * opts.init_modes + 1)];
            let mut v = row[0];
            for j in 1..=opts.init_modes {
                let w = 2.0 * PI * j as f64 * t;
                // 2π j scaling keeps ‖h‖ of each mode comparable to amp.
                v += 2.0 * PI * (row[2 * j - 1] * libm::cos(w) + row[2 * j] * libm::sin(w));
            }
            vel[k * l + i] += v;
        }
    }
    vel
}

/// Penalized objective in the scaled variables `v = u/√K`, for which
/// `‖h‖² = |v|²`.
struct Objective<'a> {
    model: &'a VectorFieldModel,
    x: &'a [f64],
    y: &'a [f64],
    grid: usize,
    mu: f64,
    ws: Workspace,
    points: Vec<f64>,
    vel: Vec<f64>,
    gvel: Vec<f64>,
}

impl Objective<'_> {
    fn eval(&mut self, v: &[f64], grad: Option<&mut [f64]>) -> Result<f64> {
        let sk = libm::sqrt(self.grid as f64);
        for (u, &vi) in self.vel.iter_mut().zip(v) {
            *u = vi * sk;
        }
        integrate_into(self.model, self.x, &self.vel, 0.0, &mut self.ws, &mut self.points)?;
        let energy = 0.5 * linalg::dot(v, v);
        match grad {
            None => {
                let m = self.model.dim();
                let end = &self.points[self.grid * m..];
                let gap = self.model.ambient_distance(end, self.y);
                Ok(energy + 0.5 * self.mu * gap * gap)
            }
            Some(g) => {
                let loss = control::endpoint_adjoint(
                    self.model,
                    &self.vel,
                    &self.points,
                    self.y,
                    &mut self.ws,
                    &mut self.gvel,
                );
                for ((gi, &vi), &gu) in g.iter_mut().zip(v).zip(&self.gvel) {
                    *gi = vi + self.mu * sk * gu;
                }
                Ok(energy + self.mu * loss)
            }
        }
    }

    fn gap(&self) -> f64 {
        let m = self.model.dim();
        self.model.ambient_distance(&self.points[self.grid * m..], self.y)
    }
}

/// Accelerated gradient descent with backtracking and function-value restart.
fn agd(obj: &mut Objective<'_>, v: &mut [f64], max_iters: usize) -> Result<()> {
    let n = v.len();
    let mut yk = v.to_vec();
    let mut g = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut lip = 1.0f64;
    let mut t = 1.0f64;
    let mut f_x = obj.eval(v, None)?;
    for _ in 0..max_iters {
        let f_y = obj.eval(&yk, Some(&mut g))?;
        let gn2 = linalg::dot(&g, &g);
        if gn2 < 1e-24 * (1.0 + f_y * f_y) {
            break;
        }
        let f_new = loop {
            for i in 0..n {
                trial[i] = yk[i] - g[i] / lip;
            }
            let f = obj.eval(&trial, None).unwrap_or(f64::INFINITY);
            if f <= f_y - 0.5 * gn2 / lip {
                break f;
            }
            lip *= 2.0;
            if lip > 1e30 {
                return Ok(());
            }
        };
        if f_new > f_x {
            // Momentum overshoot: restart from the last iterate.
            yk.copy_from_slice(v);
            t = 1.0;
            continue;
        }
        let t_next = 0.5 * (1.0 + libm::sqrt(1.0 + 4.0 * t * t));
        let beta = (t - 1.0) / t_next;
        let rel = (f_x - f_new) / (1e-300 + libm::fabs(f_x));
        for i in 0..n {
            yk[i] = trial[i] + beta * (trial[i] - v[i]);
        }
        v.copy_from_slice(&trial);
        f_x = f_new;
        t = t_next;
        lip *= 0.9;
        if rel < 1e-15 && beta < 0.5 {
            break;
        }
    }
    Ok(())
}

fn run_restart(model: &VectorFieldModel, x: &[f64], y: &[f64], opts: &GeodesicOptions, r: usize) -> Result<Candidate> {
    let grid = opts.grid;
    let l = model.num_fields();
    let sk = libm::sqrt(grid as f64);
    let mut v: Vec<f64> = initial_velocities(model, x, y, opts, r).iter().map(|u| u / sk).collect();
    let mut obj = Objective {
        model,
        x,
        y,
        grid,
        mu: 0.0,
        ws: Workspace::new(model),
        points: Vec::new(),
        vel: vec![0.0; grid * l],
        gvel: vec![0.0; grid * l],
    };
    for &mu in &opts.penalties {
        obj.mu = mu;
        agd(&mut obj, &mut v, opts.max_iters)?;
    }
    // Constant-speed post-pass, then a polish at the final penalty in case
    // the reparametrization moved the endpoint.
    let h = Control::from_velocities(l, &v.iter().map(|vi| vi * sk).collect::<Vec<_>>());
    let h = constant_speed(&h);
    let mut v: Vec<f64> = h.velocities().iter().map(|u| u / sk).collect();
    obj.eval(&v, None)?;
    if obj.gap() > 0.1 * opts.endpoint_tol {
        agd(&mut obj, &mut v, opts.max_iters)?;
    }
    let control = Control::from_velocities(l, &v.iter().map(|vi| vi * sk).collect::<Vec<_>>());
    let mut points = Vec::new();
    let mut ws = Workspace::new(model);
    integrate_into(model, x, &control.velocities(), 0.0, &mut ws, &mut points)?;
    let path = Path::new(model.dim(), points)?;
    let gap = model.ambient_distance(path.end(), y);
    Ok(Candidate { energy: control.h1_norm_sq(), control, path, gap })
}

/// Reparametrizes `h` by arc length on its own grid: the new control visits
/// the same polyline at uniform arc-length spacing, so `‖h‖ = ∫|ḣ|`.
pub fn constant_speed(h: &Control) -> Control {
    let (d, grid) = (h.dim(), h.grid());
    let mut cum = vec![0.0; grid + 1];
    for k in 0..grid {
        let seg: f64 = (0..d)
            .map(|i| {
                let inc = h.value(k + 1)[i] - h.value(k)[i];
                inc * inc
            })
            .sum();
        cum[k + 1] = cum[k] + libm::sqrt(seg);
    }
    let total = cum[grid];
    if total == 0.0 {
        return h.clone();
    }
    let mut values = vec![0.0; (grid + 1) * d];
    let mut seg = 0;
    for j in 0..=grid {
        let s = total * j as f64 / grid as f64;
        while seg + 1 < grid && cum[seg + 1] < s {
            seg += 1;
        }
        let len = cum[seg + 1] - cum[seg];
        let w = if len > 0.0 { ((s - cum[seg]) / len).clamp(0.0, 1.0) } else { 0.0 };
        for i in 0..d {
            values[j * d + i] = h.value(seg)[i] + w * (h.value(seg + 1)[i] - h.value(seg)[i]);
        }
    }
    values[..d].iter_mut().for_each(|v| *v = 0.0);
    Control::from_values(d, values).expect("reparametrized control is valid")
}

/// Energy `inf{‖h‖² : γ^h = γ}` of a discrete path.
///
/// Per step, the least-norm slope with `Σ V_i(γ_mid) ḣ^i ≈ (γ_{k+1} − γ_k)/Δt`
/// is fitted (`γ_mid` the step midpoint); the energy is `Σ |ḣ_k|² Δt`. If any
/// step's residual exceeds `horizontality_tol` times the step speed the path
/// is not horizontal and `+∞` is returned.
pub fn path_energy(model: &VectorFieldModel, gamma: &Path, opts: &GeodesicOptions) -> f64 {
    let (m, l) = (model.dim(), model.num_fields());
    let grid = gamma.grid();
    if grid == 0 {
        return 0.0;
    }
    let dt = 1.0 / grid as f64;
    let mut diff = vec![0.0; m];
    let mut mid = vec![0.0; m];
    let mut fields = vec![0.0; l * m];
    let mut u = vec![0.0; l];
    let mut energy = 0.0;
    for k in 0..grid {
        let (a, b) = (gamma.point(k), gamma.point(k + 1));
        model.ambient_diff(a, b, &mut diff);
        for j in 0..m {
            mid[j] = a[j] + 0.5 * diff[j];
            diff[j] /= dt;
        }
        model.eval_fields(&mid, &mut fields);
        let res = linalg::least_norm_combination(&fields, l, m, &diff, &mut u);
        let speed = linalg::norm(&diff);
        if res > opts.horizontality_tol * speed + 1e-12 {
            return f64::INFINITY;
        }
        energy += linalg::dot(&u, &u) * dt;
    }
    energy
}

/// `J(γ) = ½(energy(γ) − d(x, y)²)` with `dist_xy` supplied by the caller.
///
/// Returns `+∞` for non-horizontal paths. Negative values from the
/// discretization are clamped to zero.
pub fn rate_function(
    model: &VectorFieldModel,
    x: &[f64],
    y: &[f64],
    gamma: &Path,
    dist_xy: f64,
    opts: &GeodesicOptions,
) -> f64 {
    // Paths outside Ω^{x,y} carry infinite rate.
    if model.ambient_distance(gamma.start(), x) > opts.endpoint_tol
        || model.ambient_distance(gamma.end(), y) > opts.endpoint_tol
    {
        return f64::INFINITY;
    }
    let e = path_energy(model, gamma, opts);
    if !e.is_finite() {
        return f64::INFINITY;
    }
    (0.5 * (e - dist_xy * dist_xy)).max(0.0)
}
