//! Numerical core for sub-Riemannian energy minimization, hypoelliptic
//! diffusions and their bridges, and rough-path regularity statistics.
//!
//! The crate is `no_std` and only needs `alloc`. Anything touching the file
//! system, threads or the command line lives in the `srlab` companion crate.
//!
//! Module map:
//!
//! * [`models`]: vector-field models `L = ½ΣV_i² + V` (Heisenberg group,
//!   a hypoelliptic torus, user supplied fields).
//! * [`control`]: the controlled ODE `γ̇ = ΣV_i(γ)ḣ^i`, its RK4 integrator and
//!   the discrete adjoint of the endpoint map.
//! * [`srgeom`]: sub-Riemannian distance, path energy and the bridge rate
//!   function by direct optimization over controls.
//! * [`sde`]: Stratonovich simulation of the `εL` diffusion, bridge ensembles
//!   by endpoint rejection, time reversal and heat-kernel estimation.
//! * [`rough`]: Hölder norms, discrete Lévy area and homogeneous rough-path
//!   norms.
//! * [`stats`]: small statistics toolbox (batch errors, KS tests, fits).

#![no_std]
#![allow(clippy::needless_range_loop)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod control;
mod error;
pub mod exec;
pub mod linalg;
pub mod models;
pub mod rng;
pub mod rough;
pub mod sde;
pub mod srgeom;
pub mod stats;

pub use control::{endpoint_gradient, h1_norm_sq, integrate, Control, Path};
pub use error::{Error, Result};
pub use exec::{Executor, Sequential};
pub use models::{make_model, ModelParams, VectorFieldModel};
pub use rough::{holder_stats, levy_area, rough_norm, tail_statistics, HolderStats, RoughNorm};
pub use sde::{
    estimate_heat_kernel, reverse_ensemble, sample_bridge, simulate, Bandwidth, BridgeEnsemble, HeatKernelEstimate,
    SimConfig,
};
pub use srgeom::{minimize_energy, path_energy, rate_function, GeodesicOptions, GeodesicResult};
