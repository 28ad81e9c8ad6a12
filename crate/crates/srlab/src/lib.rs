//! File formats, parallel execution, the experiment harness and the `srlab`
//! command line on top of [`srlab_core`].

pub mod config;
mod error;
pub mod exec;
pub mod io;
pub mod ldplab;
pub mod report;

pub use config::ExperimentConfig;
pub use error::{LabError, LabResult};
pub use exec::RayonExecutor;
pub use ldplab::{
    run_concentration, run_experiment, run_leandre, run_reversal, run_tightness, run_tube, Estimate, Experiment,
    ExperimentReport, Fit, Outcome, Verdict,
};
pub use report::{emit_report, load_report};
pub use srlab_core;
