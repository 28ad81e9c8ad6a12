use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use srlab::io::{parse_point, save_control, save_ensemble, save_path, write_path};
use srlab::srlab_core::sde::default_ball_radius;
use srlab::srlab_core::{
    holder_stats, make_model, minimize_energy, rough_norm, sample_bridge, simulate, GeodesicOptions, ModelParams,
    SimConfig, VectorFieldModel,
};
use srlab::{emit_report, run_experiment, Experiment, ExperimentConfig, LabError, RayonExecutor};

/// Comma-separated coordinates; an alias keeps clap from treating it as a multi-value list.
type Point = Vec<f64>;

#[derive(Parser)]
#[command(name = "srlab", version, about = "Sub-Riemannian geometry and hypoelliptic bridge laboratory")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ModelArgs {
    /// heisenberg, torus_hypo or custom.
    #[arg(long)]
    model: String,
    /// Model parameter `key=value` (repeatable), e.g. `fields=V1=(1,0);V2=(0,x0)`.
    #[arg(long = "param", value_parser = parse_kv)]
    params: Vec<(String, String)>,
}

impl ModelArgs {
    fn build(&self) -> Result<VectorFieldModel, LabError> {
        let params: ModelParams = self.params.iter().cloned().collect();
        Ok(make_model(&self.model, &params)?)
    }
}

#[derive(Args)]
struct GeodesicArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    from: Point,
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    to: Point,
    #[arg(long, default_value_t = 8)]
    restarts: usize,
    #[arg(long, default_value_t = 64)]
    grid: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Overrides the seed in the configuration.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Sub-Riemannian distance by energy minimization (JSON on stdout).
    Distance(GeodesicArgs),
    /// Distance plus the minimizing control and path as CSV.
    Geodesic {
        #[command(flatten)]
        args: GeodesicArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// One trajectory of the ε-scaled diffusion as path CSV.
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        from: Point,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 64)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Include the drift field.
        #[arg(long)]
        drift: bool,
        /// Output file (stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Bridge ensemble by endpoint rejection, saved as a directory of CSVs.
    Bridge {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        from: Point,
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        to: Point,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 64)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Acceptance radius (default 0.5·√ε).
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long, default_value_t = 1000)]
        target_count: usize,
        #[arg(long, default_value_t = 10_000_000)]
        max_proposals: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Hölder and rough-path norms of a path CSV (JSON on stdout).
    Holder {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 0.4)]
        alpha: f64,
        #[arg(long, default_value_t = 8)]
        window_n: usize,
        /// Periodic coordinate indices, e.g. `0,1`.
        #[arg(long, value_delimiter = ',')]
        periodic: Vec<usize>,
    },
    Leandre(ExperimentArgs),
    Tube(ExperimentArgs),
    Concentration(ExperimentArgs),
    Tightness(ExperimentArgs),
    Reversal(ExperimentArgs),
}

fn parse_kv(s: &str) -> Result<(String, String), String> {
    s.split_once('=')
        .map(|(k, v)| (k.trim().to_string(), v.to_string()))
        .ok_or_else(|| format!("expected key=value, got {s:?}"))
}

fn geodesic_json(
    args: &GeodesicArgs,
    exec: &RayonExecutor,
) -> Result<(serde_json::Value, srlab::srlab_core::GeodesicResult), LabError> {
    let model = args.model.build()?;
    let opts =
        GeodesicOptions { restarts: args.restarts, grid: args.grid, seed: args.seed, ..GeodesicOptions::default() };
    let start = Instant::now();
    let r = minimize_energy(&model, &args.from, &args.to, &opts, exec)?;
    let value = json!({
        "model": model.name(),
        "from": args.from,
        "to": args.to,
        "distance": r.distance_estimate,
        "energy": r.energy,
        "endpoint_gap": r.endpoint_gap,
        "converged": r.converged,
        "unique": r.is_unique(),
        "restarts_used": r.restarts_used,
        "oracle_distance": model.distance_oracle(&args.from, &args.to),
        "runtime_s": start.elapsed().as_secs_f64(),
    });
    Ok((value, r))
}

fn write_json(path: &std::path::Path, v: &serde_json::Value) -> Result<(), LabError> {
    let text = serde_json::to_string_pretty(v).expect("json value");
    std::fs::write(path, text + "\n").map_err(|source| LabError::Io { path: path.to_path_buf(), source })
}

fn run(cli: Cli) -> Result<i32, LabError> {
    let exec = RayonExecutor::new(cli.workers);
    let experiment = |kind: Experiment, a: &ExperimentArgs| -> Result<i32, LabError> {
        let mut cfg = ExperimentConfig::load(&a.config)?;
        if let Some(s) = a.seed {
            cfg.seed = s;
        }
        let report = run_experiment(kind, &cfg, &exec)?;
        emit_report(&report, &a.out)?;
        println!("{:?}: {}", report.verdict.outcome, report.verdict.reason);
        Ok(report.verdict.outcome.exit_code())
    };
    match &cli.command {
        Command::Distance(args) => {
            let (v, _) = geodesic_json(args, &exec)?;
            println!("{}", serde_json::to_string_pretty(&v).expect("json value"));
        }
        Command::Geodesic { args, out } => {
            let (v, r) = geodesic_json(args, &exec)?;
            std::fs::create_dir_all(out).map_err(|source| LabError::Io { path: out.clone(), source })?;
            save_control(&r.h_star, &out.join("control.csv"))?;
            save_path(&r.path, &out.join("path.csv"))?;
            write_json(&out.join("result.json"), &v)?;
            println!("{}", serde_json::to_string_pretty(&v).expect("json value"));
        }
        Command::Simulate { model, from, eps, steps, seed, drift, out } => {
            let m = model.build()?;
            let cfg = SimConfig { drift_on: *drift, ..SimConfig::new(*eps, *steps, *seed) };
            let p = simulate(&m, from, &cfg)?;
            match out {
                Some(f) => save_path(&p, f)?,
                None => write_path(&p, std::io::stdout().lock())
                    .map_err(|source| LabError::Csv { path: "<stdout>".into(), source })?,
            }
        }
        Command::Bridge { model, from, to, eps, steps, seed, radius, target_count, max_proposals, out } => {
            let m = model.build()?;
            let r = radius.unwrap_or_else(|| default_ball_radius(*eps));
            let ens = sample_bridge(
                &m,
                from,
                to,
                &SimConfig::new(*eps, *steps, *seed),
                r,
                *target_count,
                *max_proposals,
                &exec,
            )?;
            save_ensemble(&ens, out)?;
            println!(
                "{}",
                json!({"accepted": ens.len(), "num_proposals": ens.num_proposals, "acceptance_rate": ens.acceptance_rate, "ball_radius": r})
            );
        }
        Command::Holder { input, alpha, window_n, periodic } => {
            let p = srlab::io::load_path(input)?;
            if !(*alpha > 1.0 / 3.0 && *alpha < 0.5) {
                eprintln!("warning: α = {alpha} lies outside (1/3, 1/2)");
            }
            let v = json!({
                "holder": holder_stats(&p, periodic, *alpha, *window_n),
                "rough": rough_norm(&p, *alpha),
            });
            println!("{}", serde_json::to_string_pretty(&v).expect("json value"));
        }
        Command::Leandre(a) => return experiment(Experiment::Leandre, a),
        Command::Tube(a) => return experiment(Experiment::Tube, a),
        Command::Concentration(a) => return experiment(Experiment::Concentration, a),
        Command::Tightness(a) => return experiment(Experiment::Tightness, a),
        Command::Reversal(a) => return experiment(Experiment::Reversal, a),
    }
    Ok(0)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
