//! Report files: `report.json`, `curves.csv`, `plot.svg`, `timing.json`.
//!
//! Wall-clock time lives in `timing.json` only, so the other three files are
//! byte-identical across reruns of the same configuration.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{io_err, LabError, LabResult};
use crate::ldplab::ExperimentReport;

#[derive(Debug, Serialize, Deserialize)]
struct Timing {
    runtime_s: f64,
}

/// Writes the four report files into `out_dir` (created if missing).
pub fn emit_report(report: &ExperimentReport, out_dir: &Path) -> LabResult<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let json_path = out_dir.join("report.json");
    let json =
        serde_json::to_string_pretty(report).map_err(|source| LabError::Json { path: json_path.clone(), source })?;
    fs::write(&json_path, json + "\n").map_err(io_err(&json_path))?;

    let csv_path = out_dir.join("curves.csv");
    fs::write(&csv_path, curves_csv(report)).map_err(io_err(&csv_path))?;

    let svg_path = out_dir.join("plot.svg");
    fs::write(&svg_path, plot_svg(report)).map_err(io_err(&svg_path))?;

    let timing_path = out_dir.join("timing.json");
    let timing = serde_json::to_string(&Timing { runtime_s: report.runtime_s })
        .map_err(|source| LabError::Json { path: timing_path.clone(), source })?;
    fs::write(&timing_path, timing + "\n").map_err(io_err(&timing_path))?;
    Ok(vec![json_path, csv_path, svg_path, timing_path])
}

/// Reads `report.json`, restoring the runtime from `timing.json` when present.
pub fn load_report(dir: &Path) -> LabResult<ExperimentReport> {
    let path = dir.join("report.json");
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    let mut report: ExperimentReport =
        serde_json::from_str(&text).map_err(|source| LabError::Json { path: path.clone(), source })?;
    let tpath = dir.join("timing.json");
    if let Ok(t) = fs::read_to_string(&tpath) {
        let t: Timing = serde_json::from_str(&t).map_err(|source| LabError::Json { path: tpath, source })?;
        report.runtime_s = t.runtime_s;
    }
    Ok(report)
}

/// `epsilon,estimate,std_error`, one row per primary estimate.
pub fn curves_csv(report: &ExperimentReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["epsilon", "estimate", "std_error"]).expect("in-memory write");
    for e in report.primary_estimates() {
        w.write_record([e.epsilon.to_string(), e.value.to_string(), e.std_error.to_string()]).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 56.0;

/// Curve values against ε as a scatter; with a fit, one `<polyline>` for the
/// fitted curve and one `<line>` for the target.
pub fn plot_svg(report: &ExperimentReport) -> String {
    let pts: Vec<(f64, f64)> =
        report.primary_estimates().iter().filter_map(|e| e.curve.map(|c| (e.epsilon, c))).collect();
    let x_max = report.eps_grid.iter().copied().fold(0.0, f64::max).max(1e-9) * 1.05;
    let mut ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    if let Some(f) = &report.fit {
        ys.push(f.target);
        ys.extend((0..=40).map(|k| f.eval(x_max * k as f64 / 40.0)));
    }
    let (mut y_lo, mut y_hi) = ys.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if !y_lo.is_finite() {
        (y_lo, y_hi) = (-1.0, 1.0);
    }
    if y_hi - y_lo < 1e-9 {
        y_lo -= 0.5;
        y_hi += 0.5;
    }
    let span = y_hi - y_lo;
    y_lo -= 0.05 * span;
    y_hi += 0.05 * span;
    let sx = |x: f64| PAD + (W - 2.0 * PAD) * x / x_max;
    let sy = |y: f64| H - PAD - (H - 2.0 * PAD) * (y - y_lo) / (y_hi - y_lo);

    let ylabel = match report.experiment {
        crate::ldplab::Experiment::Concentration => "tube fraction",
        crate::ldplab::Experiment::Reversal => "max KS statistic",
        _ => "ε·log estimate",
    };
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<path d="M{:.2},{:.2} L{:.2},{:.2} L{:.2},{:.2}" fill="none" stroke="black"/>"#,
        PAD,
        PAD,
        PAD,
        H - PAD,
        W - PAD,
        H - PAD
    );
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">ε</text>"#, W / 2.0, H - 16.0);
    let _ = writeln!(
        s,
        r#"<text x="14" y="{:.2}" font-size="12" text-anchor="middle" transform="rotate(-90 14 {:.2})">{ylabel}</text>"#,
        H / 2.0,
        H / 2.0
    );
    for k in 0..=4 {
        let xv = x_max * k as f64 / 4.0;
        let yv = y_lo + (y_hi - y_lo) * k as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="10" text-anchor="middle">{xv:.3}</text>"#,
            sx(xv),
            H - PAD + 16.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="10" text-anchor="end">{yv:.3}</text>"#,
            PAD - 6.0,
            sy(yv) + 3.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="24" font-size="13" text-anchor="middle">{:?} · {} · {:?}</text>"#,
        W / 2.0,
        report.experiment,
        report.model,
        report.verdict.outcome
    );
    if let Some(f) = &report.fit {
        let poly: Vec<String> = (0..=40)
            .map(|k| {
                let x = x_max * k as f64 / 40.0;
                format!("{:.2},{:.2}", sx(x), sy(f.eval(x)))
            })
            .collect();
        let _ = writeln!(s, r#"<polyline class="fit" points="{}" fill="none" stroke="steelblue"/>"#, poly.join(" "));
        let _ = writeln!(
            s,
            r#"<line class="target" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="firebrick" stroke-dasharray="6 4"/>"#,
            sx(0.0),
            sy(f.target),
            sx(x_max),
            sy(f.target)
        );
    }
    for (x, y) in &pts {
        let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="black"/>"#, sx(*x), sy(*y));
    }
    s.push_str("</svg>\n");
    s
}
