//! CSV formats for controls, paths and bridge ensembles.
//!
//! Paths: header `t,x1,…,xm`, one row per grid time. Controls: `t,h1,…,hℓ`.
//! An ensemble is a directory of `path_NNNNNN.csv` files plus `meta.json`.

use std::fs;
use std::io::{Read, Write};
use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};
use srlab_core::{BridgeEnsemble, Control, Path};

use crate::error::{io_err, LabError, LabResult};

fn csv_err(path: &FsPath) -> impl FnOnce(csv::Error) -> LabError + '_ {
    move |source| LabError::Csv { path: path.to_path_buf(), source }
}

fn write_rows<W: Write>(
    w: W,
    prefix: &str,
    dim: usize,
    grid: usize,
    row: impl Fn(usize) -> Vec<f64>,
) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["t".to_string()];
    header.extend((1..=dim).map(|i| format!("{prefix}{i}")));
    out.write_record(&header)?;
    for k in 0..=grid {
        let mut rec = vec![(k as f64 / grid.max(1) as f64).to_string()];
        rec.extend(row(k).iter().map(f64::to_string));
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

fn read_rows<R: Read>(r: R) -> csv::Result<(usize, Vec<f64>)> {
    let mut rd = csv::Reader::from_reader(r);
    let dim = rd.headers()?.len().saturating_sub(1);
    let mut values = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        for field in rec.iter().skip(1) {
            values.push(field.trim().parse::<f64>().map_err(|e| {
                csv::Error::from(std::io::Error::new(std::io::ErrorKind::InvalidData, format!("{field:?}: {e}")))
            })?);
        }
    }
    Ok((dim, values))
}

pub fn write_path<W: Write>(path: &Path, w: W) -> csv::Result<()> {
    write_rows(w, "x", path.dim(), path.grid(), |k| path.point(k).to_vec())
}

pub fn write_control<W: Write>(h: &Control, w: W) -> csv::Result<()> {
    write_rows(w, "h", h.dim(), h.grid(), |k| h.value(k).to_vec())
}

pub fn save_path(path: &Path, file: &FsPath) -> LabResult<()> {
    let f = fs::File::create(file).map_err(io_err(file))?;
    write_path(path, f).map_err(csv_err(file))
}

pub fn save_control(h: &Control, file: &FsPath) -> LabResult<()> {
    let f = fs::File::create(file).map_err(io_err(file))?;
    write_control(h, f).map_err(csv_err(file))
}

pub fn load_path(file: &FsPath) -> LabResult<Path> {
    let f = fs::File::open(file).map_err(io_err(file))?;
    let (dim, values) = read_rows(f).map_err(csv_err(file))?;
    if dim == 0 {
        return Err(LabError::Format { path: file.to_path_buf(), reason: "no coordinate columns".into() });
    }
    Ok(Path::new(dim, values)?)
}

pub fn load_control(file: &FsPath) -> LabResult<Control> {
    let f = fs::File::open(file).map_err(io_err(file))?;
    let (dim, values) = read_rows(f).map_err(csv_err(file))?;
    Ok(Control::from_values(dim, values)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleMeta {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub epsilon: f64,
    pub seed: u64,
    pub acceptance_rate: f64,
    pub ball_radius: f64,
    pub num_proposals: u64,
    pub count: usize,
}

pub fn save_ensemble(ens: &BridgeEnsemble, dir: &FsPath) -> LabResult<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let meta = EnsembleMeta {
        x: ens.x.clone(),
        y: ens.y.clone(),
        epsilon: ens.epsilon,
        seed: ens.seed,
        acceptance_rate: ens.acceptance_rate,
        ball_radius: ens.ball_radius,
        num_proposals: ens.num_proposals,
        count: ens.paths.len(),
    };
    let mpath = dir.join("meta.json");
    let text = serde_json::to_string_pretty(&meta).map_err(|source| LabError::Json { path: mpath.clone(), source })?;
    fs::write(&mpath, text + "\n").map_err(io_err(&mpath))?;
    for (j, p) in ens.paths.iter().enumerate() {
        save_path(p, &dir.join(format!("path_{j:06}.csv")))?;
    }
    Ok(())
}

pub fn load_ensemble(dir: &FsPath) -> LabResult<BridgeEnsemble> {
    let mpath = dir.join("meta.json");
    let text = fs::read_to_string(&mpath).map_err(io_err(&mpath))?;
    let meta: EnsembleMeta = serde_json::from_str(&text).map_err(|source| LabError::Json { path: mpath, source })?;
    let paths =
        (0..meta.count).map(|j| load_path(&dir.join(format!("path_{j:06}.csv")))).collect::<LabResult<Vec<_>>>()?;
    Ok(BridgeEnsemble {
        x: meta.x,
        y: meta.y,
        epsilon: meta.epsilon,
        paths,
        acceptance_rate: meta.acceptance_rate,
        ball_radius: meta.ball_radius,
        num_proposals: meta.num_proposals,
        seed: meta.seed,
    })
}

/// Parses `"0,0.5,1"` into a point.
pub fn parse_point(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"))).collect()
}
