use std::fs::File;
use std::path::Path;

use serde::Serialize;

use super::sweep::SweepPoint;
use crate::error::{Error, Result};
use crate::spectral::{Grid1D, GridFunction, Space};
use crate::superadiabatic::{CoefficientTable, Component};

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    Ok(csv::Writer::from_path(path).map_err(csv_err)?)
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Diagnostic(format!("csv: {other:?}")),
    }
}

fn momentum(f: &GridFunction) -> Result<()> {
    if f.space() != Space::Momentum {
        return Err(Error::GridMismatch(
            "spectra are written from momentum-space functions".into(),
        ));
    }
    Ok(())
}

/// Columns `k, re, im, abs`.
pub fn write_spectrum_csv(path: &Path, f: &GridFunction) -> Result<()> {
    momentum(f)?;
    let mut w = writer(path)?;
    w.write_record(["k", "re", "im", "abs"]).map_err(csv_err)?;
    for (k, v) in f.grid().ks().iter().zip(f.values()) {
        w.serialize((k, v.re, v.im, v.norm())).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Columns `k, re_up, im_up, re_down, im_down` for the two adiabatic bands.
pub fn write_state_spectrum_csv(path: &Path, up: &GridFunction, down: &GridFunction) -> Result<()> {
    momentum(up)?;
    momentum(down)?;
    up.grid().check_same(down.grid())?;
    let mut w = writer(path)?;
    w.write_record(["k", "re_up", "im_up", "re_down", "im_down"])
        .map_err(csv_err)?;
    for ((k, u), d) in up.grid().ks().iter().zip(up.values()).zip(down.values()) {
        w.serialize((k, u.re, u.im, d.re, d.im)).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Solver and formula side by side: `k`, then real part, imaginary part and
/// modulus of each.
pub fn write_comparison_csv(
    path: &Path,
    numeric: &GridFunction,
    formula: &GridFunction,
) -> Result<()> {
    momentum(numeric)?;
    momentum(formula)?;
    numeric.grid().check_same(formula.grid())?;
    let mut w = writer(path)?;
    w.write_record([
        "k",
        "re_numeric",
        "im_numeric",
        "abs_numeric",
        "re_formula",
        "im_formula",
        "abs_formula",
    ])
    .map_err(csv_err)?;
    for ((k, a), b) in numeric
        .grid()
        .ks()
        .iter()
        .zip(numeric.values())
        .zip(formula.values())
    {
        w.serialize((k, a.re, a.im, a.norm(), b.re, b.im, b.norm()))
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Columns `t` and `value_column`.
pub fn write_history_csv(path: &Path, value_column: &str, samples: &[(f64, f64)]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["t", value_column]).map_err(csv_err)?;
    for s in samples {
        w.serialize(s).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// One row per sweep point. Wall times are left out so the file depends on
/// the configuration alone.
pub fn write_sweep_csv(path: &Path, points: &[SweepPoint]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record([
        "epsilon",
        "p0",
        "norm_formula",
        "norm_numeric",
        "rel_l2_error",
        "solver_self_error",
        "t_final",
        "dt",
        "steps",
        "points",
        "accepted",
    ])
    .map_err(csv_err)?;
    for p in points {
        let r = &p.record;
        w.serialize((
            r.epsilon,
            r.p0,
            r.norm_formula,
            r.norm_numeric,
            r.rel_l2_error,
            r.solver_self_error,
            r.t_final,
            r.dt,
            r.steps,
            r.points,
            p.accepted,
        ))
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Columns `n, m, q` and the real and imaginary parts of x, y, z and w.
pub fn write_recursion_csv(path: &Path, table: &CoefficientTable, n_max: usize) -> Result<()> {
    if n_max > table.n_max() {
        return Err(Error::Capability {
            what: "recursion order",
            requested: n_max,
            limit: table.n_max(),
        });
    }
    let mut w = writer(path)?;
    w.write_record([
        "n", "m", "q", "re(x)", "im(x)", "re(y)", "im(y)", "re(z)", "im(z)", "re(w)", "im(w)",
    ])
    .map_err(csv_err)?;
    let qs = table.grid().xs();
    for n in 0..=n_max {
        for m in 0..=n {
            let cols: Vec<&[num_complex::Complex64]> = Component::ALL
                .iter()
                .map(|&c| table.values(c, n, m))
                .collect();
            for (i, q) in qs.iter().enumerate() {
                let v: Vec<f64> = cols.iter().flat_map(|c| [c[i].re, c[i].im]).collect();
                w.serialize((n, m, q, v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7]))
                    .map_err(csv_err)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct GridInfo {
    pub x_min: f64,
    pub x_max: f64,
    pub points: usize,
    pub epsilon: f64,
}

impl From<&Grid1D> for GridInfo {
    fn from(g: &Grid1D) -> Self {
        Self {
            x_min: g.x_min(),
            x_max: g.x_max(),
            points: g.n(),
            epsilon: g.epsilon(),
        }
    }
}

/// Run metadata written next to the CSV files.
#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub version: &'static str,
    pub config_hash: Option<String>,
    pub grid: Option<GridInfo>,
    pub dt: Option<f64>,
    pub solver_self_error: Vec<f64>,
    pub files: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION"),
            config_hash: None,
            grid: None,
            dt: None,
            solver_self_error: Vec::new(),
            files: Vec::new(),
        }
    }
}

pub fn write_manifest(dir: &Path, manifest: &Manifest) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let text =
        serde_json::to_string_pretty(manifest).map_err(|e| Error::Diagnostic(e.to_string()))?;
    std::fs::write(dir.join("manifest.json"), text + "\n")?;
    Ok(())
}
