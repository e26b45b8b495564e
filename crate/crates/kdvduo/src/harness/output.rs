//! CSV tables, plotting scripts and the run manifest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::state::{BoundaryData, Channel, Trajectory};

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// Writes a table and a companion gnuplot script plotting `y` columns against column `x`.
pub fn write_table(dir: &Path, name: &str, header: &[&str], rows: &[Vec<String>], plot: Option<(&str, &[&str])>) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(format!("{name}.csv"));
    let mut w = csv::Writer::from_path(&path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(r).map_err(csv_err)?;
    }
    w.flush()?;
    if let Some((x, ys)) = plot {
        write_plot_script(dir, name, header, x, ys)?;
    }
    Ok(path)
}

fn write_plot_script(dir: &Path, name: &str, header: &[&str], x: &str, ys: &[&str]) -> Result<()> {
    let col = |c: &str| header.iter().position(|h| *h == c).map(|i| i + 1);
    let xi = col(x).ok_or_else(|| Error::Config(format!("no column {x}")))?;
    let mut s = String::new();
    s.push_str("set datafile separator ','\n");
    s.push_str(&format!("set terminal pngcairo size 900,600\nset output '{name}.png'\n"));
    s.push_str(&format!("set xlabel '{x}'\nset key outside\n"));
    let series: Vec<String> = ys
        .iter()
        .filter_map(|y| col(y).map(|i| format!("'{name}.csv' using {xi}:{i} with lines title '{y}'")))
        .collect();
    s.push_str(&format!("plot {}\n", series.join(", \\\n     ")));
    std::fs::write(dir.join(format!("{name}.gp")), s)?;
    Ok(())
}

pub fn fmt(x: f64) -> String {
    format!("{x:e}")
}

/// Indices of at most `max` evenly strided time slices, always including both ends.
pub fn strided(n_slices: usize, max: usize) -> Vec<usize> {
    if max < 2 || n_slices <= max {
        return (0..n_slices).collect();
    }
    let stride = (n_slices - 1).div_ceil(max - 1);
    let mut v: Vec<usize> = (0..n_slices).step_by(stride).collect();
    if *v.last().expect("nonempty") != n_slices - 1 {
        v.push(n_slices - 1);
    }
    v
}

pub fn write_trajectory(dir: &Path, name: &str, traj: &Trajectory, g: &Grid, max_slices: usize) -> Result<PathBuf> {
    let x = g.nodes();
    let mut rows = Vec::new();
    for n in strided(traj.slices.len(), max_slices) {
        let s = &traj.slices[n];
        for i in 0..g.nx {
            rows.push(vec![fmt(g.t(n)), fmt(x[i]), fmt(s.u[i]), fmt(s.v[i])]);
        }
    }
    let path = write_table(dir, name, &["t", "x", "u", "v"], &rows, None)?;
    let script = format!(
        "set datafile separator ','\nset terminal pngcairo size 900,600\nset output '{name}.png'\n\
         set xlabel 't'\nset ylabel 'x'\nset view map\nsplot '{name}.csv' using 1:2:3 with points palette pointsize 0.3 title 'u'\n"
    );
    std::fs::write(dir.join(format!("{name}.gp")), script)?;
    Ok(path)
}

pub fn write_boundary(dir: &Path, name: &str, bd: &BoundaryData, g: &Grid) -> Result<PathBuf> {
    let mut header = vec!["t"];
    header.extend(Channel::ALL.iter().map(|c| c.name()));
    let rows: Vec<Vec<String>> = (0..=g.nt)
        .map(|n| std::iter::once(fmt(g.t(n))).chain(bd.at(n).iter().map(|&v| fmt(v))).collect())
        .collect();
    let ys: Vec<&str> = Channel::ALL.iter().map(|c| c.name()).collect();
    write_table(dir, name, &header, &rows, Some(("t", &ys)))
}

#[derive(Debug, Clone, Serialize)]
pub struct OperationStatus {
    pub name: String,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub config: Value,
    pub code_version: String,
    pub wall_time_s: f64,
    pub operations: Vec<OperationStatus>,
    pub metrics: BTreeMap<String, Value>,
    pub notes: Vec<String>,
    pub files: Vec<String>,
}

impl RunManifest {
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))?;
        std::fs::write(dir.join("manifest.json"), text)?;
        Ok(())
    }
}
