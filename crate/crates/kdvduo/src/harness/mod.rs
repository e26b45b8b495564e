//! Experiment orchestration behind the command-line front end.

pub mod config;
pub mod output;
pub mod verify;

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::critical::{default_p_grid, enumerate_candidates, spectral_witness};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::hum::{
    check_one_control_condition, observability_margin, solve_hum, trace_constant_estimate, ControlConfig, HumOptions,
};
use crate::linear::{solve_adjoint, solve_forward_linear, AdjointMode, CoupledSolver};
use crate::nonlinear::{control_nonlinear, solve_nonlinear, NonlinearControlOptions, PicardSettings};
use crate::norms::{time_l2, x_norm};
use crate::params::ValidatedParams;
use crate::state::{Channel, TraceSet, Trajectory};
use crate::time_sobolev::{embedding_constant_estimate, SobolevMode, SobolevSpec};
pub use config::{Experiment, ExperimentConfig, StateSpec, Tolerances, Wave};
use output::{fmt, write_boundary, write_table, write_trajectory, OperationStatus, RunManifest};

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Success,
    /// an iteration did not reach its target or a check missed its threshold
    NotConverged,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Success => 0,
            Outcome::NotConverged => 2,
        }
    }
}

/// Exit status for an error raised before or during a run.
pub fn exit_code_for(e: &Error) -> i32 {
    if e.is_no_convergence() { 2 } else { 1 }
}

/// Collects manifest content while an experiment runs.
#[derive(Debug, Default)]
pub struct Recorder {
    operations: Vec<OperationStatus>,
    metrics: BTreeMap<String, Value>,
    notes: Vec<String>,
    files: Vec<String>,
}

impl Recorder {
    pub fn op(&mut self, name: &str, status: &str, detail: Option<String>) {
        self.operations.push(OperationStatus { name: name.into(), status: status.into(), detail });
    }

    pub fn metric(&mut self, key: &str, v: impl Into<Value>) {
        self.metrics.insert(key.into(), v.into());
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    pub fn file(&mut self, p: &Path) {
        if let Some(n) = p.file_name() {
            self.files.push(n.to_string_lossy().into_owned());
        }
    }

    pub fn metrics(&self) -> &BTreeMap<String, Value> {
        &self.metrics
    }
}

/// Runs one experiment, writing artifacts and the manifest into `out`.
pub fn run(cfg: &ExperimentConfig, out: &Path) -> Result<(Outcome, BTreeMap<String, Value>)> {
    let start = Instant::now();
    let mut rec = Recorder::default();
    let result = dispatch(cfg, out, &mut rec);
    let outcome = match &result {
        Ok(o) => Some(*o),
        Err(e) if e.is_no_convergence() => {
            rec.op(cfg.experiment.name(), "no-convergence", Some(e.to_string()));
            Some(Outcome::NotConverged)
        }
        Err(e) => {
            rec.op(cfg.experiment.name(), "error", Some(e.to_string()));
            None
        }
    };
    let manifest = RunManifest {
        config: serde_json::to_value(cfg).map_err(|e| Error::Io(e.to_string()))?,
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        wall_time_s: start.elapsed().as_secs_f64(),
        operations: rec.operations,
        metrics: rec.metrics.clone(),
        notes: rec.notes,
        files: rec.files,
    };
    manifest.write(out)?;
    match (outcome, result) {
        (Some(o), _) => Ok((o, rec.metrics)),
        (None, Err(e)) => Err(e),
        (None, Ok(_)) => unreachable!(),
    }
}

fn dispatch(cfg: &ExperimentConfig, out: &Path, rec: &mut Recorder) -> Result<Outcome> {
    let p = cfg.params.validate()?;
    let g = cfg.grid;
    g.check()?;
    std::fs::create_dir_all(out)?;
    match cfg.experiment {
        Experiment::Simulate => simulate(cfg, &p, &g, out, rec),
        Experiment::Adjoint => adjoint(cfg, &p, &g, out, rec),
        Experiment::CriticalAtlas => atlas(cfg, &p, out, rec),
        Experiment::WitnessScan => witness(cfg, &p, &g, out, rec),
        Experiment::GramianMargin => margin(cfg, &p, &g, out, rec),
        Experiment::Control => control(cfg, &p, &g, out, rec),
        Experiment::NonlinearControl => nl_control(cfg, &p, &g, out, rec),
        Experiment::VerifySuite => verify::run_suite(cfg, out, rec),
    }
}

fn picard(cfg: &ExperimentConfig) -> PicardSettings {
    let t = &cfg.tolerances;
    PicardSettings { tol: t.picard_tol, maxit: t.picard_maxit, damping: t.picard_damping, form: cfg.nonlinear_form }
}

fn hum_options(cfg: &ExperimentConfig) -> HumOptions {
    let t = &cfg.tolerances;
    HumOptions { tol: t.hum_tol, maxit: t.hum_maxit, tikhonov: t.tikhonov, margin_modes: 0 }
}

fn write_traces(dir: &Path, name: &str, tr: &TraceSet, g: &Grid) -> Result<std::path::PathBuf> {
    let mut header = vec!["t".to_string()];
    for comp in ["u", "v"] {
        for k in 0..3 {
            for end in ["0", "L"] {
                header.push(format!("d{k}{comp}_{end}"));
            }
        }
    }
    let rows: Vec<Vec<String>> = (0..=g.nt)
        .map(|n| {
            let mut r = vec![fmt(g.t(n))];
            for f in [&tr.u, &tr.v] {
                for k in 0..3 {
                    for end in 0..2 {
                        r.push(fmt(f[k][end][n]));
                    }
                }
            }
            r
        })
        .collect();
    let h: Vec<&str> = header.iter().map(String::as_str).collect();
    let ys = h[1..].to_vec();
    write_table(dir, name, &h, &rows, Some(("t", &ys)))
}

fn write_energy(dir: &Path, traj: &Trajectory, p: &ValidatedParams, g: &Grid) -> Result<std::path::PathBuf> {
    let rows: Vec<Vec<String>> = traj
        .slices
        .iter()
        .enumerate()
        .map(|(n, s)| Ok(vec![fmt(g.t(n)), fmt(x_norm(s, p, g)?)]))
        .collect::<Result<_>>()?;
    write_table(dir, "energy", &["t", "x_norm"], &rows, Some(("t", &["x_norm"])))
}

fn simulate(cfg: &ExperimentConfig, p: &ValidatedParams, g: &Grid, out: &Path, rec: &mut Recorder) -> Result<Outcome> {
    let (init, _) = cfg.states();
    let bd = config::boundary_from_waves(g, &cfg.boundary)?;
    let (traj, traces) = if cfg.nonlinear {
        let sol = solve_nonlinear(p, g, &init, &bd, &picard(cfg), None)?;
        rec.metric("picard_iterations", sol.iterations);
        (sol.trajectory, sol.traces)
    } else {
        solve_forward_linear(p, g, &init, &bd, None)?
    };
    rec.op("solve", "ok", None);
    rec.metric("x_norm_initial", x_norm(traj.initial(), p, g)?);
    rec.metric("x_norm_final", x_norm(traj.terminal(), p, g)?);
    rec.metric("max_abs", traj.slices.iter().map(|s| s.max_abs()).fold(0.0, f64::max));
    let files = [
        write_trajectory(out, "trajectory", &traj, g, cfg.max_output_slices)?,
        write_traces(out, "traces", &traces, g)?,
        write_boundary(out, "boundary", &bd, g)?,
        write_energy(out, &traj, p, g)?,
    ];
    files.iter().for_each(|f| rec.file(f));
    Ok(Outcome::Success)
}

fn adjoint(cfg: &ExperimentConfig, p: &ValidatedParams, g: &Grid, out: &Path, rec: &mut Recorder) -> Result<Outcome> {
    let (_, fin) = cfg.states();
    let (ta, tra) = solve_adjoint(p, g, &fin, AdjointMode::Pde)?;
    let adj = CoupledSolver::new(p, g)?.transpose(&fin)?;
    rec.op("adjoint_pde", "ok", None);
    rec.op("adjoint_transpose", "ok", None);
    let nx = g.nx;
    let mut diff = 0.0f64;
    for (a, b) in ta.slices[..g.nt * 9 / 10 + 1].iter().zip(&adj.trajectory.slices) {
        for i in 3..nx.saturating_sub(3) {
            diff = diff.max((a.u[i] - b.u[i]).abs()).max((a.v[i] - b.v[i]).abs());
        }
    }
    rec.metric("interior_difference_t_le_0.9T", diff);
    let dens_pde = crate::hum::trace_densities(&tra, p)?;
    // pointwise trace densities are dominated by the terminal layer; compare their L^2(0,T) sizes
    for ch in Channel::ALL {
        let a = time_l2(dens_pde.channel(ch), g);
        let b = time_l2(adj.densities.channel(ch), g);
        rec.metric(&format!("density_norm_pde_{}", ch.name()), a);
        rec.metric(&format!("density_norm_transpose_{}", ch.name()), b);
    }
    let files = [
        write_trajectory(out, "adjoint_transpose", &adj.trajectory, g, cfg.max_output_slices)?,
        write_trajectory(out, "adjoint_pde", &ta, g, cfg.max_output_slices)?,
        write_boundary(out, "trace_densities_transpose", &adj.densities, g)?,
        write_boundary(out, "trace_densities_pde", &dens_pde, g)?,
    ];
    files.iter().for_each(|f| rec.file(f));
    Ok(Outcome::Success)
}

fn atlas(cfg: &ExperimentConfig, p: &ValidatedParams, out: &Path, rec: &mut Recorder) -> Result<Outcome> {
    let cands = enumerate_candidates(p, cfg.l_max, cfg.index_convention)?;
    rec.op("enumerate_candidates", "ok", Some(format!("{} candidates", cands.len())));
    rec.note("alpha = 6 sum S_j^2 - sigma^2 over the partial sums S_j of (k,l,m,n,s)");
    let grid = default_p_grid(cfg.p_points);
    let rows: Vec<Vec<String>> = cands
        .par_iter()
        .map(|c| -> Result<Vec<String>> {
            let w = spectral_witness(p, c.length, &grid)?;
            let margin = if cfg.atlas_margin {
                let g = Grid { length: c.length, ..cfg.grid };
                fmt(observability_margin(p, &g, cfg.config, cfg.margin_modes)?)
            } else {
                String::new()
            };
            let res = c.vieta_residuals.unwrap_or([f64::NAN; 6]);
            let [k, l, m, n, s] = c.index.0;
            let mut row = vec![
                fmt(c.length),
                c.alpha.to_string(),
                c.consistent.to_string(),
                fmt(w.min_sigma),
                margin,
                k.to_string(),
                l.to_string(),
                m.to_string(),
                n.to_string(),
                s.to_string(),
                c.multiplicity.to_string(),
                c.degenerate.to_string(),
            ];
            row.extend(res.iter().map(|&r| fmt(r)));
            Ok(row)
        })
        .collect::<Result<_>>()?;
    let header = [
        "L", "alpha_index", "consistent", "sigma_min", "margin", "k", "l", "m", "n", "s", "multiplicity", "degenerate",
        "e1", "e2", "e3", "e4", "e5", "e6",
    ];
    rec.metric("candidates", cands.len());
    if let Some(c) = cands.first() {
        rec.metric("smallest_length", c.length);
    }
    rec.metric("consistent_candidates", cands.iter().filter(|c| c.consistent).count());
    let f = write_table(out, "atlas", &header, &rows, Some(("L", &["sigma_min"])))?;
    rec.file(&f);
    Ok(Outcome::Success)
}

fn witness(cfg: &ExperimentConfig, p: &ValidatedParams, g: &Grid, out: &Path, rec: &mut Recorder) -> Result<Outcome> {
    let w = spectral_witness(p, g.length, &default_p_grid(cfg.p_points))?;
    rec.op("spectral_witness", "ok", None);
    rec.metric("min_sigma", w.min_sigma);
    rec.metric("argmin_p", w.argmin_p);
    rec.metric("skipped_points", w.skipped.len());
    let rows: Vec<Vec<String>> = w.lambda_scan.iter().map(|&(p, s)| vec![fmt(p), fmt(s)]).collect();
    let f = write_table(out, "witness", &["p", "sigma_min"], &rows, Some(("p", &["sigma_min"])))?;
    rec.file(&f);
    Ok(Outcome::Success)
}

fn margin(cfg: &ExperimentConfig, p: &ValidatedParams, g: &Grid, out: &Path, rec: &mut Recorder) -> Result<Outcome> {
    let configs: Vec<ControlConfig> = ControlConfig::ALL.to_vec();
    let margins: Vec<f64> = configs
        .par_iter()
        .map(|&c| observability_margin(p, g, c, cfg.margin_modes))
        .collect::<Result<_>>()?;
    rec.op("observability_margin", "ok", Some(format!("{} sine modes per component", cfg.margin_modes)));
    let beta = embedding_constant_estimate(&SobolevSpec::new(1.0 / 3.0, g.horizon, SobolevMode::Inhomogeneous)?, g.nt);
    let c_t = trace_constant_estimate(p, g, cfg.margin_modes)?;
    let (ok, bound) = check_one_control_condition(p, g.length, g.horizon, beta, c_t);
    for (c, m) in configs.iter().zip(&margins) {
        rec.metric(&format!("margin_{}", c.name()), *m);
    }
    rec.metric("beta_hat", beta);
    rec.metric("c_t_hat", c_t);
    rec.metric("one_control_bound", bound);
    rec.metric("one_control_condition", ok);
    let rows: Vec<Vec<String>> = configs.iter().zip(&margins).map(|(c, m)| vec![c.name().to_string(), fmt(*m)]).collect();
    let f = write_table(out, "margin", &["config", "margin"], &rows, None)?;
    rec.file(&f);
    Ok(Outcome::Success)
}

fn write_residuals(out: &Path, history: &[f64], rec: &mut Recorder) -> Result<()> {
    let rows: Vec<Vec<String>> = history.iter().enumerate().map(|(k, r)| vec![k.to_string(), fmt(*r)]).collect();
    let f = write_table(out, "residuals", &["iteration", "relative_residual"], &rows, Some(("iteration", &["relative_residual"])))?;
    rec.file(&f);
    Ok(())
}

fn record_failure_margin(cfg: &ExperimentConfig, p: &ValidatedParams, g: &Grid, rec: &mut Recorder) {
    match observability_margin(p, g, cfg.config, cfg.margin_modes) {
        Ok(m) => rec.metric("observability_margin", m),
        Err(e) => rec.note(format!("margin unavailable: {e}")),
    }
}

fn control(cfg: &ExperimentConfig, p: &ValidatedParams, g: &Grid, out: &Path, rec: &mut Recorder) -> Result<Outcome> {
    let (init, target) = cfg.states();
    let opts = HumOptions { margin_modes: cfg.margin_modes, ..hum_options(cfg) };
    let sol = match solve_hum(p, g, cfg.config, &init, &target, &opts) {
        Ok(s) => s,
        Err(e) => {
            if let Error::NoConvergence { iterations, residual } = e {
                rec.metric("cg_iterations", iterations);
                rec.metric("final_relative_residual", residual);
                record_failure_margin(cfg, p, g, rec);
            }
            return Err(e);
        }
    };
    rec.op("solve_hum", "ok", None);
    let r = &sol.report;
    rec.metric("cg_iterations", r.cg_iterations);
    rec.metric("terminal_error", r.terminal_error);
    rec.metric("relative_terminal_error", r.relative_terminal_error);
    if let Some(m) = r.observability_margin {
        rec.metric("observability_margin", m);
    }
    for (ch, n) in &r.control_norms {
        rec.metric(&format!("control_norm_{ch}"), *n);
    }
    for (ch, m) in &r.removed_means {
        rec.metric(&format!("removed_mean_{ch}"), *m);
    }
    write_residuals(out, &r.cg_residual_history, rec)?;
    let files = [
        write_boundary(out, "controls", &sol.controls, g)?,
        write_trajectory(out, "trajectory", &sol.trajectory, g, cfg.max_output_slices)?,
        write_energy(out, &sol.trajectory, p, g)?,
    ];
    files.iter().for_each(|f| rec.file(f));
    Ok(Outcome::Success)
}

fn nl_control(cfg: &ExperimentConfig, p: &ValidatedParams, g: &Grid, out: &Path, rec: &mut Recorder) -> Result<Outcome> {
    let (init, target) = cfg.states();
    let t = &cfg.tolerances;
    let opts = NonlinearControlOptions { picard: picard(cfg), hum: hum_options(cfg), tol: t.outer_tol, maxit: t.outer_maxit };
    let sol = match control_nonlinear(p, g, cfg.config, &init, &target, &opts) {
        Ok(s) => s,
        Err(e) => {
            if let Error::NoConvergence { iterations, residual } = e {
                rec.metric("iterations", iterations);
                rec.metric("final_residual", residual);
                record_failure_margin(cfg, p, g, rec);
            }
            return Err(e);
        }
    };
    rec.op("control_nonlinear", "ok", None);
    let r = &sol.report;
    rec.metric("outer_iterations", r.outer_iterations);
    rec.metric("terminal_error", r.terminal_error);
    rec.metric("relative_terminal_error", r.relative_terminal_error);
    rec.metric("picard_iterations", json!(r.picard_iterations));
    rec.metric("hum_iterations", json!(r.hum_iterations));
    let rows: Vec<Vec<String>> = r
        .terminal_errors
        .iter()
        .enumerate()
        .map(|(k, e)| vec![(k + 1).to_string(), fmt(*e), r.picard_iterations[k].to_string(), r.hum_iterations[k].to_string()])
        .collect();
    let f = write_table(
        out,
        "outer",
        &["iteration", "relative_terminal_error", "picard_iterations", "hum_iterations"],
        &rows,
        Some(("iteration", &["relative_terminal_error"])),
    )?;
    rec.file(&f);
    let files = [
        write_boundary(out, "controls", &sol.controls, g)?,
        write_trajectory(out, "trajectory", &sol.trajectory, g, cfg.max_output_slices)?,
    ];
    files.iter().for_each(|f| rec.file(f));
    Ok(Outcome::Success)
}

/// Sweep axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    L,
    T,
    Amplitude,
}

impl std::str::FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l" => Ok(Axis::L),
            "t" => Ok(Axis::T),
            "amplitude" => Ok(Axis::Amplitude),
            _ => Err(Error::Config(format!("unknown sweep axis {s:?} (expected L, T or amplitude)"))),
        }
    }
}

/// One row of the aggregated sweep table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub margin: f64,
    pub terminal_error: Option<f64>,
    pub relative_terminal_error: Option<f64>,
    pub iterations: usize,
    pub sigma_min: f64,
    pub status: String,
}

fn sweep_point(cfg: &ExperimentConfig, axis: Axis, value: f64) -> Result<SweepRow> {
    let mut c = cfg.clone();
    match axis {
        Axis::L => c.grid.length = value,
        Axis::T => c.grid.horizon = value,
        Axis::Amplitude => c.target = c.target.scaled(value),
    }
    let p = c.params.validate()?;
    let g = c.grid;
    g.check()?;
    let margin = observability_margin(&p, &g, c.config, c.margin_modes)?;
    let sigma_min = spectral_witness(&p, g.length, &default_p_grid(c.p_points))?.min_sigma;
    let (init, target) = c.states();
    let attempt = if c.nonlinear {
        let t = &c.tolerances;
        let opts = NonlinearControlOptions { picard: picard(&c), hum: hum_options(&c), tol: t.outer_tol, maxit: t.outer_maxit };
        control_nonlinear(&p, &g, c.config, &init, &target, &opts)
            .map(|s| (s.report.terminal_error, s.report.relative_terminal_error, s.report.outer_iterations))
    } else {
        solve_hum(&p, &g, c.config, &init, &target, &hum_options(&c))
            .map(|s| (s.report.terminal_error, s.report.relative_terminal_error, s.report.cg_iterations))
    };
    Ok(match attempt {
        Ok((e, r, it)) => SweepRow {
            value,
            margin,
            terminal_error: Some(e),
            relative_terminal_error: Some(r),
            iterations: it,
            sigma_min,
            status: "ok".into(),
        },
        Err(Error::NoConvergence { iterations, residual }) => SweepRow {
            value,
            margin,
            terminal_error: None,
            relative_terminal_error: Some(residual),
            iterations,
            sigma_min,
            status: "no-convergence".into(),
        },
        Err(e) => return Err(e),
    })
}

/// Runs the configured controller at each value of `axis` and aggregates one row per value.
pub fn sweep(cfg: &ExperimentConfig, axis: Axis, values: &[f64], out: &Path) -> Result<(Outcome, Vec<SweepRow>)> {
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    if values.iter().any(|v| !(*v > 0.0)) || values.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Config("sweep values must be positive and sorted".into()));
    }
    let start = Instant::now();
    std::fs::create_dir_all(out)?;
    let rows: Vec<SweepRow> = values
        .par_iter()
        .enumerate()
        .map(|(k, &v)| -> Result<SweepRow> {
            let row = sweep_point(cfg, axis, v)?;
            let dir = out.join(format!("point_{k:03}"));
            let manifest = RunManifest {
                config: json!({ "axis": axis, "value": v, "base": cfg }),
                code_version: env!("CARGO_PKG_VERSION").to_string(),
                wall_time_s: 0.0,
                operations: vec![OperationStatus { name: "sweep_point".into(), status: row.status.clone(), detail: None }],
                metrics: serde_json::from_value(json!({
                    "margin": row.margin,
                    "sigma_min": row.sigma_min,
                    "terminal_error": row.terminal_error,
                    "relative_terminal_error": row.relative_terminal_error,
                    "iterations": row.iterations,
                }))
                .map_err(|e| Error::Io(e.to_string()))?,
                notes: vec![],
                files: vec![],
            };
            manifest.write(&dir)?;
            Ok(row)
        })
        .collect::<Result<_>>()?;
    let opt = |x: Option<f64>| x.map(fmt).unwrap_or_default();
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                fmt(r.value),
                fmt(r.margin),
                opt(r.terminal_error),
                opt(r.relative_terminal_error),
                r.iterations.to_string(),
                fmt(r.sigma_min),
                r.status.clone(),
            ]
        })
        .collect();
    let header = ["value", "margin", "terminal_error", "relative_terminal_error", "iterations", "sigma_min", "status"];
    write_table(out, "sweep", &header, &table, Some(("value", &["margin", "sigma_min"])))?;
    let outcome = if rows.iter().all(|r| r.status == "ok") { Outcome::Success } else { Outcome::NotConverged };
    let manifest = RunManifest {
        config: json!({ "axis": axis, "values": values, "base": cfg }),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        wall_time_s: start.elapsed().as_secs_f64(),
        operations: vec![OperationStatus { name: "sweep".into(), status: format!("{outcome:?}"), detail: None }],
        metrics: BTreeMap::from([
            ("points".to_string(), json!(rows.len())),
            ("converged".to_string(), json!(rows.iter().filter(|r| r.status == "ok").count())),
        ]),
        notes: vec![],
        files: vec!["sweep.csv".into()],
    };
    manifest.write(out)?;
    Ok((outcome, rows))
}

