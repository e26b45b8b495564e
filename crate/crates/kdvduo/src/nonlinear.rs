//! Picard iteration for the nonlinear system and the fixed-point controller.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::hum::{ControlConfig, HumOptions, HumReport, solve_hum};
use crate::linear::{extract_traces, CoupledSolver};
use crate::norms::x_norm;
use crate::params::ValidatedParams;
use crate::state::{BoundaryData, SourcePair, StatePair, TraceSet, Trajectory};
use crate::stencil::derivative;

/// Which quadratic terms enter the source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum NonlinearForm {
    /// coupling terms only: f = -a1 v v_x - a2 (uv)_x, s = -(a2 b/c) u u_x - (a1 b/c)(uv)_x
    #[default]
    Coupling,
    /// coupling terms plus -u u_x in f and -(1/c) v v_x in s
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PicardSettings {
    pub tol: f64,
    pub maxit: usize,
    pub damping: f64,
    #[serde(default)]
    pub form: NonlinearForm,
}

impl Default for PicardSettings {
    fn default() -> Self {
        Self { tol: 1e-10, maxit: 50, damping: 1.0, form: NonlinearForm::Coupling }
    }
}

impl PicardSettings {
    pub fn check(&self) -> Result<()> {
        if !(self.tol > 0.0) || self.maxit < 1 || !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::Config(format!(
                "Picard settings need tol > 0, maxit >= 1, damping in (0, 1] (got {}, {}, {})",
                self.tol, self.maxit, self.damping
            )));
        }
        Ok(())
    }
}

/// Source terms (f, s) produced by the quadratic terms on one slice.
pub fn nonlinearity(p: &ValidatedParams, slice: &StatePair, g: &Grid) -> Result<StatePair> {
    nonlinearity_with(p, slice, g, NonlinearForm::Coupling)
}

pub fn nonlinearity_with(p: &ValidatedParams, slice: &StatePair, g: &Grid, form: NonlinearForm) -> Result<StatePair> {
    slice.check(g.nx)?;
    let (a1, a2, bc) = (p.a1, p.a2, p.b / p.c);
    let dx = g.dx();
    if a1 == 0.0 && a2 == 0.0 && form == NonlinearForm::Coupling {
        return Ok(StatePair::zeros(g.nx));
    }
    let ux = derivative(&slice.u, dx);
    let vx = derivative(&slice.v, dx);
    let uv: Vec<f64> = slice.u.iter().zip(&slice.v).map(|(a, b)| a * b).collect();
    let uvx = derivative(&uv, dx);
    let mut f: Vec<f64> = (0..g.nx).map(|i| -a1 * slice.v[i] * vx[i] - a2 * uvx[i]).collect();
    let mut s: Vec<f64> = (0..g.nx).map(|i| -a2 * bc * slice.u[i] * ux[i] - a1 * bc * uvx[i]).collect();
    if form == NonlinearForm::Full {
        for i in 0..g.nx {
            f[i] -= slice.u[i] * ux[i];
            s[i] -= slice.v[i] * vx[i] / p.c;
        }
    }
    Ok(StatePair::new(f, s))
}

fn sources_of(p: &ValidatedParams, traj: &Trajectory, g: &Grid, form: NonlinearForm) -> Result<SourcePair> {
    Ok(SourcePair::from_slices(
        traj.slices.iter().map(|s| nonlinearity_with(p, s, g, form)).collect::<Result<_>>()?,
    ))
}

fn add_sources(a: &SourcePair, b: &SourcePair) -> SourcePair {
    let add = |x: &Vec<Vec<f64>>, y: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
        x.iter().zip(y).map(|(r, q)| r.iter().zip(q).map(|(u, v)| u + v).collect()).collect()
    };
    SourcePair { f: add(&a.f, &b.f), s: add(&a.s, &b.s) }
}

/// Outcome of a nonlinear solve.
#[derive(Debug, Clone)]
pub struct NonlinearSolution {
    pub trajectory: Trajectory,
    pub traces: TraceSet,
    /// Picard updates after the initial linear solve
    pub iterations: usize,
    /// sup over time of the X-norm of successive differences
    pub differences: Vec<f64>,
}

/// Picard iteration; `extra` is an additional prescribed source.
pub fn solve_nonlinear(
    p: &ValidatedParams,
    g: &Grid,
    init: &StatePair,
    bd: &BoundaryData,
    set: &PicardSettings,
    extra: Option<&SourcePair>,
) -> Result<NonlinearSolution> {
    let solver = CoupledSolver::new(p, g)?;
    solve_nonlinear_with(&solver, init, bd, set, extra)
}

pub fn solve_nonlinear_with(
    solver: &CoupledSolver,
    init: &StatePair,
    bd: &BoundaryData,
    set: &PicardSettings,
    extra: Option<&SourcePair>,
) -> Result<NonlinearSolution> {
    set.check()?;
    let (p, g) = (solver.params(), solver.grid());
    let mut traj = solver.forward(init, bd, extra)?;
    let mut differences = Vec::new();
    loop {
        let mut src = sources_of(p, &traj, g, set.form)?;
        if let Some(e) = extra {
            src = add_sources(&src, e);
        }
        let mut next = solver.forward(init, bd, Some(&src))?;
        if set.damping < 1.0 {
            for (n, o) in next.slices.iter_mut().zip(&traj.slices) {
                *n = o.add(&n.sub(o).scaled(set.damping));
            }
        }
        let mut diff = 0.0f64;
        for (a, b) in next.slices.iter().zip(&traj.slices) {
            diff = diff.max(x_norm(&a.sub(b), p, g)?);
        }
        differences.push(diff);
        traj = next;
        if diff < set.tol {
            break;
        }
        if !diff.is_finite() || differences.len() >= set.maxit {
            return Err(Error::NoConvergence { iterations: differences.len(), residual: diff });
        }
    }
    let traces = extract_traces(&traj, g)?;
    Ok(NonlinearSolution { trajectory: traj, traces, iterations: differences.len(), differences })
}

/// Terminal value of the quadratic terms propagated by the homogeneous linear flow,
/// with the sign of the integral of the positive quadratic forms.
pub fn duhamel_endpoint(p: &ValidatedParams, g: &Grid, traj: &Trajectory) -> Result<StatePair> {
    duhamel_endpoint_with(&CoupledSolver::new(p, g)?, traj, NonlinearForm::Coupling)
}

pub fn duhamel_endpoint_with(solver: &CoupledSolver, traj: &Trajectory, form: NonlinearForm) -> Result<StatePair> {
    let (p, g) = (solver.params(), solver.grid());
    let src = sources_of(p, traj, g, form)?;
    if src.is_zero() {
        return Ok(StatePair::zeros(g.nx));
    }
    let out = solver.forward(&StatePair::zeros(g.nx), &BoundaryData::zeros(g.nt), Some(&src))?;
    Ok(out.terminal().scaled(-1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonlinearControlReport {
    pub outer_iterations: usize,
    /// relative terminal error after each outer iteration
    pub terminal_errors: Vec<f64>,
    pub picard_iterations: Vec<usize>,
    pub hum_iterations: Vec<usize>,
    pub terminal_error: f64,
    pub relative_terminal_error: f64,
    pub last_hum: HumReport,
}

#[derive(Debug, Clone)]
pub struct NonlinearControl {
    pub controls: BoundaryData,
    pub trajectory: Trajectory,
    pub report: NonlinearControlReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonlinearControlOptions {
    pub picard: PicardSettings,
    pub hum: HumOptions,
    /// relative terminal error at which the outer iteration stops
    pub tol: f64,
    pub maxit: usize,
}

impl Default for NonlinearControlOptions {
    fn default() -> Self {
        Self { picard: PicardSettings::default(), hum: HumOptions { tol: 1e-4, ..HumOptions::default() }, tol: 1e-3, maxit: 20 }
    }
}

/// Outer fixed point: controls steer the linear flow to target + Duhamel term of the current trajectory.
pub fn control_nonlinear(
    p: &ValidatedParams,
    g: &Grid,
    cfg: ControlConfig,
    init: &StatePair,
    target: &StatePair,
    opts: &NonlinearControlOptions,
) -> Result<NonlinearControl> {
    let (set, hum) = (&opts.picard, &opts.hum);
    set.check()?;
    let solver = CoupledSolver::new(p, g)?;
    let free = solver.forward(init, &BoundaryData::zeros(g.nt), None)?;
    let scale = x_norm(&target.sub(free.terminal()), p, g)?;
    let mut duhamel = StatePair::zeros(g.nx);
    let mut report = NonlinearControlReport {
        outer_iterations: 0,
        terminal_errors: Vec::new(),
        picard_iterations: Vec::new(),
        hum_iterations: Vec::new(),
        terminal_error: 0.0,
        relative_terminal_error: 0.0,
        last_hum: HumReport {
            cg_iterations: 0,
            cg_residual_history: vec![],
            terminal_error: 0.0,
            relative_terminal_error: 0.0,
            observability_margin: None,
            control_norms: vec![],
            removed_means: vec![],
        },
    };
    loop {
        let h = solve_hum(p, g, cfg, init, &target.add(&duhamel), hum)?;
        let nl = solve_nonlinear_with(&solver, init, &h.controls, set, None)?;
        let err = x_norm(&nl.trajectory.terminal().sub(target), p, g)?;
        let rel = if scale == 0.0 { err } else { err / scale };
        report.outer_iterations += 1;
        report.terminal_errors.push(rel);
        report.picard_iterations.push(nl.iterations);
        report.hum_iterations.push(h.report.cg_iterations);
        report.terminal_error = err;
        report.relative_terminal_error = rel;
        report.last_hum = h.report;
        if rel <= opts.tol || err == 0.0 {
            return Ok(NonlinearControl { controls: h.controls, trajectory: nl.trajectory, report });
        }
        if report.outer_iterations >= opts.maxit {
            return Err(Error::NoConvergence { iterations: report.outer_iterations, residual: rel });
        }
        duhamel = duhamel_endpoint_with(&solver, &nl.trajectory, set.form)?;
    }
}
