//! Gramian-based control synthesis and observability diagnostics.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::linear::CoupledSolver;
use crate::norms::{pairing, time_l2, x_norm};
use crate::params::ValidatedParams;
use crate::state::{BoundaryData, Channel, End, StatePair, TraceSet, Trajectory};
use crate::time_sobolev::{fractional_time_operator, mean_free, sobolev_norm, SobolevMode, SobolevSpec};

/// Which boundary channels carry controls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ControlConfig {
    /// h2, g0, g1, g2
    FourControl,
    /// h2
    OneControl,
    /// h1, g1, h2, g2
    AltMOP,
    /// h0, h1, h2, g2
    AltB,
    /// g2
    AltG2,
}

impl ControlConfig {
    pub const ALL: [ControlConfig; 5] =
        [Self::FourControl, Self::OneControl, Self::AltMOP, Self::AltB, Self::AltG2];

    pub fn active(self) -> &'static [Channel] {
        use Channel::*;
        match self {
            Self::FourControl => &[H2, G0, G1, G2],
            Self::OneControl => &[H2],
            Self::AltMOP => &[H1, G1, H2, G2],
            Self::AltB => &[H0, H1, H2, G2],
            Self::AltG2 => &[G2],
        }
    }

    pub fn is_active(self, ch: Channel) -> bool {
        self.active().contains(&ch)
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::FourControl => "FourControl",
            Self::OneControl => "OneControl",
            Self::AltMOP => "AltMOP",
            Self::AltB => "AltB",
            Self::AltG2 => "AltG2",
        }
    }
}

impl std::str::FromStr for ControlConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown control configuration {s:?}")))
    }
}

/// Adjoint trace combinations that multiply each boundary channel in the duality identity.
pub fn trace_densities(traces: &TraceSet, p: &ValidatedParams) -> Result<BoundaryData> {
    if traces.is_empty() {
        return Err(Error::MissingTrace("empty trace set".into()));
    }
    traces.check(traces.len() - 1)?;
    let (a, k, ic) = (p.a, p.a * p.b / p.c, 1.0 / p.c);
    let combo = |d: usize, end: End, wu: f64, wv: f64, sign: f64| -> Vec<f64> {
        traces.u(d, end).iter().zip(traces.v(d, end)).map(|(u, v)| sign * (wu * u + wv * v)).collect()
    };
    Ok(BoundaryData {
        h0: combo(2, End::Left, 1.0, k, 1.0),
        h1: combo(2, End::Right, 1.0, k, -1.0),
        h2: combo(1, End::Right, 1.0, k, 1.0),
        g0: combo(2, End::Left, a, ic, 1.0),
        g1: combo(2, End::Right, a, ic, -1.0),
        g2: combo(1, End::Right, a, ic, 1.0),
    })
}

/// Applies the time smoothing of each active channel to trace densities.
pub fn controls_from_densities(d: &BoundaryData, cfg: ControlConfig, horizon: f64) -> Result<BoundaryData> {
    let spec = SobolevSpec::new(-1.0 / 3.0, horizon, SobolevMode::Homogeneous)?;
    let mut out = BoundaryData::zeros(d.len() - 1);
    for &ch in cfg.active() {
        let src = d.channel(ch);
        *out.channel_mut(ch) = if ch.is_dirichlet() {
            fractional_time_operator(src, -1.0 / 3.0, &spec)?
        } else {
            src.clone()
        };
    }
    Ok(out)
}

/// Control synthesis from adjoint traces.
pub fn control_formulas(traces: &TraceSet, cfg: ControlConfig, p: &ValidatedParams, horizon: f64) -> Result<BoundaryData> {
    controls_from_densities(&trace_densities(traces, p)?, cfg, horizon)
}

/// Gramian z -> terminal state driven from rest by the controls synthesised from z.
#[derive(Debug, Clone)]
pub struct Gramian {
    solver: CoupledSolver,
    cfg: ControlConfig,
    tikhonov: f64,
}

impl Gramian {
    pub fn new(p: &ValidatedParams, g: &Grid, cfg: ControlConfig) -> Result<Self> {
        Ok(Self { solver: CoupledSolver::new(p, g)?, cfg, tikhonov: 0.0 })
    }

    pub fn with_tikhonov(mut self, eps: f64) -> Self {
        self.tikhonov = eps;
        self
    }

    pub fn solver(&self) -> &CoupledSolver {
        &self.solver
    }

    pub fn config(&self) -> ControlConfig {
        self.cfg
    }

    pub fn controls(&self, z: &StatePair) -> Result<BoundaryData> {
        let adj = self.solver.transpose(z)?;
        controls_from_densities(&adj.densities, self.cfg, self.solver.grid().horizon)
    }

    pub fn apply(&self, z: &StatePair) -> Result<StatePair> {
        let g = self.solver.grid();
        let bd = self.controls(z)?;
        let traj = self.solver.forward(&StatePair::zeros(g.nx), &bd, None)?;
        let out = traj.terminal().clone();
        Ok(if self.tikhonov != 0.0 { out.add(&z.scaled(self.tikhonov)) } else { out })
    }
}

pub fn gramian_apply(p: &ValidatedParams, g: &Grid, cfg: ControlConfig, z: &StatePair) -> Result<StatePair> {
    Gramian::new(p, g, cfg)?.apply(z)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HumOptions {
    pub tol: f64,
    pub maxit: usize,
    pub tikhonov: f64,
    /// sine modes per component for the margin estimate; 0 skips it
    pub margin_modes: usize,
}

impl Default for HumOptions {
    fn default() -> Self {
        Self { tol: 1e-3, maxit: 300, tikhonov: 0.0, margin_modes: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HumReport {
    pub cg_iterations: usize,
    /// relative X-norm residual per iteration, starting at 1
    pub cg_residual_history: Vec<f64>,
    /// X-norm of terminal state minus target, from a forward replay
    pub terminal_error: f64,
    pub relative_terminal_error: f64,
    pub observability_margin: Option<f64>,
    /// H^{1/3} for Dirichlet channels, L^2 for Neumann channels
    pub control_norms: Vec<(String, f64)>,
    /// periodic mean of the Dirichlet densities removed by the smoothing
    pub removed_means: Vec<(String, f64)>,
}

/// Conjugate residual iteration for a symmetric operator in the trapezoid pairing.
/// Stops when the relative X-norm of the residual falls below `tol`.
pub fn conjugate_residual(
    apply: impl Fn(&StatePair) -> Result<StatePair>,
    rhs: &StatePair,
    p: &ValidatedParams,
    g: &Grid,
    tol: f64,
    maxit: usize,
) -> Result<(StatePair, Vec<f64>)> {
    let dot = |a: &StatePair, b: &StatePair| pairing(a, b, g);
    let b_norm = x_norm(rhs, p, g)?;
    let mut x = StatePair::zeros(g.nx);
    let mut history = vec![if b_norm == 0.0 { 0.0 } else { 1.0 }];
    if b_norm == 0.0 {
        return Ok((x, history));
    }
    let mut r = rhs.clone();
    let mut ar = apply(&r)?;
    let mut dir = r.clone();
    let mut a_dir = ar.clone();
    let mut rar = dot(&r, &ar)?;
    for _ in 0..maxit {
        let denom = dot(&a_dir, &a_dir)?;
        if denom == 0.0 || !denom.is_finite() {
            break;
        }
        let alpha = rar / denom;
        x = x.add(&dir.scaled(alpha));
        r = r.sub(&a_dir.scaled(alpha));
        let rel = x_norm(&r, p, g)? / b_norm;
        history.push(rel);
        if rel <= tol {
            return Ok((x, history));
        }
        ar = apply(&r)?;
        let rar_new = dot(&r, &ar)?;
        let beta = rar_new / rar;
        rar = rar_new;
        dir = r.add(&dir.scaled(beta));
        a_dir = ar.add(&a_dir.scaled(beta));
    }
    let residual = *history.last().expect("history is nonempty");
    Err(Error::NoConvergence { iterations: history.len() - 1, residual })
}

/// Result of a successful HUM solve.
#[derive(Debug, Clone)]
pub struct HumSolution {
    pub controls: BoundaryData,
    pub trajectory: Trajectory,
    pub report: HumReport,
    /// adjoint final data solving the Gramian equation
    pub adjoint_final: StatePair,
}

pub fn solve_hum(
    p: &ValidatedParams,
    g: &Grid,
    cfg: ControlConfig,
    init: &StatePair,
    target: &StatePair,
    opts: &HumOptions,
) -> Result<HumSolution> {
    if !(opts.tol > 0.0) {
        return Err(Error::Config(format!("tol must be positive (got {})", opts.tol)));
    }
    init.check(g.nx)?;
    target.check(g.nx)?;
    let gram = Gramian::new(p, g, cfg)?.with_tikhonov(opts.tikhonov);
    let free = gram.solver().forward(init, &BoundaryData::zeros(g.nt), None)?;
    let rhs = target.sub(free.terminal());
    let (z, history) = conjugate_residual(|z| gram.apply(z), &rhs, p, g, opts.tol, opts.maxit)?;
    finish(p, g, &gram, init, target, &rhs, z, history, opts)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    p: &ValidatedParams,
    g: &Grid,
    gram: &Gramian,
    init: &StatePair,
    target: &StatePair,
    rhs: &StatePair,
    z: StatePair,
    history: Vec<f64>,
    opts: &HumOptions,
) -> Result<HumSolution> {
    let controls = gram.controls(&z)?;
    let trajectory = gram.solver().forward(init, &controls, None)?;
    let terminal_error = x_norm(&trajectory.terminal().sub(target), p, g)?;
    let rhs_norm = x_norm(rhs, p, g)?;
    let relative_terminal_error = if rhs_norm == 0.0 { terminal_error } else { terminal_error / rhs_norm };
    let observability_margin = if opts.margin_modes > 0 {
        Some(margin_of(gram, g, opts.margin_modes)?.0)
    } else {
        None
    };
    let spec = SobolevSpec::new(1.0 / 3.0, g.horizon, SobolevMode::Inhomogeneous)?;
    let mut control_norms = Vec::new();
    for &ch in gram.config().active() {
        let s = controls.channel(ch);
        let n = if ch.is_dirichlet() { sobolev_norm(s, &spec)? } else { time_l2(s, g) };
        control_norms.push((ch.name().to_string(), n));
    }
    let densities = gram.solver().transpose(&z)?.densities;
    let mut removed_means = Vec::new();
    for &ch in gram.config().active().iter().filter(|c| c.is_dirichlet()) {
        let d = densities.channel(ch);
        let mf = mean_free(d)?;
        removed_means.push((ch.name().to_string(), d[1] - mf[1]));
    }
    let report = HumReport {
        cg_iterations: history.len() - 1,
        cg_residual_history: history,
        terminal_error,
        relative_terminal_error,
        observability_margin,
        control_norms,
        removed_means,
    };
    Ok(HumSolution { controls, trajectory, report, adjoint_final: z })
}

/// Sine modes sin(j pi x / L) for each component, j = 1..=modes.
pub fn probe_basis(g: &Grid, modes: usize) -> Vec<StatePair> {
    let zero = |_: f64| 0.0;
    let mut out = Vec::with_capacity(2 * modes);
    for j in 1..=modes {
        let f = move |x: f64| (j as f64 * PI * x / g.length).sin();
        out.push(StatePair::from_fn(g, f, zero));
        out.push(StatePair::from_fn(g, zero, f));
    }
    out
}

/// Smallest Rayleigh-Ritz value of the Gramian on the sine subspace, with its Ritz vector.
fn margin_of(gram: &Gramian, g: &Grid, modes: usize) -> Result<(f64, StatePair)> {
    let basis = probe_basis(g, modes);
    let images: Vec<StatePair> = basis.iter().map(|v| gram.apply(v)).collect::<Result<_>>()?;
    let k = basis.len();
    let mut gm = DMatrix::<f64>::zeros(k, k);
    let mut mm = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            gm[(i, j)] = pairing(&basis[i], &images[j], g)?;
            mm[(i, j)] = pairing(&basis[i], &basis[j], g)?;
        }
    }
    let gm = (&gm + gm.transpose()) * 0.5;
    // M = L L^T, reduce to the standard problem L^-1 G L^-T
    let chol = mm.cholesky().ok_or_else(|| Error::Config("probe basis is degenerate".into()))?;
    let l = chol.l();
    let linv = l.clone().try_inverse().ok_or_else(|| Error::Config("probe basis is degenerate".into()))?;
    let reduced = &linv * gm * linv.transpose();
    let eig = reduced.symmetric_eigen();
    let (imin, &lmin) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("basis is nonempty");
    let coeffs = linv.transpose() * eig.eigenvectors.column(imin);
    let mut vec = StatePair::zeros(g.nx);
    for (c, b) in coeffs.iter().zip(&basis) {
        vec = vec.add(&b.scaled(*c));
    }
    Ok((lmin, vec))
}

/// Smallest eigenvalue of the Gramian restricted to `modes` sine modes per component.
pub fn observability_margin(p: &ValidatedParams, g: &Grid, cfg: ControlConfig, modes: usize) -> Result<f64> {
    Ok(margin_of(&Gramian::new(p, g, cfg)?, g, modes.max(1))?.0)
}

/// Margin together with the minimising final state.
pub fn observability_margin_with_vector(
    p: &ValidatedParams,
    g: &Grid,
    cfg: ControlConfig,
    modes: usize,
) -> Result<(f64, StatePair)> {
    margin_of(&Gramian::new(p, g, cfg)?, g, modes.max(1))
}

/// Sufficient smallness condition for the single-control case: L < min(b,c) T / (max(b,c) beta C_T).
pub fn check_one_control_condition(p: &ValidatedParams, length: f64, horizon: f64, beta_hat: f64, c_t_hat: f64) -> (bool, f64) {
    let bound = p.b.min(p.c) * horizon / (p.b.max(p.c) * beta_hat * c_t_hat);
    (length < bound, bound)
}

/// Largest ratio of boundary-trace size (all six densities in L^2(0,T)) to X-norm over sine probes.
pub fn trace_constant_estimate(p: &ValidatedParams, g: &Grid, modes: usize) -> Result<f64> {
    let solver = CoupledSolver::new(p, g)?;
    let mut best = 0.0f64;
    for z in probe_basis(g, modes.max(1)) {
        let d = solver.transpose(&z)?.densities;
        let sq: f64 = Channel::ALL.iter().map(|&c| time_l2(d.channel(c), g).powi(2)).sum();
        best = best.max(sq.sqrt() / x_norm(&z, p, g)?);
    }
    Ok(best)
}

/// Spearman rank correlation (average ranks for ties).
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0 + 1.0;
            for &k in &idx[i..=j] {
                r[k] = avg;
            }
            i = j + 1;
        }
        r
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    if vx == 0.0 || vy == 0.0 { 0.0 } else { cov / (vx * vy).sqrt() }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn condition_arithmetic() {
        let p = crate::params::SystemParams::new(0.0, 1.0, 2.0, 0.0).validate().unwrap();
        let (ok, bound) = check_one_control_condition(&p, 0.5, 20.0, 2.0, 5.0);
        assert!(ok && (bound - 1.0).abs() < 1e-15);
        assert!(!check_one_control_condition(&p, 2.0, 20.0, 2.0, 5.0).0);
        assert!(check_one_control_condition(&p, 0.0, 20.0, 2.0, 5.0).0);
    }

    #[test]
    fn spearman_basics() {
        assert!((spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]) - 1.0).abs() < 1e-15);
        assert!((spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn parse_config() {
        assert_eq!("fourcontrol".parse::<ControlConfig>().unwrap(), ControlConfig::FourControl);
        assert!("five".parse::<ControlConfig>().is_err());
    }
}
