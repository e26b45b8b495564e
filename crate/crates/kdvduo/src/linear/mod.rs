//! Forward, adjoint and scalar Airy solvers plus trace extraction.

pub mod engine;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, MIN_NX};
use crate::params::ValidatedParams;
use crate::state::{BoundaryData, SourcePair, StatePair, TraceSet, Trajectory};
use crate::stencil::{DXX_LEFT, DXX_RIGHT, DX_LEFT, DX_RIGHT};
pub use engine::{EdgeValues, StepOperator, TransposeSweep};

/// Scalar trajectory with its traces `[k][end]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarSolution {
    pub slices: Vec<Vec<f64>>,
    pub traces: [[Vec<f64>; 2]; 3],
}

/// Solves u_t + alpha u_xxx = f with u(0)=h0, u(L)=h1, u_x(L)=h2.
pub fn solve_airy_ibvp(
    alpha: f64,
    g: &Grid,
    u0: &[f64],
    h0: &[f64],
    h1: &[f64],
    h2: &[f64],
    f: Option<&[Vec<f64>]>,
) -> Result<ScalarSolution> {
    if alpha == 0.0 || !alpha.is_finite() {
        return Err(Error::InvalidParams(format!("alpha must be nonzero and finite (got {alpha})")));
    }
    g.check()?;
    if u0.len() != g.nx {
        return Err(Error::DimensionMismatch { expected: g.nx, got: u0.len() });
    }
    for h in [h0, h1, h2] {
        if h.len() != g.nt + 1 {
            return Err(Error::DimensionMismatch { expected: g.nt + 1, got: h.len() });
        }
    }
    if let Some(f) = f {
        if f.len() != g.nt + 1 {
            return Err(Error::DimensionMismatch { expected: g.nt + 1, got: f.len() });
        }
        if let Some(row) = f.iter().find(|r| r.len() != g.nx) {
            return Err(Error::DimensionMismatch { expected: g.nx, got: row.len() });
        }
    }
    let op = StepOperator::new(g, &[vec![alpha]], &[0.0])?;
    let src = f.map(|f| move |n: usize| f[n].clone());
    let slices = op.march(
        u0,
        |n| vec![[h0[n], h1[n], h2[n]]],
        src.as_ref().map(|s| s as &dyn Fn(usize) -> Vec<f64>),
    )?;
    let traces = scalar_traces(&slices, g.dx());
    Ok(ScalarSolution { slices, traces })
}

/// Roots of s + a lambda^3 = 0 with s = i a rho^3 L^3.
pub fn cubic_characteristic_roots(_a_coef: f64, length: f64, rho: f64) -> [Complex64; 3] {
    let i = Complex64::i();
    let base = i * length * rho;
    let w = Complex64::new(1.0, 3f64.sqrt()) / 2.0;
    let w_bar = Complex64::new(1.0, -3f64.sqrt()) / 2.0;
    [base, -base * w, -base * w_bar]
}

/// Coupled linear solver with a cached step factorization.
#[derive(Debug, Clone)]
pub struct CoupledSolver {
    params: ValidatedParams,
    grid: Grid,
    op: StepOperator,
}

impl CoupledSolver {
    pub fn new(p: &ValidatedParams, g: &Grid) -> Result<Self> {
        let b = p.dispersion();
        let disp: Vec<Vec<f64>> = b.iter().map(|r| r.to_vec()).collect();
        let op = StepOperator::new(g, &disp, &[0.0, p.r / p.c])?;
        Ok(Self { params: *p, grid: *g, op })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn params(&self) -> &ValidatedParams {
        &self.params
    }

    pub fn forward(&self, init: &StatePair, bd: &BoundaryData, src: Option<&SourcePair>) -> Result<Trajectory> {
        let g = &self.grid;
        init.check(g.nx)?;
        bd.check(g.nt)?;
        if let Some(s) = src {
            s.check(g)?;
        }
        let source = src.filter(|s| !s.is_zero()).map(|s| {
            move |n: usize| s.f[n].iter().zip(&s.s[n]).flat_map(|(&a, &b)| [a, b]).collect::<Vec<f64>>()
        });
        let raw = self.op.march(
            &init.interleaved(),
            |n| edge_values(bd, n),
            source.as_ref().map(|s| s as &dyn Fn(usize) -> Vec<f64>),
        )?;
        Ok(Trajectory { slices: raw.iter().map(|x| StatePair::from_interleaved(x)).collect() })
    }

    /// Exact transpose of `forward` for J = pairing(terminal, z).
    pub fn transpose(&self, z: &StatePair) -> Result<TransposeAdjoint> {
        let g = &self.grid;
        z.check(g.nx)?;
        let h = self.op.weights();
        let weighted = StatePair::new(
            z.u.iter().zip(h).map(|(a, w)| a * w).collect(),
            z.v.iter().zip(h).map(|(a, w)| a * w).collect(),
        );
        let sweep = self.op.sweep_transpose(&weighted.interleaved());
        let slices = sweep
            .lambda
            .iter()
            .map(|l| {
                let s = StatePair::from_interleaved(l);
                StatePair::new(
                    s.u.iter().zip(h).map(|(a, w)| a / w).collect(),
                    s.v.iter().zip(h).map(|(a, w)| a / w).collect(),
                )
            })
            .collect();
        let mut sens = BoundaryData::zeros(g.nt);
        for (n, e) in sweep.edge.iter().enumerate() {
            sens.h0[n] = e[0][0];
            sens.h1[n] = e[0][1];
            sens.h2[n] = e[0][2];
            sens.g0[n] = e[1][0];
            sens.g1[n] = e[1][1];
            sens.g2[n] = e[1][2];
        }
        let tw = g.time_weights();
        let mut density = BoundaryData::zeros(g.nt);
        for ch in crate::state::Channel::ALL {
            let src = sens.channel(ch).clone();
            let dst = density.channel_mut(ch);
            for n in 1..=g.nt {
                dst[n] = src[n] / tw[n];
            }
        }
        let traces = traces_from_density(&density, &self.params);
        Ok(TransposeAdjoint { trajectory: Trajectory { slices }, sensitivities: sens, densities: density, traces })
    }
}

/// Result of the discrete-transpose adjoint.
#[derive(Debug, Clone)]
pub struct TransposeAdjoint {
    /// adjoint states (phi, psi) on the nodes, final slice equal to z
    pub trajectory: Trajectory,
    /// dJ/d(boundary value) at every time node
    pub sensitivities: BoundaryData,
    /// sensitivities divided by the trapezoid time weights (zero at t = 0)
    pub densities: BoundaryData,
    pub traces: TraceSet,
}

fn edge_values(bd: &BoundaryData, n: usize) -> Vec<EdgeValues> {
    vec![[bd.h0[n], bd.h1[n], bd.h2[n]], [bd.g0[n], bd.g1[n], bd.g2[n]]]
}

/// Recovers phi, psi derivative traces from the channel densities of the adjoint.
fn traces_from_density(d: &BoundaryData, p: &ValidatedParams) -> TraceSet {
    // [[1, ab/c], [a, 1/c]] maps (phi, psi) derivatives to (h, g) densities
    let (m11, m12, m21, m22) = (1.0, p.a * p.b / p.c, p.a, 1.0 / p.c);
    let det = m11 * m22 - m12 * m21;
    let solve = |x: f64, y: f64| ((m22 * x - m12 * y) / det, (m11 * y - m21 * x) / det);
    let mut t = TraceSet::zeros(d.len() - 1);
    for n in 0..d.len() {
        let (a, b) = solve(d.h0[n], d.g0[n]);
        t.u[2][0][n] = a;
        t.v[2][0][n] = b;
        let (a, b) = solve(-d.h1[n], -d.g1[n]);
        t.u[2][1][n] = a;
        t.v[2][1][n] = b;
        let (a, b) = solve(d.h2[n], d.g2[n]);
        t.u[1][1][n] = a;
        t.v[1][1][n] = b;
    }
    t
}

/// Monolithic Crank-Nicolson solve of the coupled linear system.
pub fn solve_forward_linear(
    p: &ValidatedParams,
    g: &Grid,
    init: &StatePair,
    bd: &BoundaryData,
    src: Option<&SourcePair>,
) -> Result<(Trajectory, TraceSet)> {
    let traj = CoupledSolver::new(p, g)?.forward(init, bd, src)?;
    let traces = extract_traces(&traj, g)?;
    Ok((traj, traces))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AdjointMode {
    /// reflected forward solve with transposed coefficients
    Pde,
    /// exact transpose of the forward step
    Transpose,
}

/// Adjoint system solved backward from (phi, psi)(T) = final.
pub fn solve_adjoint(
    p: &ValidatedParams,
    g: &Grid,
    final_state: &StatePair,
    mode: AdjointMode,
) -> Result<(Trajectory, TraceSet)> {
    final_state.check(g.nx)?;
    match mode {
        AdjointMode::Transpose => {
            let adj = CoupledSolver::new(p, g)?.transpose(final_state)?;
            Ok((adj.trajectory, adj.traces))
        }
        AdjointMode::Pde => {
            let q = p.transposed();
            let rev = |s: &StatePair| {
                StatePair::new(s.u.iter().rev().copied().collect(), s.v.iter().rev().copied().collect())
            };
            let (traj, _) = solve_forward_linear(&q, g, &rev(final_state), &BoundaryData::zeros(g.nt), None)?;
            let slices: Vec<StatePair> = traj.slices.iter().rev().map(rev).collect();
            let traj = Trajectory { slices };
            let traces = extract_traces(&traj, g)?;
            Ok((traj, traces))
        }
    }
}

fn scalar_traces(slices: &[Vec<f64>], dx: f64) -> [[Vec<f64>; 2]; 3] {
    let nx = slices[0].len();
    let dot = |w: &[f64], x: &[f64]| w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    let mut out: [[Vec<f64>; 2]; 3] = Default::default();
    for s in slices {
        out[0][0].push(s[0]);
        out[0][1].push(s[nx - 1]);
        out[1][0].push(dot(&DX_LEFT, &s[..3]) / dx);
        out[1][1].push(dot(&DX_RIGHT, &s[nx - 3..]) / dx);
        out[2][0].push(dot(&DXX_LEFT, &s[..4]) / (dx * dx));
        out[2][1].push(dot(&DXX_RIGHT, &s[nx - 4..]) / (dx * dx));
    }
    out
}

/// One-sided second-order boundary derivatives of every slice.
pub fn extract_traces(traj: &Trajectory, g: &Grid) -> Result<TraceSet> {
    if g.nx < MIN_NX {
        return Err(Error::GridTooCoarse { nx: g.nx, min: MIN_NX });
    }
    for s in &traj.slices {
        s.check(g.nx)?;
    }
    let us: Vec<Vec<f64>> = traj.slices.iter().map(|s| s.u.clone()).collect();
    let vs: Vec<Vec<f64>> = traj.slices.iter().map(|s| s.v.clone()).collect();
    Ok(TraceSet { u: scalar_traces(&us, g.dx()), v: scalar_traces(&vs, g.dx()) })
}

/// Euclidean pairing of boundary data with sensitivities.
pub fn boundary_pairing(sens: &BoundaryData, bd: &BoundaryData) -> f64 {
    crate::state::Channel::ALL
        .iter()
        .map(|&c| sens.channel(c).iter().zip(bd.channel(c)).map(|(a, b)| a * b).sum::<f64>())
        .sum()
}

/// Relative defect of the identity <Forward(init, bd), z> = <init, Adjoint z> + boundary terms,
/// normalised by the sum of absolute contributions.
pub fn transpose_defect(solver: &CoupledSolver, init: &StatePair, bd: &BoundaryData, z: &StatePair) -> Result<f64> {
    let g = solver.grid();
    let traj = solver.forward(init, bd, None)?;
    let adj = solver.transpose(z)?;
    let h = g.space_weights();
    let lhs_terms: Vec<f64> = (0..g.nx)
        .flat_map(|i| [h[i] * traj.terminal().u[i] * z.u[i], h[i] * traj.terminal().v[i] * z.v[i]])
        .collect();
    let phi0 = adj.trajectory.initial();
    let mut rhs_terms: Vec<f64> = (0..g.nx)
        .flat_map(|i| [h[i] * phi0.u[i] * init.u[i], h[i] * phi0.v[i] * init.v[i]])
        .collect();
    for c in crate::state::Channel::ALL {
        rhs_terms.extend(adj.sensitivities.channel(c).iter().zip(bd.channel(c)).map(|(a, b)| a * b));
    }
    let lhs: f64 = lhs_terms.iter().sum();
    let rhs: f64 = rhs_terms.iter().sum();
    let scale: f64 = lhs_terms.iter().chain(&rhs_terms).map(|x| x.abs()).sum();
    Ok(if scale == 0.0 { 0.0 } else { (lhs - rhs).abs() / scale })
}
