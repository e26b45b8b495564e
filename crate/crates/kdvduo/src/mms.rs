//! Manufactured solutions for convergence checks.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::diagonalization::solve_forward_via_diagonalization;
use crate::error::Result;
use crate::grid::Grid;
use crate::linear::{solve_airy_ibvp, CoupledSolver};
use crate::params::ValidatedParams;
use crate::state::{BoundaryData, SourcePair, StatePair, Trajectory};

/// Separable profile e^{-t} X(x) with X one of a few smooth shapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Profile {
    /// sin(2 pi x / L)
    Sine2,
    /// cos(pi x / L)
    Cosine,
    /// 1 + x/L - (x/L)^2 / 2, exercised by nonzero boundary curvature
    Quadratic,
}

/// Value, time derivative, first and third spatial derivatives.
#[derive(Debug, Clone, Copy)]
pub struct Jet {
    pub val: f64,
    pub t: f64,
    pub x: f64,
    pub xxx: f64,
    pub xx: f64,
}

impl Profile {
    pub fn jet(self, x: f64, t: f64, length: f64) -> Jet {
        let e = (-t).exp();
        let (f, f1, f2, f3) = match self {
            Profile::Sine2 => {
                let k = 2.0 * PI / length;
                let (s, c) = (k * x).sin_cos();
                (s, k * c, -k * k * s, -k * k * k * c)
            }
            Profile::Cosine => {
                let k = PI / length;
                let (s, c) = (k * x).sin_cos();
                (c, -k * s, -k * k * c, k * k * k * s)
            }
            Profile::Quadratic => {
                let y = x / length;
                (1.0 + y - 0.5 * y * y, (1.0 - y) / length, -1.0 / (length * length), 0.0)
            }
        };
        Jet { val: e * f, t: -e * f, x: e * f1, xx: e * f2, xxx: e * f3 }
    }
}

fn boundary_of(g: &Grid, pu: Profile, pv: Profile) -> BoundaryData {
    let l = g.length;
    let mut bd = BoundaryData::zeros(g.nt);
    for (n, t) in g.times().into_iter().enumerate() {
        bd.h0[n] = pu.jet(0.0, t, l).val;
        bd.h1[n] = pu.jet(l, t, l).val;
        bd.h2[n] = pu.jet(l, t, l).x;
        bd.g0[n] = pv.jet(0.0, t, l).val;
        bd.g1[n] = pv.jet(l, t, l).val;
        bd.g2[n] = pv.jet(l, t, l).x;
    }
    bd
}

fn max_error(traj: &Trajectory, g: &Grid, pu: Profile, pv: Option<Profile>) -> f64 {
    let x = g.nodes();
    let mut err = 0.0f64;
    for (n, s) in traj.slices.iter().enumerate() {
        let t = g.t(n);
        for (i, &xi) in x.iter().enumerate() {
            err = err.max((s.u[i] - pu.jet(xi, t, g.length).val).abs());
            if let Some(pv) = pv {
                err = err.max((s.v[i] - pv.jet(xi, t, g.length).val).abs());
            }
        }
    }
    err
}

/// Max-norm error of the scalar solver for u = e^{-t} X(x).
pub fn scalar_error(alpha: f64, g: &Grid, profile: Profile) -> Result<f64> {
    let l = g.length;
    let x = g.nodes();
    let u0: Vec<f64> = x.iter().map(|&x| profile.jet(x, 0.0, l).val).collect();
    let bd = boundary_of(g, profile, profile);
    let f: Vec<Vec<f64>> = g
        .times()
        .iter()
        .map(|&t| x.iter().map(|&x| {
            let j = profile.jet(x, t, l);
            j.t + alpha * j.xxx
        }).collect())
        .collect();
    let sol = solve_airy_ibvp(alpha, g, &u0, &bd.h0, &bd.h1, &bd.h2, Some(&f))?;
    let traj = Trajectory { slices: sol.slices.into_iter().map(|u| StatePair::new(u.clone(), u)).collect() };
    Ok(max_error(&traj, g, profile, None))
}

/// Exact data (initial state, boundary data, source) for a coupled manufactured solution.
pub fn coupled_problem(p: &ValidatedParams, g: &Grid, pu: Profile, pv: Profile) -> (StatePair, BoundaryData, SourcePair) {
    let l = g.length;
    let (a, b, c, r) = (p.a, p.b, p.c, p.r);
    let init = StatePair::from_fn(g, |x| pu.jet(x, 0.0, l).val, |x| pv.jet(x, 0.0, l).val);
    let src = SourcePair::from_fn(
        g,
        |x, t| {
            let (ju, jv) = (pu.jet(x, t, l), pv.jet(x, t, l));
            ju.t + ju.xxx + a * jv.xxx
        },
        |x, t| {
            let (ju, jv) = (pu.jet(x, t, l), pv.jet(x, t, l));
            jv.t + r / c * jv.x + a * b / c * ju.xxx + jv.xxx / c
        },
    );
    (init, boundary_of(g, pu, pv), src)
}

pub fn coupled_error(p: &ValidatedParams, g: &Grid, pu: Profile, pv: Profile) -> Result<f64> {
    let (init, bd, src) = coupled_problem(p, g, pu, pv);
    let traj = CoupledSolver::new(p, g)?.forward(&init, &bd, Some(&src))?;
    Ok(max_error(&traj, g, pu, Some(pv)))
}

pub fn coupled_error_diagonal(p: &ValidatedParams, g: &Grid, pu: Profile, pv: Profile) -> Result<f64> {
    let (init, bd, src) = coupled_problem(p, g, pu, pv);
    let sol = solve_forward_via_diagonalization(p, g, &init, &bd, Some(&src))?;
    Ok(max_error(&sol.trajectory, g, pu, Some(pv)))
}

/// Observed orders log(e_k / e_{k+1}) / log(dx_k / dx_{k+1}).
pub fn observed_orders(errors: &[f64], spacings: &[f64]) -> Vec<f64> {
    errors
        .windows(2)
        .zip(spacings.windows(2))
        .map(|(e, h)| (e[0] / e[1]).ln() / (h[0] / h[1]).ln())
        .collect()
}
