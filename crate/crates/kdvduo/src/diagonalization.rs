//! Eigen-decoupling of the dispersion matrix.

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::linear::{extract_traces, StepOperator};
use crate::params::ValidatedParams;
use crate::state::{BoundaryData, SourcePair, StatePair, TraceSet, Trajectory};
use crate::stencil::d1_row;

/// Picard tolerance and cap for the transport source.
pub const PICARD_TOL: f64 = 1e-10;
pub const PICARD_MAX: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecoupledParams {
    pub lambda: f64,
    pub alpha_plus: f64,
    pub alpha_minus: f64,
    /// columns are eigenvectors for (alpha_plus, alpha_minus)
    pub m: [[f64; 2]; 2],
    pub m_inv: [[f64; 2]; 2],
}

impl DecoupledParams {
    pub fn coefficients(&self) -> [f64; 2] {
        [self.alpha_plus, self.alpha_minus]
    }

    fn apply(mat: &[[f64; 2]; 2], x: f64, y: f64) -> (f64, f64) {
        (mat[0][0] * x + mat[0][1] * y, mat[1][0] * x + mat[1][1] * y)
    }
}

pub fn compute_decoupling(p: &ValidatedParams) -> Result<DecoupledParams> {
    let (a, b, c) = (p.a, p.b, p.c);
    let lambda = ((1.0 / c - 1.0).powi(2) + 4.0 * a * a * b / c).sqrt();
    let tr = 1.0 + 1.0 / c;
    if a == 0.0 {
        let (alpha_plus, alpha_minus) = (1.0, 1.0 / c);
        let id = [[1.0, 0.0], [0.0, 1.0]];
        return Ok(DecoupledParams { lambda, alpha_plus, alpha_minus, m: id, m_inv: id });
    }
    let alpha_plus = (tr + lambda) / 2.0;
    let alpha_minus = (tr - lambda) / 2.0;
    let m = Matrix2::new(2.0 * a, 2.0 * a, (1.0 / c - 1.0) + lambda, (1.0 / c - 1.0) - lambda);
    let det = m.determinant();
    let norm2 = m.norm_squared();
    if det.abs() < 1e-12 * norm2 {
        return Err(Error::DegenerateTransform { det });
    }
    let inv = m.try_inverse().ok_or(Error::DegenerateTransform { det })?;

    let bm = Matrix2::new(1.0, a, a * b / c, 1.0 / c);
    let mut eig: Vec<f64> = bm.complex_eigenvalues().iter().map(|z| z.re).collect();
    eig.sort_by(|x, y| y.total_cmp(x));
    debug_assert!((eig[0] - alpha_plus).abs() <= 1e-9 * tr && (eig[1] - alpha_minus).abs() <= 1e-9 * tr);

    let to_arr = |q: &Matrix2<f64>| [[q[(0, 0)], q[(0, 1)]], [q[(1, 0)], q[(1, 1)]]];
    Ok(DecoupledParams { lambda, alpha_plus, alpha_minus, m: to_arr(&m), m_inv: to_arr(&inv) })
}

/// Relative deviation of M^-1 B M from diag(alpha_plus, alpha_minus).
pub fn conjugation_defect(p: &ValidatedParams, d: &DecoupledParams) -> f64 {
    let bm = Matrix2::new(1.0, p.a, p.a * p.b / p.c, 1.0 / p.c);
    let m = Matrix2::new(d.m[0][0], d.m[0][1], d.m[1][0], d.m[1][1]);
    let mi = Matrix2::new(d.m_inv[0][0], d.m_inv[0][1], d.m_inv[1][0], d.m_inv[1][1]);
    let r = mi * bm * m - Matrix2::new(d.alpha_plus, 0.0, 0.0, d.alpha_minus);
    r.norm() / bm.norm()
}

fn map_pair(mat: &[[f64; 2]; 2], u: &[f64], v: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch { expected: u.len(), got: v.len() });
    }
    Ok(u.iter().zip(v).map(|(&x, &y)| DecoupledParams::apply(mat, x, y)).unzip())
}

pub fn to_diagonal(s: &StatePair, d: &DecoupledParams) -> Result<StatePair> {
    let (u, v) = map_pair(&d.m_inv, &s.u, &s.v)?;
    Ok(StatePair { u, v })
}

pub fn from_diagonal(s: &StatePair, d: &DecoupledParams) -> Result<StatePair> {
    let (u, v) = map_pair(&d.m, &s.u, &s.v)?;
    Ok(StatePair { u, v })
}

/// Maps each (h_i, g_i) pair and the sources (f, s) into decoupled variables.
pub fn transform_boundary_and_sources(
    bd: &BoundaryData,
    src: &SourcePair,
    d: &DecoupledParams,
) -> Result<(BoundaryData, SourcePair)> {
    let (h0, g0) = map_pair(&d.m_inv, &bd.h0, &bd.g0)?;
    let (h1, g1) = map_pair(&d.m_inv, &bd.h1, &bd.g1)?;
    let (h2, g2) = map_pair(&d.m_inv, &bd.h2, &bd.g2)?;
    if src.f.len() != src.s.len() {
        return Err(Error::DimensionMismatch { expected: src.f.len(), got: src.s.len() });
    }
    let (f, s) = src
        .f
        .iter()
        .zip(&src.s)
        .map(|(f, s)| map_pair(&d.m_inv, f, s))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .unzip();
    Ok((BoundaryData { h0, h1, h2, g0, g1, g2 }, SourcePair { f, s }))
}

/// Outcome of the decoupled solve.
#[derive(Debug, Clone)]
pub struct DiagonalSolve {
    pub trajectory: Trajectory,
    pub traces: TraceSet,
    pub iterations: usize,
    pub residual: f64,
}

/// Solves the coupled system as two scalar equations, carrying -(r/c) v_x as a lagged source.
pub fn solve_forward_via_diagonalization(
    p: &ValidatedParams,
    g: &Grid,
    init: &StatePair,
    bd: &BoundaryData,
    src: Option<&SourcePair>,
) -> Result<DiagonalSolve> {
    init.check(g.nx)?;
    bd.check(g.nt)?;
    let zero_src;
    let src = match src {
        Some(s) => {
            s.check(g)?;
            s
        }
        None => {
            zero_src = SourcePair::zeros(g);
            &zero_src
        }
    };
    let d = compute_decoupling(p)?;
    let ops = [
        StepOperator::new(g, &[vec![d.alpha_plus]], &[0.0])?,
        StepOperator::new(g, &[vec![d.alpha_minus]], &[0.0])?,
    ];
    let w0 = to_diagonal(init, &d)?;
    let (tbd, tsrc) = transform_boundary_and_sources(bd, src, &d)?;
    let transport = p.r / p.c;
    let dx = g.dx();

    let solve = |extra: Option<&Vec<Vec<f64>>>| -> Result<Trajectory> {
        // extra[n] is the physical v_x at time node n
        let comp = |k: usize| -> Result<Vec<Vec<f64>>> {
            let init = if k == 0 { &w0.u } else { &w0.v };
            let base = if k == 0 { &tsrc.f } else { &tsrc.s };
            let source = |n: usize| -> Vec<f64> {
                let mut s = base[n].clone();
                if let Some(vx) = extra {
                    // physical source (0, -(r/c) v_x) mapped by M^-1
                    for (si, &q) in s.iter_mut().zip(&vx[n]) {
                        *si -= d.m_inv[k][1] * transport * q;
                    }
                }
                s
            };
            let edges = |n: usize| {
                if k == 0 { vec![[tbd.h0[n], tbd.h1[n], tbd.h2[n]]] } else { vec![[tbd.g0[n], tbd.g1[n], tbd.g2[n]]] }
            };
            ops[k].march(init, edges, Some(&source))
        };
        let (wu, wv) = (comp(0)?, comp(1)?);
        let slices = wu
            .into_iter()
            .zip(wv)
            .map(|(u, v)| from_diagonal(&StatePair { u, v }, &d))
            .collect::<Result<Vec<_>>>()?;
        Ok(Trajectory { slices })
    };

    let mut traj = solve(None)?;
    let mut iterations = 1;
    let mut residual = 0.0;
    if transport != 0.0 {
        loop {
            let vx: Vec<Vec<f64>> = traj.slices.iter().map(|s| d1_apply(&s.v, dx)).collect();
            let next = solve(Some(&vx))?;
            iterations += 1;
            let scale = next.slices.iter().map(StatePair::max_abs).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
            residual = next
                .slices
                .iter()
                .zip(&traj.slices)
                .map(|(a, b)| a.sub(b).max_abs())
                .fold(0.0, f64::max)
                / scale;
            traj = next;
            if residual < PICARD_TOL {
                break;
            }
            if iterations >= PICARD_MAX {
                return Err(Error::NoConvergence { iterations, residual });
            }
        }
    }
    let traces = extract_traces(&traj, g)?;
    Ok(DiagonalSolve { trajectory: traj, traces, iterations, residual })
}

/// First-derivative operator used by the monolithic transport term.
pub fn d1_apply(x: &[f64], dx: f64) -> Vec<f64> {
    (0..x.len()).map(|i| d1_row(i, x.len()).iter().map(|&(j, w)| w * x[j]).sum::<f64>() / dx).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::SystemParams;

    fn dec(a: f64, b: f64, c: f64) -> DecoupledParams {
        compute_decoupling(&SystemParams::new(a, b, c, 0.0).validate().unwrap()).unwrap()
    }

    #[test]
    fn identity_when_uncoupled() {
        let d = dec(0.0, 1.0, 2.0);
        assert_eq!(d.m, [[1.0, 0.0], [0.0, 1.0]]);
        assert_eq!(d.coefficients(), [1.0, 0.5]);
    }

    #[test]
    fn symmetric_example() {
        let d = dec(0.5, 1.0, 1.0);
        assert!((d.lambda - 1.0).abs() < 1e-15);
        assert!((d.alpha_plus - 1.5).abs() < 1e-14 && (d.alpha_minus - 0.5).abs() < 1e-14);
        let s = from_diagonal(&StatePair::new(vec![1.0], vec![0.0]), &d).unwrap();
        assert_eq!((s.u[0], s.v[0]), (1.0, 1.0));
    }

    #[test]
    fn asymmetric_example() {
        let d = dec(1.0, 0.5, 2.0);
        assert!((d.lambda - 1.25f64.sqrt()).abs() < 1e-14);
        assert!((d.alpha_plus - 1.309017).abs() < 1e-6 && (d.alpha_minus - 0.190983).abs() < 1e-6);
    }
}
