//! Crank-Nicolson stepping with boundary conditions imposed by Lagrange
//! multipliers on a summation-by-parts spatial operator.
//!
//! Unknown layout for `m` components on `nx` nodes:
//! `[mu_left(0..m), node(0,0..m), ..., node(nx-1,0..m), mu_slope(0..m), mu_right(0..m)]`.

use crate::banded::{BandLu, BandMatrix};
use crate::error::{Error, Result};
use crate::grid::{trapezoid_weights, Grid};
use crate::stencil::{d1_row, d3_row, DX_RIGHT};

/// Per-component boundary values (u(0), u(L), u_x(L)) at one time node.
pub type EdgeValues = [f64; 3];

#[derive(Debug, Clone)]
pub struct StepOperator {
    nx: usize,
    m: usize,
    dx: f64,
    dt: f64,
    nt: usize,
    h: Vec<f64>,
    lu: BandLu,
    /// explicit half of the step, rows over node unknowns
    explicit: Vec<Vec<(usize, f64)>>,
}

/// Output of the transposed (backward) sweep.
#[derive(Debug, Clone)]
pub struct TransposeSweep {
    /// adjoint vectors over node unknowns, one per time node
    pub lambda: Vec<Vec<f64>>,
    /// sensitivity of the functional to each boundary value, per time node and component
    pub edge: Vec<Vec<EdgeValues>>,
}

impl StepOperator {
    /// `disp` is the m x m dispersion matrix (row-major), `transport[c]` multiplies d/dx of component c.
    pub fn new(g: &Grid, disp: &[Vec<f64>], transport: &[f64]) -> Result<Self> {
        g.check()?;
        let m = disp.len();
        let (nx, dx, dt) = (g.nx, g.dx(), g.dt());
        let h = trapezoid_weights(nx, dx);
        let node = |i: usize, c: usize| m + i * m + c;
        let n = nx * m + 3 * m;
        let mut k = Vec::new();
        let mut explicit = vec![Vec::new(); nx * m];
        let d3 = 1.0 / (dx * dx * dx);
        for i in 0..nx {
            let rows3 = d3_row(i, nx);
            let rows1 = d1_row(i, nx);
            for c in 0..m {
                let row = node(i, c);
                let mut add = |col_node: usize, cc: usize, a: f64| {
                    k.push((row, node(col_node, cc), h[i] / dt * delta(i, col_node, c, cc) + 0.5 * h[i] * a));
                    explicit[i * m + c].push((col_node * m + cc, h[i] / dt * delta(i, col_node, c, cc) - 0.5 * h[i] * a));
                };
                add(i, c, 0.0);
                for &(j, w) in &rows3 {
                    for (cc, &bcc) in disp[c].iter().enumerate() {
                        if bcc != 0.0 {
                            add(j, cc, bcc * w * d3);
                        }
                    }
                }
                if transport[c] != 0.0 {
                    for &(j, w) in &rows1 {
                        add(j, c, transport[c] * w / dx);
                    }
                }
            }
        }
        let last = nx - 1;
        for c in 0..m {
            let (ml, ms, mr) = (c, m + nx * m + c, 2 * m + nx * m + c);
            k.push((ml, node(0, c), 1.0));
            k.push((node(0, c), ml, 1.0));
            k.push((mr, node(last, c), 1.0));
            k.push((node(last, c), mr, 1.0));
            for (q, &w) in DX_RIGHT.iter().enumerate() {
                let col = node(last - 2 + q, c);
                k.push((ms, col, w / dx));
                k.push((col, ms, w / dx));
            }
        }
        let lu = BandMatrix::from_triplets(n, &k).factor()?;
        Ok(Self { nx, m, dx, dt, nt: g.nt, h, lu, explicit })
    }

    pub fn components(&self) -> usize {
        self.m
    }

    pub fn weights(&self) -> &[f64] {
        &self.h
    }

    fn unknowns(&self) -> usize {
        self.nx * self.m + 3 * self.m
    }

    fn apply_explicit(&self, x: &[f64]) -> Vec<f64> {
        self.explicit.iter().map(|row| row.iter().map(|&(j, a)| a * x[j]).sum()).collect()
    }

    fn apply_explicit_transpose(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; y.len()];
        for (row, &yi) in self.explicit.iter().zip(y) {
            if yi != 0.0 {
                for &(j, a) in row {
                    out[j] += a * yi;
                }
            }
        }
        out
    }

    /// Marches from `init` (interleaved node vector). `edge(n)` gives boundary values at
    /// time node n for each component; `source(n)` the interleaved source at time node n.
    pub fn march(
        &self,
        init: &[f64],
        edge: impl Fn(usize) -> Vec<EdgeValues>,
        source: Option<&dyn Fn(usize) -> Vec<f64>>,
    ) -> Result<Vec<Vec<f64>>> {
        let (m, nx) = (self.m, self.nx);
        let nn = nx * m;
        let mut data_scale = init.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        let mut out = Vec::with_capacity(self.nt + 1);
        out.push(init.to_vec());
        let mut prev_src = source.map(|s| s(0));
        for n in 0..self.nt {
            let cur = &out[n];
            let mut rhs = vec![0.0; self.unknowns()];
            let ex = self.apply_explicit(cur);
            rhs[m..m + nn].copy_from_slice(&ex);
            if let Some(s) = source {
                let next = s(n + 1);
                let prev = prev_src.as_ref().expect("source present");
                for i in 0..nx {
                    for c in 0..m {
                        let q = i * m + c;
                        rhs[m + q] += self.h[i] * 0.5 * (prev[q] + next[q]);
                    }
                }
                data_scale = data_scale.max(next.iter().fold(0.0f64, |a, x| a.max(x.abs())));
                prev_src = Some(next);
            }
            let e = edge(n + 1);
            for (c, ev) in e.iter().enumerate().take(m) {
                rhs[c] = ev[0];
                rhs[2 * m + nn + c] = ev[1];
                rhs[m + nn + c] = ev[2];
                data_scale = data_scale.max(ev[0].abs()).max(ev[1].abs()).max(ev[2].abs() * self.dx);
            }
            self.lu.solve(&mut rhs);
            let next: Vec<f64> = rhs[m..m + nn].to_vec();
            let norm = next.iter().fold(0.0f64, |a, x| a.max(x.abs()));
            if !norm.is_finite() || norm > 1e12 * data_scale.max(f64::MIN_POSITIVE) {
                return Err(Error::Unstable { step: n + 1, norm });
            }
            out.push(next);
        }
        Ok(out)
    }

    /// Exact transpose of `march` with respect to boundary values and the initial state,
    /// for the functional J = <terminal, lambda_final> (Euclidean over node unknowns).
    pub fn sweep_transpose(&self, lambda_final: &[f64]) -> TransposeSweep {
        let (m, nx) = (self.m, self.nx);
        let nn = nx * m;
        let mut lambda = vec![Vec::new(); self.nt + 1];
        let mut edge = vec![vec![[0.0; 3]; m]; self.nt + 1];
        lambda[self.nt] = lambda_final.to_vec();
        for n in (0..self.nt).rev() {
            let mut w = vec![0.0; self.unknowns()];
            w[m..m + nn].copy_from_slice(&lambda[n + 1]);
            self.lu.solve_transpose(&mut w);
            for (c, e) in edge[n + 1].iter_mut().enumerate() {
                *e = [w[c], w[2 * m + nn + c], w[m + nn + c]];
            }
            lambda[n] = self.apply_explicit_transpose(&w[m..m + nn]);
        }
        TransposeSweep { lambda, edge }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }
}

fn delta(i: usize, j: usize, c: usize, cc: usize) -> f64 {
    if i == j && c == cc { 1.0 } else { 0.0 }
}
