use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Discrete state (u, v) on the spatial nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatePair {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl StatePair {
    pub fn new(u: Vec<f64>, v: Vec<f64>) -> Self {
        Self { u, v }
    }

    pub fn zeros(nx: usize) -> Self {
        Self { u: vec![0.0; nx], v: vec![0.0; nx] }
    }

    pub fn from_fn(g: &Grid, fu: impl Fn(f64) -> f64, fv: impl Fn(f64) -> f64) -> Self {
        let x = g.nodes();
        Self { u: x.iter().map(|&x| fu(x)).collect(), v: x.iter().map(|&x| fv(x)).collect() }
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn check(&self, nx: usize) -> Result<()> {
        for len in [self.u.len(), self.v.len()] {
            if len != nx {
                return Err(Error::DimensionMismatch { expected: nx, got: len });
            }
        }
        Ok(())
    }

    pub fn scaled(&self, s: f64) -> StatePair {
        self.map(|x| s * x)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> StatePair {
        StatePair { u: self.u.iter().map(|&x| f(x)).collect(), v: self.v.iter().map(|&x| f(x)).collect() }
    }

    pub fn zip_with(&self, other: &StatePair, f: impl Fn(f64, f64) -> f64) -> StatePair {
        let z = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect();
        StatePair { u: z(&self.u, &other.u), v: z(&self.v, &other.v) }
    }

    pub fn add(&self, other: &StatePair) -> StatePair {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &StatePair) -> StatePair {
        self.zip_with(other, |a, b| a - b)
    }

    /// Interleaved (u0, v0, u1, v1, ...) view.
    pub fn interleaved(&self) -> Vec<f64> {
        self.u.iter().zip(&self.v).flat_map(|(&u, &v)| [u, v]).collect()
    }

    pub fn from_interleaved(x: &[f64]) -> StatePair {
        StatePair { u: x.iter().step_by(2).copied().collect(), v: x.iter().skip(1).step_by(2).copied().collect() }
    }

    pub fn max_abs(&self) -> f64 {
        self.u.iter().chain(&self.v).fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// One state per time node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub slices: Vec<StatePair>,
}

impl Trajectory {
    pub fn terminal(&self) -> &StatePair {
        self.slices.last().expect("trajectory has at least one slice")
    }

    pub fn initial(&self) -> &StatePair {
        &self.slices[0]
    }

    pub fn zeros(g: &Grid) -> Trajectory {
        Trajectory { slices: vec![StatePair::zeros(g.nx); g.nt + 1] }
    }
}

/// The six boundary channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    H0,
    H1,
    H2,
    G0,
    G1,
    G2,
}

impl Channel {
    pub const ALL: [Channel; 6] = [Channel::H0, Channel::H1, Channel::H2, Channel::G0, Channel::G1, Channel::G2];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        ["h0", "h1", "h2", "g0", "g1", "g2"][self.index()]
    }

    /// Dirichlet channels carry values, the others slopes.
    pub fn is_dirichlet(self) -> bool {
        !matches!(self, Channel::H2 | Channel::G2)
    }
}

/// Boundary inputs u(0), u(L), u_x(L), v(0), v(L), v_x(L) over the time nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryData {
    pub h0: Vec<f64>,
    pub h1: Vec<f64>,
    pub h2: Vec<f64>,
    pub g0: Vec<f64>,
    pub g1: Vec<f64>,
    pub g2: Vec<f64>,
}

impl BoundaryData {
    pub fn zeros(nt: usize) -> Self {
        let z = vec![0.0; nt + 1];
        Self { h0: z.clone(), h1: z.clone(), h2: z.clone(), g0: z.clone(), g1: z.clone(), g2: z }
    }

    pub fn channel(&self, c: Channel) -> &Vec<f64> {
        match c {
            Channel::H0 => &self.h0,
            Channel::H1 => &self.h1,
            Channel::H2 => &self.h2,
            Channel::G0 => &self.g0,
            Channel::G1 => &self.g1,
            Channel::G2 => &self.g2,
        }
    }

    pub fn channel_mut(&mut self, c: Channel) -> &mut Vec<f64> {
        match c {
            Channel::H0 => &mut self.h0,
            Channel::H1 => &mut self.h1,
            Channel::H2 => &mut self.h2,
            Channel::G0 => &mut self.g0,
            Channel::G1 => &mut self.g1,
            Channel::G2 => &mut self.g2,
        }
    }

    pub fn check(&self, nt: usize) -> Result<()> {
        for c in Channel::ALL {
            let len = self.channel(c).len();
            if len != nt + 1 {
                return Err(Error::DimensionMismatch { expected: nt + 1, got: len });
            }
        }
        Ok(())
    }

    /// The six values at time node n, ordered as `Channel::ALL`.
    pub fn at(&self, n: usize) -> [f64; 6] {
        Channel::ALL.map(|c| self.channel(c)[n])
    }

    pub fn len(&self) -> usize {
        self.h0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h0.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        Channel::ALL.iter().flat_map(|&c| self.channel(c).iter()).fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn zip_with(&self, other: &BoundaryData, f: impl Fn(f64, f64) -> f64) -> BoundaryData {
        let mut out = self.clone();
        for c in Channel::ALL {
            for (o, &b) in out.channel_mut(c).iter_mut().zip(other.channel(c)) {
                *o = f(*o, b);
            }
        }
        out
    }
}

/// Source fields f, s at every (time node, spatial node).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourcePair {
    pub f: Vec<Vec<f64>>,
    pub s: Vec<Vec<f64>>,
}

impl SourcePair {
    pub fn zeros(g: &Grid) -> Self {
        Self { f: vec![vec![0.0; g.nx]; g.nt + 1], s: vec![vec![0.0; g.nx]; g.nt + 1] }
    }

    pub fn from_fn(g: &Grid, f: impl Fn(f64, f64) -> f64, s: impl Fn(f64, f64) -> f64) -> Self {
        let x = g.nodes();
        let field = |h: &dyn Fn(f64, f64) -> f64| {
            g.times().iter().map(|&t| x.iter().map(|&x| h(x, t)).collect()).collect()
        };
        Self { f: field(&f), s: field(&s) }
    }

    pub fn from_slices(slices: Vec<StatePair>) -> Self {
        let (f, s) = slices.into_iter().map(|p| (p.u, p.v)).unzip();
        Self { f, s }
    }

    pub fn slice(&self, n: usize) -> StatePair {
        StatePair { u: self.f[n].clone(), v: self.s[n].clone() }
    }

    pub fn check(&self, g: &Grid) -> Result<()> {
        for field in [&self.f, &self.s] {
            if field.len() != g.nt + 1 {
                return Err(Error::DimensionMismatch { expected: g.nt + 1, got: field.len() });
            }
            for row in field {
                if row.len() != g.nx {
                    return Err(Error::DimensionMismatch { expected: g.nx, got: row.len() });
                }
            }
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.f.iter().chain(&self.s).all(|r| r.iter().all(|&x| x == 0.0))
    }
}

/// Endpoint of the interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum End {
    Left,
    Right,
}

/// Traces d^k u, d^k v (k = 0, 1, 2) at x = 0 and x = L over the time nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSet {
    /// u[k][end], end 0 = left
    pub u: [[Vec<f64>; 2]; 3],
    pub v: [[Vec<f64>; 2]; 3],
}

impl TraceSet {
    pub fn zeros(nt: usize) -> Self {
        let z = || std::array::from_fn(|_| std::array::from_fn(|_| vec![0.0; nt + 1]));
        Self { u: z(), v: z() }
    }

    pub fn u(&self, k: usize, end: End) -> &[f64] {
        &self.u[k][end as usize]
    }

    pub fn v(&self, k: usize, end: End) -> &[f64] {
        &self.v[k][end as usize]
    }

    pub fn len(&self) -> usize {
        self.u[0][0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn check(&self, nt: usize) -> Result<()> {
        for s in self.u.iter().chain(&self.v).flatten() {
            if s.len() != nt + 1 {
                return Err(Error::MissingTrace(format!("series of length {} (expected {})", s.len(), nt + 1)));
            }
        }
        Ok(())
    }
}
