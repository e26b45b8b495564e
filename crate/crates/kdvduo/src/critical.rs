//! Candidate critical lengths, their root configurations and a spectral witness.

use std::f64::consts::PI;

use nalgebra::{DMatrix, Matrix6};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ValidatedParams;

/// Index (k, l, m, n, s).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CriticalIndex(pub [u32; 5]);

impl CriticalIndex {
    pub fn check(&self) -> Result<()> {
        if self.0.iter().all(|&x| x == 0) { Err(Error::AllZeroIndex) } else { Ok(()) }
    }

    /// 5k + 4l + 3m + 2n + s
    pub fn weighted_sum(&self) -> i64 {
        self.0.iter().zip([5, 4, 3, 2, 1]).map(|(&x, w)| w * x as i64).sum()
    }

    pub fn has_zero(&self) -> bool {
        self.0.contains(&0)
    }
}

/// Whether indices range over the naturals with or without zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum IndexConvention {
    #[default]
    WithZero,
    Positive,
}

/// 6 sum S_j^2 - sigma^2 over the partial sums S_j.
pub fn alpha_index(idx: CriticalIndex) -> Result<i64> {
    idx.check()?;
    let mut partial = 0i64;
    let mut sum_sq = 0i64;
    for &x in &idx.0 {
        partial += x as i64;
        sum_sq += partial * partial;
    }
    let sigma = idx.weighted_sum();
    Ok(6 * sum_sq - sigma * sigma)
}

/// The quadratic form with the ls coefficient 3 as it is sometimes written.
pub fn printed_alpha_index(idx: CriticalIndex) -> Result<i64> {
    idx.check()?;
    let [k, l, m, n, s] = idx.0.map(|x| x as i64);
    Ok(5 * k * k + 8 * l * l + 9 * m * m + 8 * n * n + 5 * s * s + 8 * k * l + 6 * k * m + 4 * k * n + 2 * k * s
        + 12 * m * l + 8 * l * n + 3 * l * s + 12 * m * n + 6 * m * s + 8 * n * s)
}

fn check_r(p: &ValidatedParams) -> Result<()> {
    if p.r > 0.0 { Ok(()) } else { Err(Error::NonpositiveR(p.r)) }
}

/// Length associated with a value of the quadratic form.
pub fn length_for_alpha(p: &ValidatedParams, alpha: f64) -> Result<f64> {
    check_r(p)?;
    Ok(PI * (p.gap() * alpha / (3.0 * p.r)).sqrt())
}

pub fn critical_length(p: &ValidatedParams, idx: CriticalIndex) -> Result<f64> {
    length_for_alpha(p, alpha_index(idx)? as f64)
}

/// Equally spaced-by-index roots summing to zero, and p from the product relation.
pub fn build_roots(params: &ValidatedParams, idx: CriticalIndex, length: f64) -> ([f64; 6], Complex64) {
    let mut xi = [0.0; 6];
    xi[0] = -PI / (3.0 * length) * idx.weighted_sum() as f64;
    for j in 0..5 {
        xi[j + 1] = xi[j] + 2.0 * PI * idx.0[j] as f64 / length;
    }
    let prod: f64 = xi.iter().product();
    let p = Complex64::new(params.gap() * prod / params.c, 0.0).sqrt();
    (xi, p)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalCandidate {
    pub index: CriticalIndex,
    pub alpha: i64,
    pub length: f64,
    pub xi: Option<[f64; 6]>,
    pub p: Option<Complex64>,
    pub vieta_residuals: Option<[f64; 6]>,
    /// all six relations hold to 1e-8
    pub consistent: bool,
    /// some index entry vanishes, so roots repeat
    pub degenerate: bool,
    /// number of indices sharing this alpha
    pub multiplicity: usize,
}

impl CriticalCandidate {
    pub fn new(params: &ValidatedParams, index: CriticalIndex) -> Result<Self> {
        let alpha = alpha_index(index)?;
        let length = length_for_alpha(params, alpha as f64)?;
        let mut cand = Self {
            index,
            alpha,
            length,
            xi: None,
            p: None,
            vieta_residuals: None,
            consistent: false,
            degenerate: index.has_zero(),
            multiplicity: 1,
        };
        let (xi, p) = build_roots(params, index, length);
        cand.xi = Some(xi);
        cand.p = Some(p);
        let res = verify_vieta(params, &cand)?;
        cand.vieta_residuals = Some(res);
        cand.consistent = res.iter().all(|&r| r <= 1e-8);
        Ok(cand)
    }
}

/// Elementary symmetric polynomials e_1..e_6.
pub fn elementary_symmetric<T>(roots: &[T]) -> Vec<T>
where
    T: Copy + std::ops::Add<Output = T> + std::ops::Mul<Output = T> + From<f64>,
{
    let mut e = vec![T::from(0.0); roots.len() + 1];
    e[0] = T::from(1.0);
    for (i, &x) in roots.iter().enumerate() {
        for k in (1..=i + 1).rev() {
            e[k] = e[k] + e[k - 1] * x;
        }
    }
    e.remove(0);
    e
}

/// Relative residuals of e_k against the monic coefficients of P.
pub fn verify_vieta(params: &ValidatedParams, cand: &CriticalCandidate) -> Result<[f64; 6]> {
    let (xi, p) = match (cand.xi, cand.p) {
        (Some(x), Some(p)) => (x, p),
        _ => return Err(Error::RootsNotPopulated),
    };
    let g = params.gap();
    let (r, c) = (params.r, params.c);
    let e = elementary_symmetric(&xi);
    let abs: Vec<f64> = xi.iter().map(|x| x.abs()).collect();
    let e_abs = elementary_symmetric(&abs);
    let zero = Complex64::new(0.0, 0.0);
    let target = [
        zero,
        Complex64::new(-r / g, 0.0),
        (c + 1.0) * p / g,
        zero,
        -r * p / g,
        c * p * p / g,
    ];
    let mut out = [0.0; 6];
    for k in 0..6 {
        let scale = target[k].norm().max(e_abs[k]);
        let diff = (Complex64::new(e[k], 0.0) - target[k]).norm();
        out[k] = if scale == 0.0 { diff } else { diff / scale };
    }
    Ok(out)
}

/// All candidates with length at most `l_max`, one per value of the quadratic form,
/// represented by the lexicographically smallest index.
pub fn enumerate_candidates(
    params: &ValidatedParams,
    l_max: f64,
    convention: IndexConvention,
) -> Result<Vec<CriticalCandidate>> {
    check_r(params)?;
    if !(l_max > 0.0) {
        return Err(Error::Config(format!("L_max must be positive (got {l_max})")));
    }
    let alpha_max = 3.0 * params.r * (l_max / PI).powi(2) / params.gap();
    // alpha >= sum S_j^2 >= (k+l+m+n+s)^2
    let bound = alpha_max.sqrt().floor() as u32;
    let lo = match convention {
        IndexConvention::WithZero => 0,
        IndexConvention::Positive => 1,
    };
    let mut best: std::collections::BTreeMap<i64, (CriticalIndex, usize)> = Default::default();
    let mut visit = |idx: CriticalIndex| {
        if let Ok(alpha) = alpha_index(idx)
            && length_for_alpha(params, alpha as f64).is_ok_and(|l| l <= l_max * (1.0 + 1e-12))
        {
            let e = best.entry(alpha).or_insert((idx, 0));
            e.1 += 1;
            if idx < e.0 {
                e.0 = idx;
            }
        }
    };
    for k in lo..=bound {
        for l in lo..=bound - k.min(bound) {
            let s2 = k + l;
            if s2 > bound {
                break;
            }
            for m in lo..=bound - s2 {
                let s3 = s2 + m;
                for n in lo..=bound - s3 {
                    let s4 = s3 + n;
                    for s in lo..=bound - s4 {
                        visit(CriticalIndex([k, l, m, n, s]));
                    }
                }
            }
        }
    }
    best.into_values()
        .map(|(idx, mult)| {
            let mut c = CriticalCandidate::new(params, idx)?;
            c.multiplicity = mult;
            Ok(c)
        })
        .collect()
}

/// Roots of P for a given p, computed from the companion matrix and polished by Newton steps.
pub fn symbol_roots(params: &ValidatedParams, p: f64) -> [Complex64; 6] {
    let g = params.gap();
    let (r, c) = (params.r, params.c);
    // monic coefficients of xi^0..xi^5
    let coef = [c * p * p / g, r * p / g, 0.0, -(c + 1.0) * p / g, -r / g, 0.0];
    let mut comp = Matrix6::<f64>::zeros();
    for i in 1..6 {
        comp[(i, i - 1)] = 1.0;
    }
    for i in 0..6 {
        comp[(i, 5)] = -coef[i];
    }
    let eig = comp.complex_eigenvalues();
    let eval = |z: Complex64| {
        let mut v = Complex64::new(1.0, 0.0);
        let mut d = Complex64::new(0.0, 0.0);
        for k in (0..6).rev() {
            d = d * z + v;
            v = v * z + coef[k];
        }
        (v, d)
    };
    let mut roots = [Complex64::new(0.0, 0.0); 6];
    for (i, z0) in eig.iter().enumerate() {
        let mut z = *z0;
        for _ in 0..4 {
            let (v, d) = eval(z);
            if d.norm() == 0.0 {
                break;
            }
            let step = v / d;
            if !step.is_finite() || step.norm() > 1e-3 * (1.0 + z.norm()) {
                break;
            }
            z -= step;
        }
        roots[i] = z;
    }
    roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    roots
}

/// Truncated power series in the root parameter.
#[derive(Clone)]
struct Series(Vec<Complex64>);

impl Series {
    fn mul(&self, other: &Series) -> Series {
        let q = self.0.len();
        let mut out = vec![Complex64::new(0.0, 0.0); q];
        for i in 0..q {
            for j in 0..q - i {
                out[i + j] += self.0[i] * other.0[j];
            }
        }
        Series(out)
    }

    fn linear(c0: Complex64, c1: Complex64, q: usize) -> Series {
        let mut v = vec![Complex64::new(0.0, 0.0); q];
        v[0] = c0;
        if q > 1 {
            v[1] = c1;
        }
        Series(v)
    }

    fn scale(&self, s: Complex64) -> Series {
        Series(self.0.iter().map(|x| x * s).collect())
    }

    fn add(&self, other: &Series) -> Series {
        Series(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    fn powi(&self, k: u32) -> Series {
        let mut out = Series::linear(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), self.0.len());
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }
}

/// Groups roots closer than `tol` (relative) into clusters; each cluster is (centre, multiplicity).
fn cluster(roots: &[Complex64], tol: f64) -> Vec<(Complex64, usize)> {
    let mut used = vec![false; roots.len()];
    let mut out = Vec::new();
    for i in 0..roots.len() {
        if used[i] {
            continue;
        }
        let mut members = vec![roots[i]];
        used[i] = true;
        for j in i + 1..roots.len() {
            if !used[j] && (roots[j] - roots[i]).norm() <= tol * (1.0 + roots[i].norm()) {
                used[j] = true;
                members.push(roots[j]);
            }
        }
        let centre = members.iter().sum::<Complex64>() / members.len() as f64;
        out.push((centre, members.len()));
    }
    out
}

/// Boundary matrix (10 x 6) of the eigenproblem at lambda = i p, columns normalised.
pub fn witness_matrix(params: &ValidatedParams, length: f64, p: f64) -> Result<DMatrix<Complex64>> {
    let (a, b, c, r) = (params.a, params.b, params.c, params.r);
    let i = Complex64::i();
    let lambda = i * p;
    if p == 0.0 {
        // xi = 0 is a root and both amplitude columns vanish there
        return Err(Error::DegenerateSymbol { p });
    }
    let roots = symbol_roots(params, p);
    let clusters = cluster(&roots, 1e-6);
    let mut cols: Vec<Vec<Complex64>> = Vec::new();
    for (xi, mult) in clusters {
        let q = mult;
        // iz = i (xi + eps)
        let iz = Series::linear(i * xi, i, q);
        let iz3 = iz.powi(3);
        let one = Series::linear(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), q);
        let lam = one.scale(lambda);
        let v1 = [lam.add(&iz.scale(Complex64::new(r / c, 0.0))).add(&iz3.scale(Complex64::new(1.0 / c, 0.0))), iz3.scale(Complex64::new(-a, 0.0))];
        let v2 = [iz3.scale(Complex64::new(-a * b / c, 0.0)), lam.add(&iz3)];
        let norm = |v: &[Series; 2]| (v[0].0[0].norm_sqr() + v[1].0[0].norm_sqr()).sqrt();
        let amp = if norm(&v1) >= norm(&v2) { v1 } else { v2 };
        let scale = (lambda.norm() + xi.norm().powi(3)).max(1e-300);
        if norm(&amp) <= 1e-12 * scale {
            return Err(Error::DegenerateSymbol { p });
        }
        // e^{i (xi + eps) x} at x = 0 and x = L
        let exp_at = |x: f64| {
            let mut s = vec![Complex64::new(0.0, 0.0); q];
            let base = (i * xi * x).exp();
            let mut term = base;
            for (j, sj) in s.iter_mut().enumerate() {
                *sj = term;
                term *= i * x / (j + 1) as f64;
            }
            Series(s)
        };
        for j in 0..q {
            let mut col = Vec::with_capacity(10);
            let at = |x: f64, m: u32, comp: usize| exp_at(x).mul(&iz.powi(m)).mul(&amp[comp]).0[j];
            for x in [0.0, length] {
                col.push(at(x, 0, 0));
            }
            for x in [0.0, length] {
                col.push(at(x, 0, 1));
            }
            for x in [0.0, length] {
                col.push(at(x, 1, 0));
            }
            for x in [0.0, length] {
                col.push(at(x, 1, 1));
            }
            for x in [0.0, length] {
                col.push(a * at(x, 2, 0) + at(x, 2, 1) / c);
            }
            cols.push(col);
        }
    }
    let mut m = DMatrix::<Complex64>::zeros(10, cols.len());
    for (j, col) in cols.iter().enumerate() {
        let n = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for (k, z) in col.iter().enumerate() {
            m[(k, j)] = if n > 0.0 { z / n } else { *z };
        }
    }
    Ok(m)
}

/// Smallest singular value of the normalised boundary matrix.
pub fn witness_sigma(params: &ValidatedParams, length: f64, p: f64) -> Result<f64> {
    let m = witness_matrix(params, length, p)?;
    Ok(m.singular_values().iter().copied().fold(f64::INFINITY, f64::min))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralWitness {
    pub lambda_scan: Vec<(f64, f64)>,
    pub min_sigma: f64,
    pub argmin_p: f64,
    /// grid points where the symbol degenerates
    pub skipped: Vec<f64>,
}

/// |p| from 1 to 30 with both signs.
pub fn default_p_grid(points_per_sign: usize) -> Vec<f64> {
    let n = points_per_sign.max(2);
    let pos: Vec<f64> = (0..n).map(|j| 1.0 + 29.0 * j as f64 / (n - 1) as f64).collect();
    pos.iter().rev().map(|x| -x).chain(pos.iter().copied()).collect()
}

pub fn spectral_witness(params: &ValidatedParams, length: f64, p_grid: &[f64]) -> Result<SpectralWitness> {
    if !(length > 0.0) {
        return Err(Error::Config(format!("L must be positive (got {length})")));
    }
    if p_grid.is_empty() {
        return Err(Error::EmptySeries);
    }
    let results: Vec<(f64, Result<f64>)> = p_grid.par_iter().map(|&p| (p, witness_sigma(params, length, p))).collect();
    let mut scan = Vec::new();
    let mut skipped = Vec::new();
    for (p, r) in results {
        match r {
            Ok(s) => scan.push((p, s)),
            Err(Error::DegenerateSymbol { .. }) => skipped.push(p),
            Err(e) => return Err(e),
        }
    }
    let &(argmin_p, min_sigma) = scan
        .iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or(Error::DegenerateSymbol { p: p_grid[0] })?;
    Ok(SpectralWitness { lambda_scan: scan, min_sigma, argmin_p, skipped })
}
