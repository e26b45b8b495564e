//! Banded LU factorization with partial pivoting.

use crate::error::{Error, Result};

/// Square matrix with `kl` sub- and `ku` super-diagonals, stored by rows
/// with room for the `kl` extra super-diagonals created by pivoting.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self { n, kl, ku, width, data: vec![0.0; n * width] }
    }

    /// Builds from (row, col, value) triplets; duplicates are summed.
    pub fn from_triplets(n: usize, entries: &[(usize, usize, f64)]) -> Self {
        let (mut kl, mut ku) = (0, 0);
        for &(i, j, _) in entries {
            if i > j {
                kl = kl.max(i - j);
            } else {
                ku = ku.max(j - i);
            }
        }
        let mut m = Self::zeros(n, kl, ku);
        for &(i, j, v) in entries {
            *m.slot(i, j) += v;
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.ku + self.kl);
        i * self.width + (j + self.kl - i)
    }

    fn slot(&mut self, i: usize, j: usize) -> &mut f64 {
        let k = self.index(i, j);
        &mut self.data[k]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j + self.kl < i || j > i + self.ku {
            0.0
        } else {
            self.data[self.index(i, j)]
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku + 1).min(self.n);
                (lo..hi).map(|j| self.data[self.index(i, j)] * x[j]).sum()
            })
            .collect()
    }

    pub fn factor(mut self) -> Result<BandLu> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let scale = self.data.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let tiny = scale * f64::EPSILON * 1e-4;
        let mut piv = vec![0usize; n];
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let (mut p, mut best) = (k, 0.0);
            for i in k..=last {
                let v = self.data[self.index(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if !(best > tiny) {
                return Err(Error::SingularStep { step: 0 });
            }
            piv[k] = p;
            let jmax = (k + ku + kl).min(n - 1);
            if p != k {
                for j in k..=jmax {
                    let (a, b) = (self.index(k, j), self.index(p, j));
                    self.data.swap(a, b);
                }
            }
            let d = self.data[self.index(k, k)];
            for i in k + 1..=last {
                let ik = self.index(i, k);
                let l = self.data[ik] / d;
                self.data[ik] = l;
                if l != 0.0 {
                    for j in k + 1..=jmax {
                        let kj = self.data[self.index(k, j)];
                        let ij = self.index(i, j);
                        self.data[ij] -= l * kj;
                    }
                }
            }
        }
        Ok(BandLu { m: self, piv })
    }
}

/// Factors of a `BandMatrix`.
#[derive(Debug, Clone)]
pub struct BandLu {
    m: BandMatrix,
    piv: Vec<usize>,
}

impl BandLu {
    pub fn n(&self) -> usize {
        self.m.n
    }

    /// Solves A x = b in place.
    pub fn solve(&self, b: &mut [f64]) {
        let (n, kl, ku) = (self.m.n, self.m.kl, self.m.ku);
        let a = &self.m;
        for k in 0..n {
            b.swap(k, self.piv[k]);
            let bk = b[k];
            if bk != 0.0 {
                for i in k + 1..=(k + kl).min(n - 1) {
                    b[i] -= a.data[a.index(i, k)] * bk;
                }
            }
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for j in i + 1..=(i + ku + kl).min(n - 1) {
                s -= a.data[a.index(i, j)] * b[j];
            }
            b[i] = s / a.data[a.index(i, i)];
        }
    }

    /// Solves A^T x = b in place.
    pub fn solve_transpose(&self, b: &mut [f64]) {
        let (n, kl, ku) = (self.m.n, self.m.kl, self.m.ku);
        let a = &self.m;
        for i in 0..n {
            let mut s = b[i];
            for j in i.saturating_sub(ku + kl)..i {
                s -= a.data[a.index(j, i)] * b[j];
            }
            b[i] = s / a.data[a.index(i, i)];
        }
        for k in (0..n).rev() {
            let mut s = 0.0;
            for i in k + 1..=(k + kl).min(n - 1) {
                s += a.data[a.index(i, k)] * b[i];
            }
            b[k] -= s;
            b.swap(k, self.piv[k]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_band(n: usize, kl: usize, ku: usize, seed: u64) -> (Vec<(usize, usize, f64)>, DMatrix<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = Vec::new();
        let mut d = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i.saturating_sub(kl)..(i + ku + 1).min(n) {
                // weak diagonal forces pivoting
                let v: f64 = rng.random_range(-1.0..1.0) * if i == j { 0.01 } else { 1.0 };
                t.push((i, j, v));
                d[(i, j)] = v;
            }
        }
        (t, d)
    }

    #[test]
    fn solve_matches_dense() {
        for (seed, (kl, ku)) in [(2, 3), (4, 1), (0, 0), (6, 6)].into_iter().enumerate() {
            let n = 40;
            let (t, d) = random_band(n, kl, ku, seed as u64);
            let lu = BandMatrix::from_triplets(n, &t).factor().unwrap();
            let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
            let mut x = b.clone();
            lu.solve(&mut x);
            let r = &d * DMatrix::from_column_slice(n, 1, &x) - DMatrix::from_column_slice(n, 1, &b);
            assert!(r.amax() < 1e-9, "residual {}", r.amax());
            let mut y = b.clone();
            lu.solve_transpose(&mut y);
            let r = d.transpose() * DMatrix::from_column_slice(n, 1, &y) - DMatrix::from_column_slice(n, 1, &b);
            assert!(r.amax() < 1e-9, "transpose residual {}", r.amax());
        }
    }

    #[test]
    fn singular_detected() {
        let t = vec![(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 4.0)];
        assert!(matches!(BandMatrix::from_triplets(2, &t).factor(), Err(Error::SingularStep { .. })));
    }

    #[test]
    fn matvec_matches_entries() {
        let (t, d) = random_band(12, 2, 1, 9);
        let m = BandMatrix::from_triplets(12, &t);
        let x: Vec<f64> = (0..12).map(|i| i as f64).collect();
        let y = m.matvec(&x);
        let yd = &d * DMatrix::from_column_slice(12, 1, &x);
        for i in 0..12 {
            assert!((y[i] - yd[i]).abs() < 1e-12);
            assert_eq!(m.get(i, i), d[(i, i)]);
        }
    }
}
