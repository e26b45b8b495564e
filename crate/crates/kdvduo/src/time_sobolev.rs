//! Fractional Sobolev norms and operators in time.
//!
//! A series of nt+1 samples on [0, T] is folded onto nt periodic samples by averaging
//! the two endpoints; results are unfolded by repeating the first sample at t = T.
//! The fold/unfold pair makes every operator here symmetric in the trapezoid pairing.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SobolevMode {
    /// symbol |mu|^{2 sigma}, zero mode removed
    Homogeneous,
    /// symbol (kappa^2 + mu^2)^sigma with kappa = 2 pi / T
    Inhomogeneous,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SobolevSpec {
    pub s: f64,
    pub horizon: f64,
    pub mode: SobolevMode,
}

impl SobolevSpec {
    pub fn new(s: f64, horizon: f64, mode: SobolevMode) -> Result<Self> {
        if !(s.abs() <= 1.0) {
            return Err(Error::Config(format!("Sobolev exponent must satisfy |s| <= 1 (got {s})")));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::Config(format!("horizon must be positive (got {horizon})")));
        }
        Ok(Self { s, horizon, mode })
    }

    pub fn kappa(&self) -> f64 {
        2.0 * PI / self.horizon
    }

    /// Symbol raised to `sigma` at angular frequency `mu`.
    pub fn symbol(&self, mu: f64, sigma: f64) -> f64 {
        match self.mode {
            SobolevMode::Homogeneous if sigma == 0.0 => 1.0,
            SobolevMode::Homogeneous if mu == 0.0 => 0.0,
            SobolevMode::Homogeneous => mu.abs().powf(2.0 * sigma),
            SobolevMode::Inhomogeneous => (self.kappa().powi(2) + mu * mu).powf(sigma),
        }
    }
}

/// Angular frequencies of the nt periodic modes.
pub fn frequencies(nt: usize, horizon: f64) -> Vec<f64> {
    (0..nt)
        .map(|j| {
            let k = if 2 * j <= nt { j as f64 } else { j as f64 - nt as f64 };
            2.0 * PI * k / horizon
        })
        .collect()
}

fn fold(series: &[f64]) -> Result<Vec<f64>> {
    match series.len() {
        0 => Err(Error::EmptySeries),
        1 => Ok(series.to_vec()),
        n => {
            let mut p = series[..n - 1].to_vec();
            p[0] = 0.5 * (series[0] + series[n - 1]);
            Ok(p)
        }
    }
}

fn spectrum(series: &[f64]) -> Result<Vec<Complex64>> {
    let p = fold(series)?;
    let mut buf: Vec<Complex64> = p.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    Ok(buf)
}

/// Applies the symbol raised to `sigma`.
pub fn fractional_time_operator(series: &[f64], sigma: f64, spec: &SobolevSpec) -> Result<Vec<f64>> {
    let mut buf = spectrum(series)?;
    let nt = buf.len();
    for (z, mu) in buf.iter_mut().zip(frequencies(nt, spec.horizon)) {
        *z *= spec.symbol(mu, sigma);
    }
    FftPlanner::new().plan_fft_inverse(nt).process(&mut buf);
    let mut out: Vec<f64> = buf.iter().map(|z| z.re / nt as f64).collect();
    if series.len() > 1 {
        out.push(out[0]);
    }
    Ok(out)
}

/// Discrete H^s norm; s = 0 gives the periodic L^2 norm `periodic_l2`.
pub fn sobolev_norm(series: &[f64], spec: &SobolevSpec) -> Result<f64> {
    let buf = spectrum(series)?;
    let nt = buf.len();
    let dt = spec.horizon / nt as f64;
    let sum: f64 = buf
        .iter()
        .zip(frequencies(nt, spec.horizon))
        .map(|(z, mu)| spec.symbol(mu, spec.s) * z.norm_sqr())
        .sum();
    Ok((dt / nt as f64 * sum).sqrt())
}

/// sqrt(dt * sum of folded samples squared).
pub fn periodic_l2(series: &[f64], horizon: f64) -> Result<f64> {
    let p = fold(series)?;
    let dt = horizon / p.len() as f64;
    Ok((dt * p.iter().map(|x| x * x).sum::<f64>()).sqrt())
}

/// Largest ratio L^2 / H^s over the discrete modes of an nt-step grid.
pub fn embedding_constant_estimate(spec: &SobolevSpec, nt: usize) -> f64 {
    frequencies(nt.max(1), spec.horizon)
        .into_iter()
        .filter(|&mu| spec.mode == SobolevMode::Inhomogeneous || mu != 0.0 || spec.s == 0.0)
        .map(|mu| spec.symbol(mu, spec.s).powf(-0.5))
        .fold(0.0, f64::max)
}

/// Removes the periodic mean of the folded series and re-extends.
pub fn mean_free(series: &[f64]) -> Result<Vec<f64>> {
    let p = fold(series)?;
    let mean = p.iter().sum::<f64>() / p.len() as f64;
    let mut out: Vec<f64> = p.iter().map(|x| x - mean).collect();
    if series.len() > 1 {
        out.push(out[0]);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(s: f64, mode: SobolevMode) -> SobolevSpec {
        SobolevSpec::new(s, 2.0, mode).unwrap()
    }

    #[test]
    fn empty_series_rejected() {
        assert_eq!(sobolev_norm(&[], &spec(0.0, SobolevMode::Homogeneous)), Err(Error::EmptySeries));
    }

    #[test]
    fn single_mode_scaling() {
        let nt = 64;
        let sp = spec(-1.0 / 3.0, SobolevMode::Homogeneous);
        let mu = 3.0 * 2.0 * PI / sp.horizon;
        let w: Vec<f64> = (0..=nt).map(|n| (mu * n as f64 * sp.horizon / nt as f64).cos()).collect();
        let out = fractional_time_operator(&w, -1.0 / 3.0, &sp).unwrap();
        let scale = mu.powf(-2.0 / 3.0);
        for (a, b) in out.iter().zip(&w) {
            assert!((a - scale * b).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_exponent_norm_is_parseval() {
        let w: Vec<f64> = (0..=40).map(|n| ((n * n) as f64 * 0.1).sin()).collect();
        let sp = spec(0.0, SobolevMode::Inhomogeneous);
        let a = sobolev_norm(&w, &sp).unwrap();
        let b = periodic_l2(&w, sp.horizon).unwrap();
        assert!((a - b).abs() < 1e-12 * b);
    }

    #[test]
    fn inhomogeneous_single_mode_norm() {
        let nt = 50;
        let sp = spec(1.0 / 3.0, SobolevMode::Inhomogeneous);
        let k = 2.0 * PI / sp.horizon;
        let w: Vec<f64> = (0..=nt).map(|n| (k * n as f64 * sp.horizon / nt as f64).sin()).collect();
        let expect = (2.0 * k * k).powf(1.0 / 6.0) * periodic_l2(&w, sp.horizon).unwrap();
        assert!((sobolev_norm(&w, &sp).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn embedding_constant() {
        let at = |t: f64| embedding_constant_estimate(&SobolevSpec::new(1.0 / 3.0, t, SobolevMode::Inhomogeneous).unwrap(), 100);
        assert!(at(1.0) <= at(2.0) && at(2.0) <= at(4.0));
        assert_eq!(embedding_constant_estimate(&spec(0.0, SobolevMode::Inhomogeneous), 10), 1.0);
    }
}
