use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform space-time grid on [0,L] x [0,T].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    #[serde(rename = "L")]
    pub length: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    /// spatial nodes including both endpoints
    pub nx: usize,
    /// time steps
    pub nt: usize,
}

pub const MIN_NX: usize = 5;

impl Grid {
    pub fn new(length: f64, horizon: f64, nx: usize, nt: usize) -> Result<Self> {
        let g = Grid { length, horizon, nx, nt };
        g.check()?;
        Ok(g)
    }

    pub fn check(&self) -> Result<()> {
        if !(self.length > 0.0 && self.length.is_finite()) {
            return Err(Error::Config(format!("L must be positive, got {}", self.length)));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::Config(format!("T must be positive, got {}", self.horizon)));
        }
        if self.nx < MIN_NX {
            return Err(Error::GridTooCoarse { nx: self.nx, min: MIN_NX });
        }
        if self.nt < 2 {
            return Err(Error::Config(format!("nt must be at least 2, got {}", self.nt)));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        self.length / (self.nx - 1) as f64
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.nt as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        if i + 1 == self.nx { self.length } else { i as f64 * self.dx() }
    }

    pub fn t(&self, n: usize) -> f64 {
        if n == self.nt { self.horizon } else { n as f64 * self.dt() }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.nx).map(|i| self.x(i)).collect()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.nt).map(|n| self.t(n)).collect()
    }

    /// Composite trapezoid weights over the spatial nodes.
    pub fn space_weights(&self) -> Vec<f64> {
        trapezoid_weights(self.nx, self.dx())
    }

    /// Composite trapezoid weights over the time nodes.
    pub fn time_weights(&self) -> Vec<f64> {
        trapezoid_weights(self.nt + 1, self.dt())
    }

    pub fn with_length(&self, length: f64) -> Grid {
        Grid { length, ..*self }
    }

    pub fn with_horizon(&self, horizon: f64) -> Grid {
        Grid { horizon, ..*self }
    }
}

pub fn trapezoid_weights(n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![h; n];
    if n > 0 {
        w[0] = 0.5 * h;
        w[n - 1] = 0.5 * h;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_and_endpoints() {
        let g = Grid::new(2.0, 1.0, 5, 4).unwrap();
        assert_eq!(g.dx(), 0.5);
        assert_eq!(g.dt(), 0.25);
        assert_eq!(g.x(4), 2.0);
        assert_eq!(g.t(4), 1.0);
        assert_eq!(g.nodes().len(), 5);
        assert_eq!(g.times().len(), 5);
    }

    #[test]
    fn coarse_grid_rejected() {
        assert!(matches!(Grid::new(1.0, 1.0, 4, 10), Err(Error::GridTooCoarse { .. })));
        assert!(Grid::new(1.0, 1.0, 10, 1).is_err());
        assert!(Grid::new(-1.0, 1.0, 10, 10).is_err());
    }

    #[test]
    fn weights_sum_to_length() {
        let g = Grid::new(3.0, 2.0, 31, 40).unwrap();
        let s: f64 = g.space_weights().iter().sum();
        assert!((s - 3.0).abs() < 1e-13);
        let s: f64 = g.time_weights().iter().sum();
        assert!((s - 2.0).abs() < 1e-13);
    }
}
