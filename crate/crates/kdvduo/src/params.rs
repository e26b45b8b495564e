use serde::{Deserialize, Serialize};
use std::ops::Deref;

use crate::error::{Error, Result};

/// Physical coefficients of the coupled system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub r: f64,
    #[serde(default)]
    pub a1: f64,
    #[serde(default)]
    pub a2: f64,
}

impl SystemParams {
    pub fn new(a: f64, b: f64, c: f64, r: f64) -> Self {
        Self { a, b, c, r, a1: 0.0, a2: 0.0 }
    }

    pub fn with_nonlinear(mut self, a1: f64, a2: f64) -> Self {
        self.a1 = a1;
        self.a2 = a2;
        self
    }

    pub fn validate(self) -> Result<ValidatedParams> {
        validate_params(self)
    }
}

/// Parameters that passed `validate_params`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ValidatedParams(SystemParams);

impl Deref for ValidatedParams {
    type Target = SystemParams;
    fn deref(&self) -> &SystemParams {
        &self.0
    }
}

impl ValidatedParams {
    pub fn raw(&self) -> SystemParams {
        self.0
    }

    /// 1 - a^2 b
    pub fn gap(&self) -> f64 {
        1.0 - self.a * self.a * self.b
    }

    /// Weight b/c of the u-component in the state inner product.
    pub fn u_weight(&self) -> f64 {
        self.b / self.c
    }

    /// Row-major dispersion matrix [[1, a], [ab/c, 1/c]].
    pub fn dispersion(&self) -> [[f64; 2]; 2] {
        let SystemParams { a, b, c, .. } = self.0;
        [[1.0, a], [a * b / c, 1.0 / c]]
    }

    /// Parameters whose dispersion matrix is the transpose of this one.
    pub fn transposed(&self) -> ValidatedParams {
        let SystemParams { a, b, c, r, a1, a2 } = self.0;
        ValidatedParams(SystemParams { a: a * b / c, b: c * c / b, c, r, a1, a2 })
    }

    pub fn linear_part(&self) -> ValidatedParams {
        ValidatedParams(SystemParams { a1: 0.0, a2: 0.0, ..self.0 })
    }
}

pub fn validate_params(p: SystemParams) -> Result<ValidatedParams> {
    let finite = [p.a, p.b, p.c, p.r, p.a1, p.a2].iter().all(|x| x.is_finite());
    if !finite {
        return Err(Error::InvalidParams("non-finite coefficient".into()));
    }
    if p.b <= 0.0 {
        return Err(Error::InvalidParams(format!("b>0 violated (b={})", p.b)));
    }
    if p.c <= 0.0 {
        return Err(Error::InvalidParams(format!("c>0 violated (c={})", p.c)));
    }
    let gap = 1.0 - p.a * p.a * p.b;
    if gap <= 0.0 {
        return Err(Error::InvalidParams(format!("1-a^2 b>0 violated (1-a^2 b={gap})")));
    }
    Ok(ValidatedParams(p))
}
