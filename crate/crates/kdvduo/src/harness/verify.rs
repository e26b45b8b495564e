//! Self-checks run by the `verify-suite` experiment.

use std::path::Path;

use rand::RngExt;
use rand_chacha::ChaCha8Rng;

use super::config::{ExperimentConfig, StateSpec};
use super::output::{fmt, write_table};
use super::{Outcome, Recorder};
use crate::critical::{enumerate_candidates, IndexConvention};
use crate::diagonalization::{compute_decoupling, conjugation_defect};
use crate::error::Result;
use crate::grid::Grid;
use crate::hum::{gramian_apply, ControlConfig};
use crate::linear::{solve_forward_linear, transpose_defect, CoupledSolver};
use crate::mms::{coupled_error, coupled_error_diagonal, observed_orders, scalar_error, Profile};
use crate::norms::{pairing, x_norm};
use crate::params::{SystemParams, ValidatedParams};
use crate::state::{BoundaryData, Channel};
use crate::time_sobolev::{fractional_time_operator, SobolevMode, SobolevSpec};

/// One verification check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub threshold: f64,
    /// pass when value >= threshold instead of <=
    pub at_least: bool,
}

impl Check {
    fn below(name: &'static str, value: f64, threshold: f64) -> Self {
        Self { name, value, threshold, at_least: false }
    }

    fn above(name: &'static str, value: f64, threshold: f64) -> Self {
        Self { name, value, threshold, at_least: true }
    }

    pub fn passed(&self) -> bool {
        if self.at_least { self.value >= self.threshold } else { self.value <= self.threshold }
    }
}

const LEVELS: [(usize, usize); 2] = [(51, 250), (101, 1000)];

fn orders(err: impl Fn(&Grid) -> Result<f64>) -> Result<f64> {
    let mut errs = Vec::new();
    let mut dxs = Vec::new();
    for (nx, nt) in LEVELS {
        let g = Grid::new(1.0, 1.0, nx, nt)?;
        errs.push(err(&g)?);
        dxs.push(g.dx());
    }
    Ok(observed_orders(&errs, &dxs).into_iter().fold(f64::INFINITY, f64::min))
}

fn random_boundary(g: &Grid, rng: &mut ChaCha8Rng) -> BoundaryData {
    let mut bd = BoundaryData::zeros(g.nt);
    for c in Channel::ALL {
        bd.channel_mut(c).iter_mut().for_each(|x| *x = rng.random_range(-1.0..1.0));
    }
    bd
}

fn random_params(rng: &mut ChaCha8Rng) -> Result<ValidatedParams> {
    let b: f64 = rng.random_range(0.1..5.0);
    let c = rng.random_range(0.1..5.0);
    let a = rng.random_range(-0.95..0.95) / b.sqrt();
    let r = rng.random_range(0.0..3.0);
    SystemParams::new(a, b, c, r).validate()
}

/// Runs every check for the configured parameters.
pub fn checks(cfg: &ExperimentConfig) -> Result<Vec<Check>> {
    let p = cfg.params.validate()?.linear_part();
    let mut rng = cfg.rng();
    let noise = StateSpec::Random { amplitude: 1.0, modes: 6 };
    let mut out = Vec::new();

    out.push(Check::above("scalar_order", orders(|g| scalar_error(1.0, g, Profile::Sine2))?, 1.8));
    out.push(Check::above("coupled_order", orders(|g| coupled_error(&p, g, Profile::Sine2, Profile::Cosine))?, 1.8));
    let g = Grid::new(1.0, 1.0, 101, 1000)?;
    let ratio = coupled_error_diagonal(&p, &g, Profile::Sine2, Profile::Cosine)?
        / coupled_error(&p, &g, Profile::Sine2, Profile::Cosine)?;
    out.push(Check::below("diagonal_to_monolithic_error_ratio", ratio, 2.0));

    let g = Grid::new(1.0, 0.5, 41, 60)?;
    let solver = CoupledSolver::new(&p, &g)?;
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let init = noise.build(&g, &mut rng);
        let z = noise.build(&g, &mut rng);
        let bd = random_boundary(&g, &mut rng);
        worst = worst.max(transpose_defect(&solver, &init, &bd, &z)?);
    }
    out.push(Check::below("transpose_identity_defect", worst, 1e-12));

    let g = Grid::new(1.0, 1.0, 101, 300)?;
    let mut growth = 0.0f64;
    for _ in 0..3 {
        let init = noise.build(&g, &mut rng);
        let (traj, _) = solve_forward_linear(&p, &g, &init, &BoundaryData::zeros(g.nt), None)?;
        let norms: Vec<f64> = traj.slices.iter().map(|s| x_norm(s, &p, &g)).collect::<Result<_>>()?;
        growth = norms.windows(2).map(|w| w[1] / w[0] - 1.0).fold(growth, f64::max);
    }
    out.push(Check::below("energy_growth_per_step", growth, 1e-8));

    let mut conj = 0.0f64;
    for _ in 0..200 {
        let q = random_params(&mut rng)?;
        conj = conj.max(conjugation_defect(&q, &compute_decoupling(&q)?));
    }
    out.push(Check::below("conjugation_defect", conj, 1e-12));

    let spec = SobolevSpec::new(1.0 / 3.0, 2.0, SobolevMode::Inhomogeneous)?;
    let series: Vec<f64> = (0..=256).map(|_| rng.random_range(-1.0..1.0)).collect();
    let back = fractional_time_operator(&fractional_time_operator(&series, 1.0 / 3.0, &spec)?, -1.0 / 3.0, &spec)?;
    let pair = series[1..256].iter().zip(&back[1..256]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    out.push(Check::below("time_operator_inverse_pair", pair, 1e-10));

    if p.r > 0.0 {
        let first = enumerate_candidates(&p, 20.0, IndexConvention::WithZero)?;
        let resid = first
            .iter()
            .filter_map(|c| c.vieta_residuals)
            .map(|r| r[0].abs().max(r[1].abs()))
            .fold(0.0, f64::max);
        out.push(Check::below("vieta_e1_e2_residual", resid, 1e-10));
    }

    let g = Grid::new(1.0, 1.0, 41, 200)?;
    let z1 = noise.build(&g, &mut rng);
    let z2 = noise.build(&g, &mut rng);
    let mut sym = 0.0f64;
    for c in [ControlConfig::FourControl, ControlConfig::OneControl] {
        let a = pairing(&gramian_apply(&p, &g, c, &z1)?, &z2, &g)?;
        let b = pairing(&z1, &gramian_apply(&p, &g, c, &z2)?, &g)?;
        sym = sym.max((a - b).abs() / a.abs().max(b.abs()));
    }
    out.push(Check::below("gramian_symmetry", sym, 1e-8));
    Ok(out)
}

pub fn run_suite(cfg: &ExperimentConfig, out: &Path, rec: &mut Recorder) -> Result<Outcome> {
    let list = checks(cfg)?;
    let rows: Vec<Vec<String>> = list
        .iter()
        .map(|c| {
            let rel = if c.at_least { ">=" } else { "<=" };
            vec![c.name.to_string(), fmt(c.value), format!("{rel}{}", fmt(c.threshold)), c.passed().to_string()]
        })
        .collect();
    let f = write_table(out, "verify", &["check", "value", "threshold", "passed"], &rows, None)?;
    rec.file(&f);
    for c in &list {
        rec.op(c.name, if c.passed() { "pass" } else { "fail" }, Some(fmt(c.value)));
        rec.metric(c.name, c.value);
    }
    let failed = list.iter().filter(|c| !c.passed()).count();
    rec.metric("failed_checks", failed);
    Ok(if failed == 0 { Outcome::Success } else { Outcome::NotConverged })
}
