//! Experiment configuration.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::PathBuf;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::critical::IndexConvention;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::hum::ControlConfig;
use crate::nonlinear::NonlinearForm;
use crate::params::SystemParams;
use crate::state::{BoundaryData, Channel, StatePair};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Simulate,
    Adjoint,
    CriticalAtlas,
    WitnessScan,
    GramianMargin,
    Control,
    NonlinearControl,
    VerifySuite,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Self::Simulate => "simulate",
            Self::Adjoint => "adjoint",
            Self::CriticalAtlas => "critical-atlas",
            Self::WitnessScan => "witness-scan",
            Self::GramianMargin => "gramian-margin",
            Self::Control => "control",
            Self::NonlinearControl => "nonlinear-control",
            Self::VerifySuite => "verify-suite",
        }
    }
}

/// A spatial profile for initial, final or target states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StateSpec {
    Zero,
    /// amplitude * sin(mode pi x / L) in u and/or v
    Sine { amplitude: f64, mode: u32, #[serde(default = "yes")] u: bool, #[serde(default)] v: bool },
    /// amplitude * sin^4(pi x / L) in both components, vanishing to third order at the ends
    Bump { amplitude: f64 },
    /// random series sum_j c_j sin(j pi x / L) sin(pi x / L) / j with c_j uniform in [-1, 1];
    /// each term meets the homogeneous boundary conditions
    Random { amplitude: f64, modes: u32 },
}

fn yes() -> bool {
    true
}

impl StateSpec {
    pub fn build(&self, g: &Grid, rng: &mut ChaCha8Rng) -> StatePair {
        let l = g.length;
        match *self {
            StateSpec::Zero => StatePair::zeros(g.nx),
            StateSpec::Sine { amplitude, mode, u, v } => {
                let f = move |x: f64| amplitude * (mode as f64 * PI * x / l).sin();
                StatePair::from_fn(g, |x| if u { f(x) } else { 0.0 }, |x| if v { f(x) } else { 0.0 })
            }
            StateSpec::Bump { amplitude } => {
                let f = move |x: f64| amplitude * (PI * x / l).sin().powi(4);
                StatePair::from_fn(g, f, f)
            }
            StateSpec::Random { amplitude, modes } => {
                let coeffs: Vec<[f64; 2]> =
                    (0..modes).map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect();
                let field = |k: usize| {
                    let coeffs = &coeffs;
                    move |x: f64| -> f64 {
                        coeffs
                            .iter()
                            .enumerate()
                            .map(|(j, c)| c[k] * ((j + 1) as f64 * PI * x / l).sin() / (j + 1) as f64)
                            .sum::<f64>()
                            * (PI * x / l).sin()
                            * amplitude
                    }
                };
                StatePair::from_fn(g, field(0), field(1))
            }
        }
    }

    pub fn scaled(&self, s: f64) -> StateSpec {
        match self.clone() {
            StateSpec::Zero => StateSpec::Zero,
            StateSpec::Sine { amplitude, mode, u, v } => StateSpec::Sine { amplitude: amplitude * s, mode, u, v },
            StateSpec::Bump { amplitude } => StateSpec::Bump { amplitude: amplitude * s },
            StateSpec::Random { amplitude, modes } => StateSpec::Random { amplitude: amplitude * s, modes },
        }
    }
}

/// amplitude * sin(2 pi frequency t + phase) on one channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Wave {
    pub amplitude: f64,
    pub frequency: f64,
    #[serde(default)]
    pub phase: f64,
}

pub fn boundary_from_waves(g: &Grid, waves: &BTreeMap<String, Wave>) -> Result<BoundaryData> {
    let mut bd = BoundaryData::zeros(g.nt);
    for (name, w) in waves {
        let ch = Channel::ALL
            .into_iter()
            .find(|c| c.name() == name)
            .ok_or_else(|| Error::Config(format!("unknown boundary channel {name:?}")))?;
        *bd.channel_mut(ch) =
            g.times().iter().map(|&t| w.amplitude * (2.0 * PI * w.frequency * t + w.phase).sin()).collect();
    }
    Ok(bd)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    pub hum_tol: f64,
    pub hum_maxit: usize,
    pub tikhonov: f64,
    pub picard_tol: f64,
    pub picard_maxit: usize,
    pub picard_damping: f64,
    pub outer_tol: f64,
    pub outer_maxit: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hum_tol: 1e-3,
            hum_maxit: 300,
            tikhonov: 0.0,
            picard_tol: 1e-10,
            picard_maxit: 50,
            picard_damping: 1.0,
            outer_tol: 1e-3,
            outer_maxit: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub params: SystemParams,
    pub grid: Grid,
    pub config: ControlConfig,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub tolerances: Tolerances,
    /// initial state for forward runs and controllers
    pub init: StateSpec,
    /// terminal target for controllers, final data for adjoint runs
    pub target: StateSpec,
    /// boundary inputs for simulate, keyed by channel name
    pub boundary: BTreeMap<String, Wave>,
    pub nonlinear: bool,
    pub nonlinear_form: NonlinearForm,
    pub l_max: f64,
    pub index_convention: IndexConvention,
    /// grid points per sign of p for witness scans
    pub p_points: usize,
    /// sine modes per component for the Gramian margin
    pub margin_modes: usize,
    /// compute margins in the atlas (one Gramian projection per candidate)
    pub atlas_margin: bool,
    /// time slices written to trajectory CSVs (evenly strided, endpoints kept)
    pub max_output_slices: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: Experiment::Simulate,
            params: SystemParams::new(0.5, 1.0, 1.0, 1.0),
            grid: Grid { length: 1.0, horizon: 2.0, nx: 101, nt: 1000 },
            config: ControlConfig::FourControl,
            seed: 0,
            output_dir: PathBuf::from("kdvduo-out"),
            tolerances: Tolerances::default(),
            init: StateSpec::Zero,
            target: StateSpec::Sine { amplitude: 0.1, mode: 1, u: true, v: false },
            boundary: BTreeMap::new(),
            nonlinear: false,
            nonlinear_form: NonlinearForm::Coupling,
            l_max: 20.0,
            index_convention: IndexConvention::WithZero,
            p_points: 200,
            margin_modes: 8,
            atlas_margin: false,
            max_output_slices: 201,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }

    /// Initial state and target drawn in a fixed order from the seeded generator.
    pub fn states(&self) -> (StatePair, StatePair) {
        let mut rng = self.rng();
        let init = self.init.build(&self.grid, &mut rng);
        let target = self.target.build(&self.grid, &mut rng);
        (init, target)
    }
}
