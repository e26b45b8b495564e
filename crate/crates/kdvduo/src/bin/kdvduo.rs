use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kdvduo::harness::{exit_code_for, run, sweep, Axis, Experiment, ExperimentConfig, Outcome};
use kdvduo::Result;

#[derive(Parser)]
#[command(name = "kdvduo", version, about = "Coupled KdV-KdV boundary control experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON experiment configuration
    #[arg(long)]
    config: Option<PathBuf>,
    /// output directory (overrides the configuration)
    #[arg(long)]
    out: Option<PathBuf>,
    /// random seed (overrides the configuration)
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// forward simulation
    Simulate(Common),
    /// adjoint solve in both modes
    Adjoint(Common),
    /// critical length atlas
    Atlas(Common),
    /// spectral witness scan at the configured length
    Witness(Common),
    /// Gramian observability margins
    Margin(Common),
    /// linear boundary control
    Control(Common),
    /// nonlinear boundary control
    Nlcontrol(Common),
    /// verification suite
    Verify(Common),
    /// repeat the control experiment along one axis
    Sweep {
        #[command(flatten)]
        common: Common,
        /// L, T or amplitude
        #[arg(long)]
        axis: Axis,
        /// comma separated values
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
}

fn load(c: &Common, experiment: Experiment) -> Result<ExperimentConfig> {
    let mut cfg = match &c.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    cfg.experiment = experiment;
    if let Some(o) = &c.out {
        cfg.output_dir = o.clone();
    }
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<Outcome> {
    let (common, exp) = match &cli.command {
        Command::Simulate(c) => (c, Experiment::Simulate),
        Command::Adjoint(c) => (c, Experiment::Adjoint),
        Command::Atlas(c) => (c, Experiment::CriticalAtlas),
        Command::Witness(c) => (c, Experiment::WitnessScan),
        Command::Margin(c) => (c, Experiment::GramianMargin),
        Command::Control(c) => (c, Experiment::Control),
        Command::Nlcontrol(c) => (c, Experiment::NonlinearControl),
        Command::Verify(c) => (c, Experiment::VerifySuite),
        Command::Sweep { common, axis, values } => {
            let mut cfg = load(common, Experiment::Control)?;
            if cfg.nonlinear {
                cfg.experiment = Experiment::NonlinearControl;
            }
            let (outcome, rows) = sweep(&cfg, *axis, values, &cfg.output_dir)?;
            for r in rows {
                println!("{:e}\tmargin={:e}\titerations={}\t{}", r.value, r.margin, r.iterations, r.status);
            }
            return Ok(outcome);
        }
    };
    let cfg = load(common, exp)?;
    let (outcome, metrics) = run(&cfg, &cfg.output_dir)?;
    for (k, v) in metrics {
        println!("{k}\t{v}");
    }
    Ok(outcome)
}

fn main() -> ExitCode {
    if let Ok(n) = std::env::var("KDVDUO_THREADS") {
        match n.parse::<usize>() {
            Ok(n) if n > 0 => {
                rayon::ThreadPoolBuilder::new().num_threads(n).build_global().ok();
            }
            _ => {
                eprintln!("KDVDUO_THREADS must be a positive integer, got {n:?}");
                return ExitCode::from(1);
            }
        }
    }
    match execute(Cli::parse()) {
        Ok(o) => {
            if o != Outcome::Success {
                eprintln!("run finished without converging; see manifest.json");
            }
            ExitCode::from(o.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e) as u8)
        }
    }
}
