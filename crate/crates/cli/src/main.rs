//! `hsc`: plan parking paths, run shared-control trials and experiments, and
//! classify logged torque series.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | file system error |
//! | 2 | usage, configuration or input CSV error |
//! | 3 | `plan`: no path satisfies the turning radius |
//! | 4 | `simulate`: the scenario's path cannot be planned |
//! | 5 | `simulate`: the simulation diverged |
//! | 6 | `experiment`: at least one trial failed |

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hsc_core::assist::GainCondition;
use hsc_core::planner::{Pose2D, TravelDirection};

use crate::output::Failure;

#[derive(Debug, Parser)]
#[command(name = "hsc", version, about = "Haptic shared control parking simulator")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// Run configuration file (TOML sections, unit-suffixed keys).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Directory receiving every output file.
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    out_dir: PathBuf,
    /// Overrides the scenario seed (simulate) or the experiment base seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Plan the shortest admissible Bezier path between two poses.
    Plan(PlanArgs),
    /// Run one closed-loop trial.
    Simulate(SimulateArgs),
    /// Run the four-phase protocol across gain conditions.
    Experiment(ExperimentArgs),
    /// Label a logged torque series with cooperative states.
    Classify(ClassifyArgs),
    /// Print the effective configuration (defaults, file and environment).
    Config,
}

#[derive(Debug, Args)]
struct PlanArgs {
    /// Start pose `x,y,heading` in meters and radians.
    #[arg(long, value_parser = parse_pose, allow_hyphen_values = true)]
    start: Pose2D,
    /// Goal pose `x,y,heading` in meters and radians.
    #[arg(long, value_parser = parse_pose, allow_hyphen_values = true)]
    goal: Pose2D,
    /// Minimum turning radius in meters [default: from the configuration].
    #[arg(long, value_name = "M")]
    min_radius: Option<f64>,
    #[arg(long, value_enum)]
    travel: Option<Travel>,
    /// Path file name inside the output directory.
    #[arg(long, default_value = "path.csv")]
    output: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Travel {
    Forward,
    Reverse,
}

impl From<Travel> for TravelDirection {
    fn from(t: Travel) -> Self {
        match t {
            Travel::Forward => TravelDirection::Forward,
            Travel::Reverse => TravelDirection::Reverse,
        }
    }
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Assist gain condition [default: from the configuration].
    #[arg(long)]
    condition: Option<GainCondition>,
    /// Driver skill between the novice (0) and expert (1) anchors.
    #[arg(long)]
    skill: Option<f64>,
    /// Sideways shift of the driver's own slot, meters.
    #[arg(long, allow_hyphen_values = true)]
    intent_offset: Option<f64>,
    /// Skip the SVG figures.
    #[arg(long)]
    no_plots: bool,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    /// Skip the SVG figure.
    #[arg(long)]
    no_plots: bool,
}

#[derive(Debug, Args)]
struct ClassifyArgs {
    /// Input CSV with columns `t,tau_c,tau_das,v_signal`.
    #[arg(long)]
    input: PathBuf,
    /// Output file name inside the output directory.
    #[arg(long, default_value = "classified.csv")]
    output: PathBuf,
    /// Pseudo-work window in seconds [default: from the configuration].
    #[arg(long, value_name = "S")]
    window: Option<f64>,
    /// Driver threshold γ1² [default: from the configuration].
    #[arg(long, allow_hyphen_values = true)]
    gamma1_sq: Option<f64>,
    /// Assist threshold γ2² [default: from the configuration].
    #[arg(long, allow_hyphen_values = true)]
    gamma2_sq: Option<f64>,
    /// Input column holding the velocity signal.
    #[arg(long, default_value = "v_signal")]
    v_column: String,
}

fn parse_pose(s: &str) -> Result<Pose2D, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [x, y, h] = parts.as_slice() else {
        return Err("expected `x,y,heading`".into());
    };
    let num = |v: &str| v.parse::<f64>().map_err(|e| format!("`{v}`: {e}"));
    let (x, y, h) = (num(x)?, num(y)?, num(h)?);
    if !(x.is_finite() && y.is_finite() && h.is_finite()) {
        return Err("pose components must be finite".into());
    }
    Ok(Pose2D::new(x, y, h))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure { code, message }) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let cfg = commands::load_config(&cli.global)?;
    match cli.command {
        Command::Plan(a) => commands::plan(&cfg, &cli.global, a),
        Command::Simulate(a) => commands::simulate(cfg, &cli.global, a),
        Command::Experiment(a) => commands::experiment(cfg, &cli.global, a),
        Command::Classify(a) => commands::classify(&cfg, &cli.global, a),
        Command::Config => {
            print!("{}", cfg.to_text());
            Ok(())
        }
    }
}
