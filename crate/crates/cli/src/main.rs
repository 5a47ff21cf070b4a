use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod commands;
mod svg;

use commands::{Method, Mode};

/// Future-cone containment, pursuit/evasion simulation and Monte Carlo validation.
///
/// Exit codes: 0 affirmative verdict, 1 negative verdict, 2 usage or
/// configuration error, 3 capability error.
#[derive(Debug, Parser)]
#[command(name = "futurecone", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Which {
    /// The pursuer (interceptor).
    X,
    /// The evader (target).
    Y,
}

#[derive(Debug, clap::Args)]
struct SamplingArgs {
    /// Control sequences per sampled leaf.
    #[arg(long, default_value_t = 1000)]
    n_controls: usize,
    /// Control switches per sampled sequence.
    #[arg(long, default_value_t = 0)]
    n_switches: usize,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the leaves of one player's future cone as CSV.
    Cone {
        scenario: PathBuf,
        #[arg(long, value_enum, default_value = "x")]
        player: Which,
        #[arg(long, value_enum, default_value = "analytic")]
        method: Method,
        #[command(flatten)]
        sampling: SamplingArgs,
        /// Boundary points written per ball leaf.
        #[arg(long, default_value_t = 64)]
        ball_points: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Decide containment of the evader cone in the pursuer cone.
    Check {
        scenario: PathBuf,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        tol: f64,
        #[arg(long, value_enum, default_value = "auto")]
        method: Method,
        #[command(flatten)]
        sampling: SamplingArgs,
        /// Also write the report to this file.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Run one engagement and write both trajectories.
    Simulate {
        scenario: PathBuf,
        /// Pursuer strategy, e.g. `pure_pursuit` or `leaf_plan_pursuit:replan_every=5`.
        #[arg(long, default_value = "leaf_plan_pursuit")]
        pursuit: String,
        /// Evader strategy, e.g. `greedy_escape:horizon=0.5`.
        #[arg(long, default_value = "straight_line")]
        evade: String,
        #[arg(long)]
        traj: PathBuf,
        /// Render the engagement (projected on the x-y plane) as SVG.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Run a seeded Monte Carlo suite.
    Validate {
        #[arg(long, value_enum)]
        mode: Mode,
        /// Scenarios (or decoy trials); defaults to 100, or 300 for decoy.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Write the report here instead of stdout.
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Cone {
            scenario,
            player,
            method,
            sampling,
            ball_points,
            out,
        } => commands::cone(&scenario, player == Which::X, method, sampling.into(), ball_points, &out),
        Command::Check {
            scenario,
            tol,
            method,
            sampling,
            json,
        } => commands::check(&scenario, tol, method, sampling.into(), json.as_deref()),
        Command::Simulate {
            scenario,
            pursuit,
            evade,
            traj,
            svg,
        } => commands::simulate(&scenario, &pursuit, &evade, &traj, svg.as_deref()),
        Command::Validate { mode, n, seed, json } => commands::validate(mode, n, seed, json.as_deref()),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

impl From<SamplingArgs> for futurecone::cones::SamplingParams {
    fn from(a: SamplingArgs) -> Self {
        Self {
            n_controls: a.n_controls,
            n_switches: a.n_switches,
        }
    }
}
