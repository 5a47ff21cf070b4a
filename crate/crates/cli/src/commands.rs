use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use clap::ValueEnum;
use serde::Serialize;

use futurecone::cones::{self, ConeError, LeafMethod, SamplingParams};
use futurecone::engagement::{self, EngagementConfig, EngagementError, Outcome};
use futurecone::scenario::ScenarioFile;
use futurecone::strategies::parse_strategy_spec;
use futurecone::tables;
use futurecone::validation::{self, DecoyScenario, ScenarioDistribution, ValidationError};

use crate::svg;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Analytic,
    Sampled,
    /// Closed form where available, sampled otherwise.
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Sufficiency,
    Necessity,
    Decoy,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Capability(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Capability(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Capability(m) => f.write_str(m),
        }
    }
}

impl From<ConeError> for CliError {
    fn from(e: ConeError) -> Self {
        match e {
            ConeError::UnsupportedAnalytic(_) => CliError::Capability(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<EngagementError> for CliError {
    fn from(e: EngagementError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<ValidationError> for CliError {
    fn from(e: ValidationError) -> Self {
        CliError::Usage(e.to_string())
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Usage(format!("{}: {e}", path.display()))
}

fn load(path: &Path) -> Result<ScenarioFile, CliError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    ScenarioFile::from_json_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| io_err(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
    text.push('\n');
    fs::write(path, text).map_err(|e| io_err(path, e))
}

fn leaf_method(method: Method, sampling: SamplingParams) -> LeafMethod {
    match method {
        Method::Analytic => LeafMethod::analytic(),
        Method::Sampled => LeafMethod::Sampled(sampling),
        Method::Auto => LeafMethod::analytic_or_sampled(sampling),
    }
}

pub fn cone(
    scenario: &Path,
    pursuer: bool,
    method: Method,
    sampling: SamplingParams,
    ball_points: usize,
    out: &Path,
) -> Result<u8, CliError> {
    let sc = load(scenario)?;
    let player = if pursuer { sc.pursuer } else { sc.evader };
    let w = sc.window;
    let cone = cones::build_cone(
        &player.model,
        &player.state(),
        w.t_start,
        w.t_end,
        w.n_leaves,
        leaf_method(method, sampling),
    )?;
    let mut file = create(out)?;
    tables::write_leaves(&mut file, &cone, ball_points.max(1))
        .map_err(|e| io_err(out, e))?;
    file.flush().map_err(|e| io_err(out, e))?;
    Ok(0)
}

pub fn check(
    scenario: &Path,
    tol: f64,
    method: Method,
    sampling: SamplingParams,
    json: Option<&Path>,
) -> Result<u8, CliError> {
    if !(tol >= 0.0 && tol.is_finite()) {
        return Err(CliError::Usage(format!("--tol must be a nonnegative number, got {tol}")));
    }
    let sc = load(scenario)?;
    let w = sc.window;
    let method = leaf_method(method, sampling);
    let build = |p: &futurecone::scenario::PlayerSpec| {
        cones::build_cone(&p.model, &p.state(), w.t_start, w.t_end, w.n_leaves, method)
    };
    let report = cones::cone_contains(&build(&sc.pursuer)?, &build(&sc.evader)?, tol)?;
    println!("{}", serde_json::to_string(&report).expect("reports serialize"));
    if let Some(path) = json {
        write_json(path, &report)?;
    }
    Ok(if report.first_containment_time.is_some() { 0 } else { 1 })
}

#[derive(Serialize)]
struct SimulationSummary {
    #[serde(flatten)]
    outcome: Outcome,
    min_separation: f64,
    min_separation_time: f64,
    samples: usize,
}

pub fn simulate(
    scenario: &Path,
    pursuit: &str,
    evade: &str,
    traj: &Path,
    svg_path: Option<&Path>,
) -> Result<u8, CliError> {
    let sc = load(scenario)?;
    let parse = |flag: &str, spec: &str| {
        parse_strategy_spec(spec).map_err(|e| CliError::Usage(format!("{flag}: {e}")))
    };
    let pursuer = sc.pursuer_player(parse("--pursuit", pursuit)?);
    let evader = sc.evader_player(parse("--evade", evade)?);
    let result = engagement::simulate_seeded(&sc.engagement, &pursuer, &evader, sc.seed)?;

    let mut file = create(traj)?;
    tables::write_trajectory(&mut file, &result).map_err(|e| io_err(traj, e))?;
    file.flush().map_err(|e| io_err(traj, e))?;
    if let Some(path) = svg_path {
        fs::write(path, svg::render(&result, sc.engagement.capture_radius))
            .map_err(|e| io_err(path, e))?;
    }
    let summary = SimulationSummary {
        outcome: result.outcome,
        min_separation: result.min_separation,
        min_separation_time: result.min_separation_time,
        samples: result.trajectory_x.len(),
    };
    println!("{}", serde_json::to_string(&summary).expect("summaries serialize"));
    Ok(if result.outcome.is_intercept() { 0 } else { 1 })
}

pub fn validate(mode: Mode, n: Option<usize>, seed: u64, json: Option<&Path>) -> Result<u8, CliError> {
    let cap = validation::thread_cap_from_env()?;
    let (text, success) = validation::with_thread_cap(cap, || -> Result<(String, bool), CliError> {
        Ok(match mode {
            Mode::Sufficiency => {
                let dist = ScenarioDistribution::faster_pursuer(seed);
                let policies = validation::default_evasion_policies(seed);
                let r = validation::validate_sufficiency(&dist, n.unwrap_or(100), &policies)?;
                (serde_json::to_string_pretty(&r).unwrap(), r.all_succeeded())
            }
            Mode::Necessity => {
                let dist = ScenarioDistribution::faster_evader(seed);
                let policies = validation::default_pursuit_policies();
                let r = validation::validate_necessity(&dist, n.unwrap_or(100), &policies)?;
                (serde_json::to_string_pretty(&r).unwrap(), r.all_succeeded())
            }
            Mode::Decoy => {
                let sc = DecoyScenario::single_interceptor(seed);
                let config = EngagementConfig::new(0.01, 5.0, 0.01);
                let r = validation::run_decoy(&sc, &config, n.unwrap_or(300))?;
                (serde_json::to_string_pretty(&r).unwrap(), r.claim_holds)
            }
        })
    })?;
    match json {
        Some(path) => fs::write(path, format!("{text}\n")).map_err(|e| io_err(path, e))?,
        None => println!("{text}"),
    }
    Ok(if success { 0 } else { 1 })
}
