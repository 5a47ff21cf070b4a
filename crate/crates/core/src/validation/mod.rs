//! Seeded Monte Carlo suites for the containment intercept criterion.
//!
//! The sufficiency suite samples scenarios whose pursuer cone robustly
//! contains the evader cone and checks that [`StrategyKind::LeafPlanPursuit`]
//! captures every evader policy tried. The necessity suite samples scenarios
//! with no containment anywhere in the window and checks that
//! [`StrategyKind::GreedyEscape`] survives every pursuit policy tried. Only
//! finitely many policies are tried, so a clean report is evidence and not
//! proof.

mod decoy;

pub use decoy::{
    assign_targets, run_decoy, AssignmentPolicy, DecoyReport, DecoyScenario, DecoyTrial,
};

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cones::{self, ConeError, LeafMethod, SamplingParams};
use crate::dynamics::{DynamicsModel, VehicleState};
use crate::engagement::{self, EngagementConfig, EngagementError, EngagementResult, Outcome, Player};
use crate::sampling::mix_seed;
use crate::strategies::StrategyKind;
use crate::vector::Vector;

/// Environment variable capping the number of validation worker threads.
pub const THREADS_ENV: &str = "FUTURECONE_THREADS";

/// Consecutive filter rejections tolerated before giving up on a scenario.
pub const MAX_REJECTIONS: usize = 1000;

const POLICY_NOTE: &str = "Evidence over a finite set of policies only; \
     maneuvers outside this set are not covered.";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ValidationError {
    #[error("policy list is empty")]
    EmptyPolicies,
    #[error("scenario {index}: {attempts} consecutive samples failed the containment filter")]
    UnsatisfiableDistribution { index: usize, attempts: usize },
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("{THREADS_ENV} must be a positive integer, got {0:?}")]
    InvalidThreads(String),
    #[error(transparent)]
    Engagement(#[from] EngagementError),
    #[error(transparent)]
    Cone(#[from] ConeError),
}

/// Closed interval `[lo, hi]` with `0 < lo <= hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
}

impl Range {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn fixed(value: f64) -> Self {
        Self::new(value, value)
    }

    fn check(&self, name: &str) -> Result<(), ValidationError> {
        if self.lo > 0.0 && self.lo <= self.hi && self.hi.is_finite() {
            Ok(())
        } else {
            Err(ValidationError::InvalidDistribution(format!(
                "{name} range [{}, {}] must be positive and nonempty",
                self.lo, self.hi
            )))
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        if self.lo == self.hi {
            self.lo
        } else {
            rng.gen_range(self.lo..=self.hi)
        }
    }
}

/// Parameter ranges for one vehicle model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelRange {
    BoundedSpeed { v_max: Range },
    DoubleIntegrator { a_max: Range, dv_budget: Option<Range> },
    Dubins { speed: Range, r_min: Range },
}

impl ModelRange {
    fn check(&self, name: &str) -> Result<(), ValidationError> {
        match self {
            Self::BoundedSpeed { v_max } => v_max.check(&format!("{name} v_max")),
            Self::DoubleIntegrator { a_max, dv_budget } => {
                a_max.check(&format!("{name} a_max"))?;
                dv_budget.map_or(Ok(()), |b| b.check(&format!("{name} dv_budget")))
            }
            Self::Dubins { speed, r_min } => {
                speed.check(&format!("{name} speed"))?;
                r_min.check(&format!("{name} r_min"))
            }
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> DynamicsModel {
        let model = match self {
            Self::BoundedSpeed { v_max } => DynamicsModel::bounded_speed(v_max.sample(rng)),
            Self::DoubleIntegrator { a_max, dv_budget } => {
                let a = a_max.sample(rng);
                DynamicsModel::double_integrator(a, dv_budget.map(|b| b.sample(rng)))
            }
            Self::Dubins { speed, r_min } => {
                let s = speed.sample(rng);
                DynamicsModel::dubins(s, r_min.sample(rng))
            }
        };
        model.expect("ranges are checked positive")
    }
}

/// Seeded family of two-player scenarios.
///
/// The pursuer starts at rest at the origin; the evader starts at rest at a
/// uniformly random bearing and a separation drawn from `separation`. Dubins
/// headings are uniform. The separation is the length scale for the
/// robust-margin filters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioDistribution {
    pub dimension: usize,
    pub pursuer: ModelRange,
    pub evader: ModelRange,
    pub separation: Range,
    pub t_start: f64,
    pub t_end: f64,
    pub n_leaves: usize,
    /// Engagement settings; `t_max` is forced to `t_end`.
    pub engagement: EngagementConfig,
    /// Filter margin as a fraction of the separation; 0 admits boundary cases.
    pub robust_fraction: f64,
    /// Leaf sampling for models without closed-form leaves.
    pub sampling: SamplingParams,
    pub seed: u64,
}

impl ScenarioDistribution {
    /// Faster ball-model pursuer (speed 2) against a speed-1 evader within unit range.
    pub fn faster_pursuer(seed: u64) -> Self {
        Self {
            dimension: 2,
            pursuer: ModelRange::BoundedSpeed { v_max: Range::fixed(2.0) },
            evader: ModelRange::BoundedSpeed { v_max: Range::fixed(1.0) },
            separation: Range::new(0.1, 1.0),
            t_start: 0.0,
            t_end: 5.0,
            n_leaves: 51,
            engagement: EngagementConfig::new(0.01, 5.0, 0.01),
            robust_fraction: 0.05,
            sampling: SamplingParams {
                n_controls: 256,
                n_switches: 1,
            },
            seed,
        }
    }

    /// Slower ball-model pursuer (speed 1) against a speed-2 evader at least one unit away.
    pub fn faster_evader(seed: u64) -> Self {
        Self {
            pursuer: ModelRange::BoundedSpeed { v_max: Range::fixed(1.0) },
            evader: ModelRange::BoundedSpeed { v_max: Range::fixed(2.0) },
            separation: Range::new(1.0, 3.0),
            ..Self::faster_pursuer(seed)
        }
    }

    pub fn validated(self) -> Result<Self, ValidationError> {
        let bad = |msg: String| Err(ValidationError::InvalidDistribution(msg));
        if !matches!(self.dimension, 2 | 3) {
            return bad(format!("dimension must be 2 or 3, got {}", self.dimension));
        }
        for (name, m) in [("pursuer", &self.pursuer), ("evader", &self.evader)] {
            m.check(name)?;
            if matches!(m, ModelRange::Dubins { .. }) && self.dimension != 2 {
                return bad(format!("{name}: Dubins vehicles are planar"));
            }
        }
        self.separation.check("separation")?;
        if !(self.t_start >= 0.0 && self.t_end > self.t_start && self.t_end.is_finite()) {
            return bad(format!("window [{}, {}] is invalid", self.t_start, self.t_end));
        }
        if self.n_leaves == 0 {
            return bad("n_leaves must be positive".into());
        }
        if !(self.robust_fraction >= 0.0 && self.robust_fraction.is_finite()) {
            return bad(format!("robust_fraction must be nonnegative, got {}", self.robust_fraction));
        }
        if self.sampling.n_controls < cones::MIN_CONTROLS {
            return bad("sampling needs at least 8 controls".into());
        }
        self.engagement_config()?;
        Ok(self)
    }

    pub fn engagement_config(&self) -> Result<EngagementConfig, ValidationError> {
        let cfg = EngagementConfig {
            t_max: self.t_end,
            ..self.engagement
        };
        Ok(cfg.validated()?)
    }

    /// Draws the raw (unfiltered) scenario for one rng state.
    fn draw(&self, rng: &mut ChaCha8Rng) -> (Player, Player) {
        let pursuer_model = self.pursuer.sample(rng);
        let evader_model = self.evader.sample(rng);
        let distance = self.separation.sample(rng);
        let bearing = random_direction(rng, self.dimension);
        let hx = rng.gen_range(-PI..PI);
        let hy = rng.gen_range(-PI..PI);
        let mut x = VehicleState::at(Vector::zeros(self.dimension), 0.0);
        let mut y = VehicleState::at(bearing * distance, 0.0);
        if matches!(pursuer_model, DynamicsModel::Dubins { .. }) {
            x = x.with_heading(hx);
            x.velocity = x.velocity_under(&pursuer_model);
        }
        if matches!(evader_model, DynamicsModel::Dubins { .. }) {
            y = y.with_heading(hy);
            y.velocity = y.velocity_under(&evader_model);
        }
        // Strategies are filled in per trial.
        (
            Player::new(pursuer_model, x, StrategyKind::PurePursuit),
            Player::new(evader_model, y, StrategyKind::PurePursuit),
        )
    }
}

fn random_direction(rng: &mut ChaCha8Rng, dim: usize) -> Vector {
    let theta = rng.gen_range(0.0..2.0 * PI);
    if dim == 2 {
        Vector::polar(theta)
    } else {
        let z: f64 = rng.gen_range(-1.0..=1.0);
        let r = (1.0 - z * z).max(0.0).sqrt();
        Vector::new3(r * theta.cos(), r * theta.sin(), z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValidationMode {
    Sufficiency,
    Necessity,
}

/// A filtered scenario, complete enough to replay without the distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioDescriptor {
    pub index: usize,
    /// Seed of the scenario's rng, derived from the master seed and index.
    pub seed: u64,
    /// Draws rejected by the filter before this one was accepted.
    pub rejected: usize,
    pub pursuer: Player,
    pub evader: Player,
    /// Largest containment margin over the window.
    pub max_margin: f64,
    pub scale: f64,
}

/// One (scenario, policy) trial that contradicted the expected outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialFailure {
    pub scenario: ScenarioDescriptor,
    pub policy_index: usize,
    pub engagement: EngagementConfig,
    pub pursuer: Player,
    pub evader: Player,
    pub stream: u64,
    pub outcome: Outcome,
    pub min_separation: f64,
}

impl TrialFailure {
    /// Re-runs the failing engagement from its stored descriptor.
    pub fn replay(&self) -> Result<EngagementResult, ValidationError> {
        Ok(engagement::simulate_seeded(
            &self.engagement,
            &self.pursuer,
            &self.evader,
            self.stream,
        )?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub mode: ValidationMode,
    pub note: String,
    pub seed: u64,
    pub robust_fraction: f64,
    /// False when boundary scenarios were admitted (zero filter margin).
    pub robust: bool,
    pub policies: Vec<StrategyKind>,
    pub n_scenarios: usize,
    pub n_policies_per_scenario: usize,
    pub successes: usize,
    pub failures: Vec<TrialFailure>,
    /// `None` for an empty run.
    pub success_rate: Option<f64>,
    pub empty: bool,
}

impl ValidationReport {
    pub fn all_succeeded(&self) -> bool {
        self.success_rate == Some(1.0)
    }
}

/// Default evader behaviours for the sufficiency suite.
pub fn default_evasion_policies(seed: u64) -> Vec<StrategyKind> {
    let mut policies = vec![
        StrategyKind::StraightLine { direction: None },
        StrategyKind::GreedyEscape { horizon: 0.5 },
    ];
    policies.extend((0..3).map(|k| StrategyKind::RandomManeuver {
        seed: mix_seed(seed, 0xD0D0 + k),
        dwell: 0.25,
    }));
    policies
}

/// Default pursuit behaviours for the necessity suite.
pub fn default_pursuit_policies() -> Vec<StrategyKind> {
    vec![StrategyKind::PurePursuit, StrategyKind::leaf_plan()]
}

/// The evader behaviour used against every pursuit policy in the necessity suite.
pub fn necessity_escape_policy() -> StrategyKind {
    StrategyKind::GreedyEscape { horizon: 0.5 }
}

/// Containment of the evader cone in the pursuer cone over the window.
pub fn scenario_containment(
    dist: &ScenarioDistribution,
    pursuer: &Player,
    evader: &Player,
) -> Result<cones::ContainmentReport, ValidationError> {
    let method = LeafMethod::analytic_or_sampled(dist.sampling);
    let build = |p: &Player| {
        cones::build_cone(&p.model, &p.state, dist.t_start, dist.t_end, dist.n_leaves, method)
    };
    Ok(cones::cone_contains(&build(pursuer)?, &build(evader)?, 0.0)?)
}

/// Whether a drawn scenario belongs to the suite for `mode`, and its
/// maximum margin.
pub fn passes_filter(
    mode: ValidationMode,
    dist: &ScenarioDistribution,
    pursuer: &Player,
    evader: &Player,
) -> Result<(bool, f64), ValidationError> {
    let report = scenario_containment(dist, pursuer, evader)?;
    let scale = pursuer.state.position.distance(&evader.state.position);
    let robust = dist.robust_fraction * scale;
    let max_margin = report.max_margin();
    let pass = match mode {
        ValidationMode::Sufficiency => {
            report.first_containment_time.is_some() && max_margin >= robust
        }
        ValidationMode::Necessity => report
            .per_time
            .iter()
            .all(|v| !v.verdict.contained && v.verdict.margin <= -robust),
    };
    Ok((pass, max_margin))
}

/// Draws scenario `index` of the suite, resampling until it passes the filter.
pub fn sample_scenario(
    mode: ValidationMode,
    dist: &ScenarioDistribution,
    index: usize,
) -> Result<ScenarioDescriptor, ValidationError> {
    let seed = mix_seed(dist.seed, index as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for rejected in 0..MAX_REJECTIONS {
        let (pursuer, evader) = dist.draw(&mut rng);
        let (pass, max_margin) = passes_filter(mode, dist, &pursuer, &evader)?;
        if pass {
            return Ok(ScenarioDescriptor {
                index,
                seed,
                rejected,
                pursuer,
                evader,
                max_margin,
                scale: pursuer.state.position.distance(&evader.state.position),
            });
        }
    }
    Err(ValidationError::UnsatisfiableDistribution {
        index,
        attempts: MAX_REJECTIONS,
    })
}

fn run_suite(
    mode: ValidationMode,
    dist: &ScenarioDistribution,
    n_scenarios: usize,
    policies: &[StrategyKind],
) -> Result<ValidationReport, ValidationError> {
    if policies.is_empty() {
        return Err(ValidationError::EmptyPolicies);
    }
    let dist = dist.validated()?;
    for p in policies {
        p.validated()
            .map_err(|e| ValidationError::InvalidDistribution(e.to_string()))?;
    }
    let config = dist.engagement_config()?;

    let per_scenario: Vec<Result<Vec<Option<TrialFailure>>, ValidationError>> = (0..n_scenarios)
        .into_par_iter()
        .map(|index| {
            let scenario = sample_scenario(mode, &dist, index)?;
            policies
                .iter()
                .enumerate()
                .map(|(policy_index, policy)| {
                    run_trial(mode, &config, &scenario, policy_index, *policy)
                })
                .collect()
        })
        .collect();

    let mut successes = 0;
    let mut failures = Vec::new();
    for scenario in per_scenario {
        for trial in scenario? {
            match trial {
                None => successes += 1,
                Some(f) => failures.push(f),
            }
        }
    }
    let trials = n_scenarios * policies.len();
    Ok(ValidationReport {
        mode,
        note: POLICY_NOTE.into(),
        seed: dist.seed,
        robust_fraction: dist.robust_fraction,
        robust: dist.robust_fraction > 0.0,
        policies: policies.to_vec(),
        n_scenarios,
        n_policies_per_scenario: policies.len(),
        successes,
        failures,
        success_rate: (trials > 0).then(|| successes as f64 / trials as f64),
        empty: trials == 0,
    })
}

fn run_trial(
    mode: ValidationMode,
    config: &EngagementConfig,
    scenario: &ScenarioDescriptor,
    policy_index: usize,
    policy: StrategyKind,
) -> Result<Option<TrialFailure>, ValidationError> {
    let (pursuit, evasion) = match mode {
        ValidationMode::Sufficiency => (StrategyKind::leaf_plan(), policy),
        ValidationMode::Necessity => (policy, necessity_escape_policy()),
    };
    let pursuer = Player {
        strategy: pursuit,
        ..scenario.pursuer
    };
    let evader = Player {
        strategy: evasion,
        ..scenario.evader
    };
    let stream = mix_seed(scenario.seed, policy_index as u64);
    let result = engagement::simulate_seeded(config, &pursuer, &evader, stream)?;
    let success = match (mode, result.outcome) {
        (ValidationMode::Sufficiency, Outcome::Intercept { t }) => t <= config.t_max,
        (ValidationMode::Sufficiency, Outcome::Escape) => false,
        (ValidationMode::Necessity, outcome) => outcome == Outcome::Escape,
    };
    Ok((!success).then(|| TrialFailure {
        scenario: *scenario,
        policy_index,
        engagement: *config,
        pursuer,
        evader,
        stream,
        outcome: result.outcome,
        min_separation: result.min_separation,
    }))
}

/// Containment implies capture: leaf-plan pursuit against each evader policy.
pub fn validate_sufficiency(
    dist: &ScenarioDistribution,
    n_scenarios: usize,
    policies: &[StrategyKind],
) -> Result<ValidationReport, ValidationError> {
    run_suite(ValidationMode::Sufficiency, dist, n_scenarios, policies)
}

/// No containment implies escape: greedy escape against each pursuit policy.
pub fn validate_necessity(
    dist: &ScenarioDistribution,
    n_scenarios: usize,
    pursuit_policies: &[StrategyKind],
) -> Result<ValidationReport, ValidationError> {
    run_suite(ValidationMode::Necessity, dist, n_scenarios, pursuit_policies)
}

/// Reads the worker-thread cap from [`THREADS_ENV`]; unset means no cap.
pub fn thread_cap_from_env() -> Result<Option<usize>, ValidationError> {
    match std::env::var(THREADS_ENV) {
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(std::env::VarError::NotUnicode(v)) => {
            Err(ValidationError::InvalidThreads(v.to_string_lossy().into_owned()))
        }
        Ok(v) => parse_thread_cap(&v).map(Some),
    }
}

pub fn parse_thread_cap(value: &str) -> Result<usize, ValidationError> {
    match value.trim().parse::<usize>() {
        Ok(n) if n > 0 => Ok(n),
        _ => Err(ValidationError::InvalidThreads(value.to_string())),
    }
}

/// Runs `f` on a dedicated pool of at most `cap` threads, or on the global
/// pool when `cap` is `None`. Results do not depend on the thread count.
pub fn with_thread_cap<R: Send>(cap: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    match cap {
        None => f(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .expect("thread pool construction")
            .install(f),
    }
}
