//! Closed-loop pursuit and evasion behaviours.
//!
//! [`StrategyKind::LeafPlanPursuit`] is the constructive pursuit policy:
//! predict the target's future cone from its observed history, find the
//! earliest grid time at which the pursuer's cone contains it, and steer to
//! the target's extrapolated position at that time, re-planning as the game
//! evolves. [`escape_control`] is the matching evasion rule: fly to the point
//! of the own reachable set deepest outside the pursuer's leaf.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cones::{self, ConeError, FutureCone, Leaf, LeafMethod, SamplingParams, TIME_TOL};
use crate::dynamics::{self, ControlInput, DynamicsModel, VehicleState};
use crate::sampling::{directions, mix_seed, symmetric_grid};
use crate::vector::Vector;

/// Escape fan sizes: planar directions, spatial directions, Dubins turn rates.
pub const ESCAPE_FAN_2D: usize = 64;
pub const ESCAPE_FAN_3D: usize = 266;
pub const ESCAPE_FAN_TURN: usize = 65;

/// Sampling used when a strategy needs the leaf of a Dubins or budgeted vehicle.
const STRATEGY_SAMPLING: SamplingParams = SamplingParams {
    n_controls: 128,
    n_switches: 1,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StrategyError {
    #[error("no grid time achieves containment of the target cone")]
    NoGuarantee,
    #[error("pursuer cone has no leaf after t = {0}")]
    NoFutureLeaves(f64),
    #[error("observation times must strictly increase ({previous} then {next})")]
    NonIncreasingTime { previous: f64, next: f64 },
    #[error("observed history is empty")]
    EmptyHistory,
    #[error("invalid strategy: {0}")]
    InvalidStrategy(String),
    #[error(transparent)]
    Cone(#[from] ConeError),
}

/// Time-ordered positions of the opponent observed so far.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedHistory {
    samples: Vec<(f64, Vector)>,
}

impl ObservedHistory {
    pub fn new(time: f64, position: Vector) -> Self {
        Self {
            samples: vec![(time, position)],
        }
    }

    pub fn from_samples(samples: Vec<(f64, Vector)>) -> Result<Self, StrategyError> {
        if samples.is_empty() {
            return Err(StrategyError::EmptyHistory);
        }
        for w in samples.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(StrategyError::NonIncreasingTime {
                    previous: w[0].0,
                    next: w[1].0,
                });
            }
        }
        Ok(Self { samples })
    }

    pub fn push(&mut self, time: f64, position: Vector) -> Result<(), StrategyError> {
        let previous = self.latest().0;
        if !(time > previous) {
            return Err(StrategyError::NonIncreasingTime {
                previous,
                next: time,
            });
        }
        self.samples.push((time, position));
        Ok(())
    }

    pub fn samples(&self) -> &[(f64, Vector)] {
        &self.samples
    }

    pub fn first(&self) -> (f64, Vector) {
        self.samples[0]
    }

    pub fn latest(&self) -> (f64, Vector) {
        *self.samples.last().expect("history is never empty")
    }

    /// Finite difference of the last two samples; zero with a single sample.
    pub fn latest_velocity_estimate(&self) -> Vector {
        match self.samples.as_slice() {
            [.., (t0, p0), (t1, p1)] => (*p1 - *p0) / (t1 - t0),
            [(_, p)] => Vector::zeros(p.dim()),
            [] => unreachable!(),
        }
    }

    /// Latest observed state of the opponent as a cone vertex.
    pub fn latest_state(&self) -> VehicleState {
        let (t, p) = self.latest();
        let v = self.latest_velocity_estimate();
        let heading = if v.norm() > 0.0 { v.heading() } else { 0.0 };
        VehicleState::at(p, t).with_velocity(v).with_heading(heading)
    }
}

/// Parameters of the leaf-containment planner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlannerConfig {
    /// Look-ahead in seconds; `None` plans to the end of the engagement.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    /// Leaf spacing; `None` uses the simulation step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_step: Option<f64>,
    #[serde(default)]
    pub tol: f64,
    #[serde(default = "default_planner_sampling")]
    pub sampling: SamplingParams,
}

fn default_planner_sampling() -> SamplingParams {
    STRATEGY_SAMPLING
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            horizon: None,
            grid_step: None,
            tol: 0.0,
            sampling: STRATEGY_SAMPLING,
        }
    }
}

fn default_replan_every() -> u32 {
    1
}

/// A pursuit or evasion behaviour.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StrategyKind {
    PurePursuit,
    LeafPlanPursuit {
        #[serde(default = "default_replan_every")]
        replan_every: u32,
        #[serde(default)]
        planner: PlannerConfig,
    },
    /// Fly a constant course; `None` flees along the initial line of sight.
    StraightLine {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        direction: Option<Vector>,
    },
    GreedyEscape {
        horizon: f64,
    },
    RandomManeuver {
        seed: u64,
        dwell: f64,
    },
}

impl StrategyKind {
    pub fn leaf_plan() -> Self {
        Self::LeafPlanPursuit {
            replan_every: 1,
            planner: PlannerConfig::default(),
        }
    }

    pub fn validated(self) -> Result<Self, StrategyError> {
        let bad = |msg: String| Err(StrategyError::InvalidStrategy(msg));
        match self {
            Self::LeafPlanPursuit { replan_every, planner } => {
                if replan_every == 0 {
                    return bad("replan_every must be at least 1".into());
                }
                for (name, v) in [("horizon", planner.horizon), ("grid_step", planner.grid_step)] {
                    if let Some(v) = v {
                        if !(v > 0.0 && v.is_finite()) {
                            return bad(format!("planner {name} must be positive, got {v}"));
                        }
                    }
                }
                if !(planner.tol >= 0.0 && planner.tol.is_finite()) {
                    return bad(format!("planner tol must be nonnegative, got {}", planner.tol));
                }
                if planner.sampling.n_controls < cones::MIN_CONTROLS {
                    return bad("planner sampling needs at least 8 controls".into());
                }
            }
            Self::StraightLine { direction: Some(d) } if !d.is_finite() => {
                return bad("direction must be finite".into());
            }
            Self::GreedyEscape { horizon } if !(horizon > 0.0 && horizon.is_finite()) => {
                return bad(format!("escape horizon must be positive, got {horizon}"));
            }
            Self::RandomManeuver { dwell, .. } if !(dwell > 0.0 && dwell.is_finite()) => {
                return bad(format!("dwell must be positive, got {dwell}"));
            }
            _ => {}
        }
        Ok(self)
    }

    pub fn is_pursuit(&self) -> bool {
        matches!(self, Self::PurePursuit | Self::LeafPlanPursuit { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::PurePursuit => "pure_pursuit",
            Self::LeafPlanPursuit { .. } => "leaf_plan_pursuit",
            Self::StraightLine { .. } => "straight_line",
            Self::GreedyEscape { .. } => "greedy_escape",
            Self::RandomManeuver { .. } => "random_maneuver",
        }
    }
}

/// Parses a command-line strategy: a JSON object, or `name[:key=value,...]`.
///
/// Vector values separate components with `;`, e.g.
/// `straight_line:direction=1;0`. Omitted keys take their defaults.
pub fn parse_strategy_spec(spec: &str) -> Result<StrategyKind, StrategyError> {
    let spec = spec.trim();
    let invalid = |msg: String| StrategyError::InvalidStrategy(msg);
    if spec.starts_with('{') {
        let kind: StrategyKind =
            serde_json::from_str(spec).map_err(|e| invalid(e.to_string()))?;
        return kind.validated();
    }
    let (name, args) = spec.split_once(':').unwrap_or((spec, ""));
    let mut pairs = Vec::new();
    for item in args.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| invalid(format!("expected key=value, got `{item}`")))?;
        if pairs.iter().any(|(seen, _)| *seen == k.trim()) {
            return Err(invalid(format!("duplicate key `{}`", k.trim())));
        }
        pairs.push((k.trim(), v.trim()));
    }
    let allowed: &[&str] = match name {
        "pure_pursuit" => &[],
        "leaf_plan_pursuit" => &["replan_every", "horizon", "grid_step", "tol", "n_controls", "n_switches"],
        "straight_line" => &["direction"],
        "greedy_escape" => &["horizon"],
        "random_maneuver" => &["seed", "dwell"],
        other => return Err(invalid(format!("unknown strategy `{other}`"))),
    };
    if let Some((k, _)) = pairs.iter().find(|(k, _)| !allowed.contains(k)) {
        return Err(invalid(format!("`{name}` has no parameter `{k}`")));
    }
    let get = |key: &str| pairs.iter().find(|(k, _)| *k == key).map(|(_, v)| *v);
    fn num<T: std::str::FromStr>(key: &str, v: Option<&str>) -> Result<Option<T>, StrategyError> {
        v.map(|s| {
            s.parse::<T>()
                .map_err(|_| StrategyError::InvalidStrategy(format!("`{key}` has invalid value `{s}`")))
        })
        .transpose()
    }
    let kind = match name {
        "pure_pursuit" => StrategyKind::PurePursuit,
        "leaf_plan_pursuit" => {
            let d = PlannerConfig::default();
            StrategyKind::LeafPlanPursuit {
                replan_every: num("replan_every", get("replan_every"))?.unwrap_or(1),
                planner: PlannerConfig {
                    horizon: num("horizon", get("horizon"))?,
                    grid_step: num("grid_step", get("grid_step"))?,
                    tol: num("tol", get("tol"))?.unwrap_or(d.tol),
                    sampling: SamplingParams {
                        n_controls: num("n_controls", get("n_controls"))?.unwrap_or(d.sampling.n_controls),
                        n_switches: num("n_switches", get("n_switches"))?.unwrap_or(d.sampling.n_switches),
                    },
                },
            }
        }
        "straight_line" => StrategyKind::StraightLine {
            direction: get("direction")
                .map(|s| {
                    let parts = s
                        .split(';')
                        .map(|c| c.trim().parse::<f64>())
                        .collect::<Result<Vec<f64>, _>>()
                        .map_err(|_| invalid(format!("`direction` has invalid value `{s}`")))?;
                    Vector::from_slice(&parts)
                        .ok_or_else(|| invalid("`direction` needs 2 or 3 components".into()))
                })
                .transpose()?,
        },
        "greedy_escape" => StrategyKind::GreedyEscape {
            horizon: num("horizon", get("horizon"))?.unwrap_or(0.5),
        },
        _ => StrategyKind::RandomManeuver {
            seed: num("seed", get("seed"))?.unwrap_or(0),
            dwell: num("dwell", get("dwell"))?.unwrap_or(0.25),
        },
    };
    kind.validated()
}

/// Where and when the pursuer intends to meet the target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterceptPlan {
    pub t_i: f64,
    pub aim_point: Vector,
    pub margin_at_plan: f64,
}

/// Leaf method for a vehicle whose cone may lack a closed form.
fn leaf_method(sampling: SamplingParams) -> LeafMethod {
    LeafMethod::analytic_or_sampled(sampling)
}

/// Earliest guaranteed intercept against the target's predicted cone.
///
/// The target cone is rooted at the latest observation and built on the
/// pursuer cone's grid times after `now`. The aim point is the target's
/// constant-velocity extrapolation to the intercept time, projected into the
/// target's leaf if the extrapolation leaves it.
pub fn plan_intercept_point(
    pursuer_cone: &FutureCone,
    target_model: &DynamicsModel,
    target_history: &ObservedHistory,
    now: f64,
    planner: &PlannerConfig,
) -> Result<InterceptPlan, StrategyError> {
    let target = target_history.latest_state();
    let times: Vec<f64> = pursuer_cone
        .times()
        .into_iter()
        .filter(|&t| t > now + TIME_TOL && t > target.time + TIME_TOL)
        .collect();
    if times.is_empty() {
        return Err(StrategyError::NoFutureLeaves(now));
    }
    let target_cone =
        cones::build_cone_on_grid(target_model, &target, &times, leaf_method(planner.sampling))?;
    let report = cones::cone_contains(pursuer_cone, &target_cone, planner.tol)?;
    let t_i = report
        .first_containment_time
        .ok_or(StrategyError::NoGuarantee)?;
    let margin_at_plan = report
        .per_time
        .iter()
        .find(|v| v.time == t_i)
        .map(|v| v.verdict.margin)
        .unwrap_or(0.0);
    let leaf = target_cone.leaf_at(t_i).expect("t_i is a target grid time");
    let extrapolated = target.position + target.velocity * (t_i - target.time);
    Ok(InterceptPlan {
        t_i,
        aim_point: leaf.closest_point(extrapolated),
        margin_at_plan,
    })
}

/// Maximum-magnitude control steering `own` toward `point`.
///
/// `time_to_go` sets the look-ahead for acceleration-controlled vehicles;
/// with `no_overshoot` a bounded-speed vehicle slows to land on the point
/// within one step of length `dt`.
fn steer_toward(
    model: &DynamicsModel,
    own: &VehicleState,
    point: Vector,
    time_to_go: Option<f64>,
    dt: f64,
    no_overshoot: bool,
) -> ControlInput {
    let dim = own.dim();
    let offset = point - own.position;
    let distance = offset.norm();
    let zero = model.zero_control(dim);
    if distance == 0.0 {
        return zero;
    }
    let bound = model.control_bound();
    match *model {
        DynamicsModel::BoundedSpeed { .. } => {
            let speed = if no_overshoot { bound.min(distance / dt) } else { bound };
            ControlInput::Velocity(offset * (speed / distance))
        }
        DynamicsModel::DoubleIntegrator { a_max, .. } => {
            // Push against the zero-effort miss at the time to go.
            let tgo = time_to_go
                .unwrap_or_else(|| (2.0 * distance / a_max).sqrt())
                .max(dt);
            let miss = offset - own.velocity * tgo;
            match miss.normalized() {
                Some(dir) => ControlInput::Acceleration(dir * a_max),
                None => zero,
            }
        }
        DynamicsModel::Dubins { .. } => {
            let error = dynamics::normalize_heading(offset.heading() - own.heading);
            ControlInput::TurnRate((error / dt).clamp(-bound, bound))
        }
    }
}

/// Steers along a fixed course direction.
fn steer_along(model: &DynamicsModel, own: &VehicleState, direction: Vector, dt: f64) -> ControlInput {
    let Some(dir) = direction.normalized() else {
        return model.zero_control(own.dim());
    };
    let bound = model.control_bound();
    match model {
        DynamicsModel::BoundedSpeed { .. } => ControlInput::Velocity(dir * bound),
        DynamicsModel::DoubleIntegrator { .. } => ControlInput::Acceleration(dir * bound),
        DynamicsModel::Dubins { .. } => {
            let error = dynamics::normalize_heading(dir.heading() - own.heading);
            ControlInput::TurnRate((error / dt).clamp(-bound, bound))
        }
    }
}

fn admissible(model: &DynamicsModel, u: ControlInput) -> ControlInput {
    dynamics::clamp_control(model, u).expect("strategies emit controls of the model's kind")
}

/// Builds the pursuer's own cone on the planning grid starting after `now`.
fn planning_cone(
    model: &DynamicsModel,
    own: &VehicleState,
    planner: &PlannerConfig,
    now: f64,
    dt: f64,
    t_end: f64,
) -> Result<FutureCone, StrategyError> {
    let step = planner.grid_step.unwrap_or(dt);
    let horizon = planner.horizon.unwrap_or(t_end - now).max(step);
    let n = ((horizon / step).round() as usize).max(1);
    let times: Vec<f64> = (1..=n).map(|k| now + k as f64 * step).collect();
    Ok(cones::build_cone_on_grid(
        model,
        own,
        &times,
        leaf_method(planner.sampling),
    )?)
}

/// What a player knows when choosing a control.
#[derive(Debug, Clone, Copy)]
pub struct Observation<'a> {
    pub opponent_model: &'a DynamicsModel,
    pub opponent: &'a ObservedHistory,
    pub now: f64,
    pub dt: f64,
    /// End of the engagement window.
    pub t_end: f64,
}

/// One-shot pursuit control.
///
/// `PurePursuit` heads for the target's latest position at full authority.
/// `LeafPlanPursuit` plans from scratch on every call and heads for the plan's
/// aim point without overshooting it, falling back to pure pursuit when no
/// guaranteed intercept exists. A pursuer already on the target returns the
/// zero control.
pub fn pursuit_control(
    kind: &StrategyKind,
    own: &VehicleState,
    model: &DynamicsModel,
    obs: &Observation<'_>,
) -> Result<ControlInput, StrategyError> {
    match kind {
        StrategyKind::PurePursuit => Ok(pure_pursuit(model, own, obs)),
        StrategyKind::LeafPlanPursuit { planner, .. } => {
            let plan = replan(model, own, planner, obs);
            Ok(follow_plan(model, own, plan.as_ref(), obs))
        }
        other => Err(StrategyError::InvalidStrategy(format!(
            "{} is not a pursuit strategy",
            other.name()
        ))),
    }
}

fn pure_pursuit(model: &DynamicsModel, own: &VehicleState, obs: &Observation<'_>) -> ControlInput {
    let (_, target) = obs.opponent.latest();
    admissible(model, steer_toward(model, own, target, None, obs.dt, false))
}

fn replan(
    model: &DynamicsModel,
    own: &VehicleState,
    planner: &PlannerConfig,
    obs: &Observation<'_>,
) -> Option<InterceptPlan> {
    let cone = planning_cone(model, own, planner, obs.now, obs.dt, obs.t_end).ok()?;
    plan_intercept_point(&cone, obs.opponent_model, obs.opponent, obs.now, planner).ok()
}

fn follow_plan(
    model: &DynamicsModel,
    own: &VehicleState,
    plan: Option<&InterceptPlan>,
    obs: &Observation<'_>,
) -> ControlInput {
    match plan {
        Some(p) => {
            let tgo = p.t_i - obs.now;
            admissible(model, steer_toward(model, own, p.aim_point, Some(tgo), obs.dt, true))
        }
        None => pure_pursuit(model, own, obs),
    }
}

/// Best constant control for leaving the pursuer's reachable set.
///
/// Each control of a fixed fan is held for `horizon` seconds; the one whose
/// endpoint lies deepest outside (or least deep inside) `pursuer_leaf` wins.
/// Ties go to the lowest fan index.
pub fn escape_control(
    own: &VehicleState,
    model: &DynamicsModel,
    pursuer_leaf: &Leaf,
    horizon: f64,
) -> ControlInput {
    let dim = own.dim();
    let bound = model.control_bound();
    let fan: Vec<ControlInput> = match model {
        DynamicsModel::Dubins { .. } => symmetric_grid(ESCAPE_FAN_TURN, bound)
            .into_iter()
            .map(ControlInput::TurnRate)
            .collect(),
        _ => {
            let n = if dim == 2 { ESCAPE_FAN_2D } else { ESCAPE_FAN_3D };
            directions(dim, n)
                .into_iter()
                .map(|d| match model {
                    DynamicsModel::BoundedSpeed { .. } => ControlInput::Velocity(d * bound),
                    _ => ControlInput::Acceleration(d * bound),
                })
                .collect()
        }
    };
    let mut best: Option<(f64, ControlInput)> = None;
    for u in fan {
        let u = dynamics::limit_to_budget(model, own, u, horizon);
        let Ok(end) = dynamics::step(model, own, u, horizon) else {
            continue;
        };
        let margin = pursuer_leaf.signed_distance(end.position);
        let better = match best {
            None => true,
            Some((m, _)) => margin < m - 1e-12 * (1.0 + m.abs()),
        };
        if better {
            best = Some((margin, u));
        }
    }
    best.map(|(_, u)| u)
        .unwrap_or_else(|| model.zero_control(dim))
}

/// Stateful per-engagement controller for one player.
#[derive(Debug, Clone)]
pub struct Controller {
    kind: StrategyKind,
    steps: u64,
    plan: Option<InterceptPlan>,
    rng: ChaCha8Rng,
    random_hold: Option<(f64, ControlInput)>,
    course: Option<Vector>,
}

impl Controller {
    /// `stream` separates the randomness of different engagements.
    pub fn new(kind: StrategyKind, stream: u64) -> Self {
        let seed = match kind {
            StrategyKind::RandomManeuver { seed, .. } => mix_seed(seed, stream),
            _ => stream,
        };
        Self {
            kind,
            steps: 0,
            plan: None,
            rng: ChaCha8Rng::seed_from_u64(seed),
            random_hold: None,
            course: None,
        }
    }

    pub fn kind(&self) -> &StrategyKind {
        &self.kind
    }

    pub fn current_plan(&self) -> Option<&InterceptPlan> {
        self.plan.as_ref()
    }

    /// Chooses the next control; the result is always admissible for `model`.
    pub fn control(
        &mut self,
        own: &VehicleState,
        model: &DynamicsModel,
        obs: &Observation<'_>,
    ) -> ControlInput {
        let step_index = self.steps;
        self.steps += 1;
        match self.kind {
            StrategyKind::PurePursuit => pure_pursuit(model, own, obs),
            StrategyKind::LeafPlanPursuit { replan_every, planner } => {
                let stale = self.plan.is_none_or(|p| p.t_i <= obs.now + TIME_TOL);
                if stale || step_index.is_multiple_of(replan_every as u64) {
                    self.plan = replan(model, own, &planner, obs);
                }
                follow_plan(model, own, self.plan.as_ref(), obs)
            }
            StrategyKind::StraightLine { direction } => {
                let course = *self.course.get_or_insert_with(|| {
                    direction.unwrap_or_else(|| own.position - obs.opponent.first().1)
                });
                admissible(model, steer_along(model, own, course, obs.dt))
            }
            StrategyKind::GreedyEscape { horizon } => {
                let pursuer = obs.opponent.latest_state();
                let t = obs.now.max(pursuer.time) + horizon;
                match cones::build_cone_on_grid(
                    obs.opponent_model,
                    &pursuer,
                    &[t],
                    leaf_method(STRATEGY_SAMPLING),
                ) {
                    Ok(cone) => admissible(model, escape_control(own, model, &cone.leaves[0], horizon)),
                    Err(_) => model.zero_control(own.dim()),
                }
            }
            StrategyKind::RandomManeuver { dwell, .. } => {
                match self.random_hold {
                    Some((until, u)) if obs.now < until - TIME_TOL => u,
                    _ => {
                        let u = self.random_control(model, own.dim());
                        self.random_hold = Some((obs.now + dwell, u));
                        u
                    }
                }
            }
        }
    }

    fn random_control(&mut self, model: &DynamicsModel, dim: usize) -> ControlInput {
        let bound = model.control_bound();
        match model {
            DynamicsModel::Dubins { .. } => ControlInput::TurnRate(self.rng.gen_range(-bound..=bound)),
            _ => {
                let d = random_unit(&mut self.rng, dim) * bound;
                match model {
                    DynamicsModel::BoundedSpeed { .. } => ControlInput::Velocity(d),
                    _ => ControlInput::Acceleration(d),
                }
            }
        }
    }
}

fn random_unit(rng: &mut ChaCha8Rng, dim: usize) -> Vector {
    let theta = rng.gen_range(0.0..std::f64::consts::TAU);
    if dim == 2 {
        Vector::polar(theta)
    } else {
        let z: f64 = rng.gen_range(-1.0..=1.0);
        let r = (1.0 - z * z).max(0.0).sqrt();
        Vector::new3(r * theta.cos(), r * theta.sin(), z)
    }
}
