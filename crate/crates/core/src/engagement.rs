//! Fixed-step simulation of one pursuit/evasion game.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cones::TIME_TOL;
use crate::dynamics::{self, ControlInput, DynamicsError, DynamicsModel, VehicleState};
use crate::strategies::{Controller, Observation, ObservedHistory, StrategyError, StrategyKind};
use crate::vector::Vector;

/// Absolute slack on the capture test, so exact-contact chases on the grid
/// are not lost to rounding.
pub const CAPTURE_SLACK: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngagementError {
    #[error("invalid engagement config: {0}")]
    Config(String),
    #[error("trajectory has no samples")]
    EmptyTrajectory,
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngagementConfig {
    pub dt: f64,
    pub t_max: f64,
    pub capture_radius: f64,
    /// Radius of the engagement volume, centred at the origin.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arena_radius: Option<f64>,
}

impl EngagementConfig {
    pub fn new(dt: f64, t_max: f64, capture_radius: f64) -> Self {
        Self {
            dt,
            t_max,
            capture_radius,
            arena_radius: None,
        }
    }

    pub fn validated(self) -> Result<Self, EngagementError> {
        let bad = |msg: String| Err(EngagementError::Config(msg));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return bad(format!("t_max must be positive, got {}", self.t_max));
        }
        if self.dt > self.t_max {
            return bad(format!("dt {} exceeds t_max {}", self.dt, self.t_max));
        }
        if !(self.capture_radius >= 0.0 && self.capture_radius.is_finite()) {
            return bad(format!("capture_radius must be nonnegative, got {}", self.capture_radius));
        }
        if let Some(r) = self.arena_radius {
            if !(r > 0.0 && r.is_finite()) {
                return bad(format!("arena_radius must be positive, got {r}"));
            }
        }
        Ok(self)
    }

    /// Upper bound on the number of recorded samples.
    pub fn max_samples(&self) -> usize {
        (self.t_max / self.dt).ceil() as usize + 1
    }
}

/// One side of the game.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Player {
    pub model: DynamicsModel,
    pub state: VehicleState,
    pub strategy: StrategyKind,
}

impl Player {
    pub fn new(model: DynamicsModel, state: VehicleState, strategy: StrategyKind) -> Self {
        Self {
            model,
            state,
            strategy,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Outcome {
    Intercept { t: f64 },
    Escape,
}

impl Outcome {
    pub fn is_intercept(&self) -> bool {
        matches!(self, Outcome::Intercept { .. })
    }
}

/// Trajectories are sampled on a shared grid; `controls_*[k]` acts between
/// samples `k` and `k + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngagementResult {
    pub outcome: Outcome,
    pub trajectory_x: Vec<(f64, Vector)>,
    pub trajectory_y: Vec<(f64, Vector)>,
    pub controls_x: Vec<ControlInput>,
    pub controls_y: Vec<ControlInput>,
    pub min_separation: f64,
    pub min_separation_time: f64,
}

impl EngagementResult {
    pub fn separations(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.trajectory_x
            .iter()
            .zip(&self.trajectory_y)
            .map(|((t, x), (_, y))| (*t, x.distance(y)))
    }
}

/// Time and value of the smallest grid separation; earliest on ties.
pub fn min_separation(result: &EngagementResult) -> Result<(f64, f64), EngagementError> {
    result
        .separations()
        .fold(None, |best: Option<(f64, f64)>, (t, d)| match best {
            Some((_, b)) if b <= d => best,
            _ => Some((t, d)),
        })
        .ok_or(EngagementError::EmptyTrajectory)
}

fn check_player(name: &str, p: &Player, dim: usize) -> Result<(), EngagementError> {
    let cfg = |msg: String| EngagementError::Config(format!("{name}: {msg}"));
    p.model.validated().map_err(|e| cfg(e.to_string()))?;
    p.strategy.validated().map_err(|e| cfg(e.to_string()))?;
    if p.state.dim() != dim || p.state.velocity.dim() != dim {
        return Err(cfg("players must share one dimension".into()));
    }
    if !p.model.supports_dimension(dim) {
        return Err(cfg(format!("{} does not support dimension {dim}", p.model.kind_name())));
    }
    if p.state.time != 0.0 {
        return Err(cfg(format!("initial time must be 0, got {}", p.state.time)));
    }
    if !(p.state.position.is_finite() && p.state.velocity.is_finite() && p.state.heading.is_finite()) {
        return Err(cfg("initial state must be finite".into()));
    }
    Ok(())
}

/// Runs one engagement with stream 0 for any strategy randomness.
pub fn simulate(
    config: &EngagementConfig,
    pursuer: &Player,
    evader: &Player,
) -> Result<EngagementResult, EngagementError> {
    simulate_seeded(config, pursuer, evader, 0)
}

/// Runs one engagement; `stream` decorrelates randomised strategies between
/// engagements sharing a strategy seed.
///
/// Both players choose their controls from the same grid state, then both
/// states advance. The game stops at the first sample with separation within
/// the capture radius, when the evader leaves the arena, or at `t_max`.
pub fn simulate_seeded(
    config: &EngagementConfig,
    pursuer: &Player,
    evader: &Player,
    stream: u64,
) -> Result<EngagementResult, EngagementError> {
    let config = config.validated()?;
    let dim = pursuer.state.dim();
    check_player("pursuer", pursuer, dim)?;
    check_player("evader", evader, dim)?;

    let mut x = pursuer.state;
    let mut y = evader.state;
    let mut ctrl_x = Controller::new(pursuer.strategy, stream);
    let mut ctrl_y = Controller::new(evader.strategy, stream.wrapping_add(1 << 32));
    let mut seen_by_x = ObservedHistory::new(0.0, y.position);
    let mut seen_by_y = ObservedHistory::new(0.0, x.position);

    let capacity = config.max_samples();
    let mut trajectory_x = Vec::with_capacity(capacity);
    let mut trajectory_y = Vec::with_capacity(capacity);
    let mut controls_x = Vec::with_capacity(capacity);
    let mut controls_y = Vec::with_capacity(capacity);
    let mut best = (0.0, f64::INFINITY);
    let mut k = 0usize;

    let outcome = loop {
        let t = x.time;
        trajectory_x.push((t, x.position));
        trajectory_y.push((t, y.position));
        let sep = x.position.distance(&y.position);
        if sep < best.1 {
            best = (t, sep);
        }
        if sep <= config.capture_radius + CAPTURE_SLACK {
            break Outcome::Intercept { t };
        }
        if config.arena_radius.is_some_and(|r| y.position.norm() > r) {
            break Outcome::Escape;
        }
        if t >= config.t_max - TIME_TOL {
            break Outcome::Escape;
        }

        let h = config.dt.min(config.t_max - t);
        let obs_x = Observation {
            opponent_model: &evader.model,
            opponent: &seen_by_x,
            now: t,
            dt: h,
            t_end: config.t_max,
        };
        let obs_y = Observation {
            opponent_model: &pursuer.model,
            opponent: &seen_by_y,
            now: t,
            dt: h,
            t_end: config.t_max,
        };
        let ux = dynamics::limit_to_budget(&pursuer.model, &x, ctrl_x.control(&x, &pursuer.model, &obs_x), h);
        let uy = dynamics::limit_to_budget(&evader.model, &y, ctrl_y.control(&y, &evader.model, &obs_y), h);

        k += 1;
        let t_next = (k as f64 * config.dt).min(config.t_max);
        x = dynamics::step(&pursuer.model, &x, ux, h)?;
        y = dynamics::step(&evader.model, &y, uy, h)?;
        x.time = t_next;
        y.time = t_next;
        controls_x.push(ux);
        controls_y.push(uy);
        seen_by_x.push(t_next, y.position)?;
        seen_by_y.push(t_next, x.position)?;
    };

    Ok(EngagementResult {
        outcome,
        trajectory_x,
        trajectory_y,
        controls_x,
        controls_y,
        min_separation: best.1,
        min_separation_time: best.0,
    })
}
