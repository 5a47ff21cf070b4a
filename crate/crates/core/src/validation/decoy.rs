//! Interceptors against a mix of real targets and indistinguishable decoys.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{random_direction, Range, ValidationError, MAX_REJECTIONS};
use crate::cones::{self, LeafMethod, SamplingParams};
use crate::dynamics::{DynamicsModel, VehicleState};
use crate::engagement::{self, EngagementConfig, EngagementError, Player};
use crate::sampling::mix_seed;
use crate::strategies::StrategyKind;
use crate::vector::Vector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssignmentPolicy {
    /// Each interceptor picks a target uniformly at random.
    UniformRandom,
    /// Interceptors cover distinct targets in a random order, cycling when
    /// they outnumber the targets.
    OnePerTarget,
}

/// Interceptors start at rest at the origin; targets at rest at random
/// bearings and distances. Real targets and decoys share one model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecoyScenario {
    pub n_interceptors: usize,
    pub n_targets_real: usize,
    pub n_decoys: usize,
    pub interceptor_model: DynamicsModel,
    pub target_model: DynamicsModel,
    pub assignment: AssignmentPolicy,
    pub dimension: usize,
    pub separation: Range,
    /// Leaves used by the pairwise containment filter over `[0, t_max]`.
    pub n_leaves: usize,
    /// Dwell of the targets' random maneuvers.
    pub target_dwell: f64,
    pub seed: u64,
}

impl DecoyScenario {
    /// One speed-2 interceptor against one real target and two decoys at speed 1.
    pub fn single_interceptor(seed: u64) -> Self {
        Self {
            n_interceptors: 1,
            n_targets_real: 1,
            n_decoys: 2,
            interceptor_model: DynamicsModel::BoundedSpeed { v_max: 2.0 },
            target_model: DynamicsModel::BoundedSpeed { v_max: 1.0 },
            assignment: AssignmentPolicy::UniformRandom,
            dimension: 2,
            separation: Range::new(0.2, 1.0),
            n_leaves: 51,
            target_dwell: 0.5,
            seed,
        }
    }

    pub fn n_targets(&self) -> usize {
        self.n_targets_real + self.n_decoys
    }

    /// Share of real targets among all targets.
    pub fn real_fraction(&self) -> f64 {
        self.n_targets_real as f64 / self.n_targets() as f64
    }

    pub fn validated(self) -> Result<Self, ValidationError> {
        let bad = |msg: String| Err(ValidationError::InvalidDistribution(msg));
        if self.n_targets_real == 0 {
            return bad("at least one real target is required".into());
        }
        if self.n_interceptors == 0 {
            return bad("at least one interceptor is required".into());
        }
        for m in [self.interceptor_model, self.target_model] {
            m.validated()
                .map_err(|e| ValidationError::InvalidDistribution(e.to_string()))?;
            if !m.supports_dimension(self.dimension) || !matches!(self.dimension, 2 | 3) {
                return bad(format!("{} cannot run in dimension {}", m.kind_name(), self.dimension));
            }
        }
        self.separation.check("separation")?;
        if self.n_leaves == 0 {
            return bad("n_leaves must be positive".into());
        }
        if !(self.target_dwell > 0.0 && self.target_dwell.is_finite()) {
            return bad(format!("target_dwell must be positive, got {}", self.target_dwell));
        }
        Ok(self)
    }
}

/// Chooses a target index for each interceptor from positions alone.
pub fn assign_targets(
    policy: AssignmentPolicy,
    n_interceptors: usize,
    target_positions: &[Vector],
    rng: &mut ChaCha8Rng,
) -> Vec<usize> {
    let n = target_positions.len();
    match policy {
        AssignmentPolicy::UniformRandom => (0..n_interceptors).map(|_| rng.gen_range(0..n)).collect(),
        AssignmentPolicy::OnePerTarget => {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(rng);
            (0..n_interceptors).map(|i| order[i % n]).collect()
        }
    }
}

/// Outcome of one decoy trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecoyTrial {
    pub trial: usize,
    pub seed: u64,
    /// Target index chosen by each interceptor; indices below the real count are real.
    pub assignment: Vec<usize>,
    /// Whether each interceptor captured its assigned target.
    pub intercepted: Vec<bool>,
    pub unengaged_targets: usize,
    pub all_real_intercepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecoyReport {
    pub scenario: DecoyScenario,
    pub engagement: EngagementConfig,
    pub n_trials: usize,
    /// Trials in which every interceptor captured its target.
    pub interception_rate: Option<f64>,
    pub all_real_intercepted_rate: Option<f64>,
    /// Single interceptor only: trials where the captured target was real.
    pub real_target_hit_rate: Option<f64>,
    pub expected_hit_rate: Option<f64>,
    /// Three-sigma binomial band around the expected hit rate.
    pub hit_rate_band: Option<(f64, f64)>,
    /// Three-sigma half-width of the observed hit rate.
    pub hit_rate_ci_halfwidth: Option<f64>,
    pub unengaged_trials: usize,
    /// Fewer interceptors than targets, so some target may go unengaged.
    pub coverage_shortfall: bool,
    pub claim_holds: bool,
    pub trials: Vec<DecoyTrial>,
}

fn sample_targets(
    sc: &DecoyScenario,
    config: &EngagementConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<VehicleState>, ValidationError> {
    let method = LeafMethod::analytic_or_sampled(SamplingParams {
        n_controls: 256,
        n_switches: 1,
    });
    let origin = VehicleState::at(Vector::zeros(sc.dimension), 0.0);
    let interceptor = cones::build_cone(&sc.interceptor_model, &origin, 0.0, config.t_max, sc.n_leaves, method)?;
    let mut targets = Vec::with_capacity(sc.n_targets());
    for index in 0..sc.n_targets() {
        let mut accepted = None;
        for _ in 0..MAX_REJECTIONS {
            let distance = sc.separation.sample(rng);
            let state = VehicleState::at(random_direction(rng, sc.dimension) * distance, 0.0);
            let cone = cones::build_cone(&sc.target_model, &state, 0.0, config.t_max, sc.n_leaves, method)?;
            if cones::cone_contains(&interceptor, &cone, 0.0)?.first_containment_time.is_some() {
                accepted = Some(state);
                break;
            }
        }
        targets.push(accepted.ok_or(ValidationError::UnsatisfiableDistribution {
            index,
            attempts: MAX_REJECTIONS,
        })?);
    }
    Ok(targets)
}

fn run_trial(
    sc: &DecoyScenario,
    config: &EngagementConfig,
    trial: usize,
) -> Result<DecoyTrial, ValidationError> {
    let seed = mix_seed(sc.seed, trial as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let targets = sample_targets(sc, config, &mut rng)?;

    // The assignment sees positions in a shuffled order, never identities.
    let mut shown: Vec<usize> = (0..targets.len()).collect();
    shown.shuffle(&mut rng);
    let positions: Vec<Vector> = shown.iter().map(|&i| targets[i].position).collect();
    let assignment: Vec<usize> = assign_targets(sc.assignment, sc.n_interceptors, &positions, &mut rng)
        .into_iter()
        .map(|k| shown[k])
        .collect();

    let origin = VehicleState::at(Vector::zeros(sc.dimension), 0.0);
    let intercepted = assignment
        .iter()
        .enumerate()
        .map(|(i, &target)| {
            let pursuer = Player::new(sc.interceptor_model, origin, StrategyKind::leaf_plan());
            let evader = Player::new(
                sc.target_model,
                targets[target],
                StrategyKind::RandomManeuver {
                    seed: mix_seed(seed, target as u64),
                    dwell: sc.target_dwell,
                },
            );
            let r = engagement::simulate_seeded(config, &pursuer, &evader, mix_seed(seed, 1000 + i as u64))?;
            Ok(r.outcome.is_intercept())
        })
        .collect::<Result<Vec<bool>, EngagementError>>()?;

    let mut caught = vec![false; targets.len()];
    let mut engaged = vec![false; targets.len()];
    for (&t, &hit) in assignment.iter().zip(&intercepted) {
        engaged[t] = true;
        caught[t] |= hit;
    }
    Ok(DecoyTrial {
        trial,
        seed,
        unengaged_targets: engaged.iter().filter(|e| !**e).count(),
        all_real_intercepted: caught[..sc.n_targets_real].iter().all(|c| *c),
        assignment,
        intercepted,
    })
}

/// Runs `n_trials` independent decoy trials; each interceptor engages its
/// assigned target alone and the assignment is fixed at the start.
pub fn run_decoy(
    sc: &DecoyScenario,
    config: &EngagementConfig,
    n_trials: usize,
) -> Result<DecoyReport, ValidationError> {
    let sc = sc.validated()?;
    let config = config.validated()?;
    let results: Vec<Result<DecoyTrial, ValidationError>> = (0..n_trials)
        .into_par_iter()
        .map(|trial| run_trial(&sc, &config, trial))
        .collect();
    let trials = results.into_iter().collect::<Result<Vec<_>, _>>()?;

    let rate = |count: usize| (n_trials > 0).then(|| count as f64 / n_trials as f64);
    let all_hit = trials.iter().filter(|t| t.intercepted.iter().all(|h| *h)).count();
    let all_real = trials.iter().filter(|t| t.all_real_intercepted).count();
    let unengaged_trials = trials.iter().filter(|t| t.unengaged_targets > 0).count();

    let single = sc.n_interceptors == 1 && n_trials > 0;
    let real_hits = trials
        .iter()
        .filter(|t| t.intercepted[0] && t.assignment[0] < sc.n_targets_real)
        .count();
    let real_target_hit_rate = if single { rate(real_hits) } else { None };
    let expected_hit_rate = single.then(|| sc.real_fraction());
    let hit_rate_band = expected_hit_rate.map(|p| {
        let half = 3.0 * (p * (1.0 - p) / n_trials as f64).sqrt();
        (p - half, p + half)
    });
    let hit_rate_ci_halfwidth =
        real_target_hit_rate.map(|p| 3.0 * (p * (1.0 - p) / n_trials as f64).sqrt());

    let interception_rate = rate(all_hit);
    let all_real_intercepted_rate = rate(all_real);
    let coverage_shortfall = sc.n_interceptors < sc.n_targets() || unengaged_trials > 0;
    let in_band = match (real_target_hit_rate, hit_rate_band) {
        (Some(p), Some((lo, hi))) => (lo..=hi).contains(&p),
        _ => true,
    };
    let full_coverage =
        sc.assignment == AssignmentPolicy::OnePerTarget && sc.n_interceptors >= sc.n_targets();
    let claim_holds = n_trials > 0
        && interception_rate == Some(1.0)
        && in_band
        && (!full_coverage || all_real_intercepted_rate == Some(1.0));

    Ok(DecoyReport {
        scenario: sc,
        engagement: config,
        n_trials,
        interception_rate,
        all_real_intercepted_rate,
        real_target_hit_rate,
        expected_hit_rate,
        hit_rate_band,
        hit_rate_ci_halfwidth,
        unengaged_trials,
        coverage_shortfall,
        claim_holds,
        trials,
    })
}
