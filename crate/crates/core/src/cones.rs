//! Future cones: time-indexed reachable position sets and their containment.
//!
//! A [`FutureCone`] is represented by its leaves, the sets of positions a
//! vehicle can occupy at exactly one grid time. Leaves are either exact
//! balls (bounded-speed and unbudgeted double-integrator vehicles) or point
//! clouds of trajectory endpoints together with their convex hull.
//!
//! Containment is decided on closed sets: a verdict is positive when the
//! signed margin is at least `-tol`, so boundary contact counts as contained.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{self, ControlInput, DynamicsError, DynamicsModel, VehicleState};
use crate::hull::{ConvexHull, HullError};
use crate::sampling::{
    circle_directions_offset, cube_to_ball, directions, symmetric_grid, KroneckerSequence,
};
use crate::vector::Vector;

/// Two grid times closer than this are the same leaf time.
pub const TIME_TOL: f64 = 1e-9;

/// Smallest accepted control-sample count for a sampled leaf.
pub const MIN_CONTROLS: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConeError {
    #[error("no closed-form leaf for {0} vehicles")]
    UnsupportedAnalytic(&'static str),
    #[error("leaf time {t} is not after the vertex time {vertex_time}")]
    NonpositiveHorizon { t: f64, vertex_time: f64 },
    #[error("need at least {MIN_CONTROLS} control samples, got {0}")]
    InvalidResolution(usize),
    #[error("bad time window [{t_start}, {t_end}] for vertex at {vertex_time}")]
    BadWindow {
        t_start: f64,
        t_end: f64,
        vertex_time: f64,
    },
    #[error("a cone needs at least one leaf")]
    NoLeaves,
    #[error("leaf times differ: {outer} vs {inner}")]
    TimeMismatch { outer: f64, inner: f64 },
    #[error("cone time windows do not overlap")]
    NoOverlap,
    #[error("leaf grids cannot be aligned on the overlap window")]
    GridMismatch,
    #[error("tolerance must be nonnegative and finite, got {0}")]
    NegativeTolerance(f64),
    #[error("leaves live in different dimensions ({0} vs {1})")]
    DimensionMismatch(usize, usize),
    #[error("{model} vehicles cannot move in {dim} dimensions")]
    UnsupportedDimension { model: &'static str, dim: usize },
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Hull(#[from] HullError),
}

/// Endpoints of sampled trajectories and their convex hull.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<Vector>,
    hull: ConvexHull,
    /// Whether the sampled set is known to be convex, so that its hull is a
    /// faithful inner approximation.
    convex: bool,
}

impl PointCloud {
    pub fn points(&self) -> &[Vector] {
        &self.points
    }

    pub fn hull(&self) -> &ConvexHull {
        &self.hull
    }

    pub fn is_convex(&self) -> bool {
        self.convex
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LeafShape {
    Ball { center: Vector, radius: f64 },
    PointCloud(PointCloud),
}

/// The set of positions reachable at exactly `time`.
#[derive(Debug, Clone, PartialEq)]
pub struct Leaf {
    pub time: f64,
    pub shape: LeafShape,
}

impl Leaf {
    pub fn ball(time: f64, center: Vector, radius: f64) -> Self {
        debug_assert!(radius >= 0.0);
        Self {
            time,
            shape: LeafShape::Ball { center, radius },
        }
    }

    pub fn cloud(time: f64, points: Vec<Vector>, convex: bool) -> Result<Self, ConeError> {
        let hull = ConvexHull::from_points(&points)?;
        Ok(Self {
            time,
            shape: LeafShape::PointCloud(PointCloud {
                points,
                hull,
                convex,
            }),
        })
    }

    pub fn dim(&self) -> usize {
        match &self.shape {
            LeafShape::Ball { center, .. } => center.dim(),
            LeafShape::PointCloud(c) => c.points[0].dim(),
        }
    }

    /// Signed distance from `p` to the leaf, positive inside.
    pub fn signed_distance(&self, p: Vector) -> f64 {
        match &self.shape {
            LeafShape::Ball { center, radius } => radius - p.distance(center),
            LeafShape::PointCloud(c) => c.hull.signed_distance(p),
        }
    }

    /// Nearest point of the leaf to `p`; `p` itself when inside.
    pub fn closest_point(&self, p: Vector) -> Vector {
        match &self.shape {
            LeafShape::Ball { center, radius } => {
                let d = p - *center;
                let n = d.norm();
                if n <= *radius {
                    p
                } else {
                    *center + d * (radius / n)
                }
            }
            LeafShape::PointCloud(c) => c.hull.closest_point(p),
        }
    }

    /// Points that describe the leaf when exported: `n` boundary samples for a
    /// ball (one point when degenerate), every sample for a cloud.
    pub fn export_points(&self, n: usize) -> Vec<Vector> {
        match &self.shape {
            LeafShape::Ball { center, radius } if *radius == 0.0 => vec![*center],
            LeafShape::Ball { center, radius } => directions(center.dim(), n)
                .into_iter()
                .map(|d| *center + d * *radius)
                .collect(),
            LeafShape::PointCloud(c) => c.points.clone(),
        }
    }

    fn is_approximate_outer(&self) -> bool {
        matches!(&self.shape, LeafShape::PointCloud(c) if !c.convex)
    }

    /// Points whose containment decides containment of the whole leaf in a
    /// convex outer set.
    fn extreme_points(&self) -> Vec<Vector> {
        match &self.shape {
            LeafShape::Ball { center, .. } => vec![*center],
            LeafShape::PointCloud(c) => c.hull.vertices(),
        }
    }
}

/// Future cone of one vehicle: a vertex state and leaves on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FutureCone {
    pub vertex: VehicleState,
    pub model: DynamicsModel,
    pub t_start: f64,
    pub t_end: f64,
    pub leaves: Vec<Leaf>,
}

impl FutureCone {
    pub fn times(&self) -> Vec<f64> {
        self.leaves.iter().map(|l| l.time).collect()
    }

    pub fn leaf_at(&self, time: f64) -> Option<&Leaf> {
        self.leaves
            .iter()
            .find(|l| (l.time - time).abs() <= TIME_TOL)
    }

    /// True when some leaf is a cloud of a nonconvex (Dubins) reachable set.
    pub fn is_approximate(&self) -> bool {
        self.leaves.iter().any(Leaf::is_approximate_outer)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingParams {
    pub n_controls: usize,
    pub n_switches: usize,
}

impl Default for SamplingParams {
    fn default() -> Self {
        Self {
            n_controls: 1000,
            n_switches: 0,
        }
    }
}

/// How leaves are constructed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeafMethod {
    /// Closed-form balls. With `fallback` set, models without a closed form
    /// are sampled instead of failing.
    Analytic { fallback: Option<SamplingParams> },
    Sampled(SamplingParams),
}

impl LeafMethod {
    pub const fn analytic() -> Self {
        Self::Analytic { fallback: None }
    }

    pub const fn analytic_or_sampled(params: SamplingParams) -> Self {
        Self::Analytic {
            fallback: Some(params),
        }
    }
}

fn check_model_dim(model: &DynamicsModel, dim: usize) -> Result<(), ConeError> {
    if model.supports_dimension(dim) {
        Ok(())
    } else {
        Err(ConeError::UnsupportedDimension {
            model: model.kind_name(),
            dim,
        })
    }
}

/// Closed-form leaf for bounded-speed and unbudgeted double-integrator vehicles.
pub fn analytic_leaf(
    model: &DynamicsModel,
    vertex: &VehicleState,
    t: f64,
) -> Result<Leaf, ConeError> {
    let horizon = t - vertex.time;
    let (center, radius) = match *model {
        DynamicsModel::BoundedSpeed { v_max } => (vertex.position, v_max * horizon),
        DynamicsModel::DoubleIntegrator {
            a_max,
            dv_budget: None,
        } => (
            vertex.position + vertex.velocity * horizon,
            0.5 * a_max * horizon * horizon,
        ),
        _ => return Err(ConeError::UnsupportedAnalytic(model.kind_name())),
    };
    if !(horizon > 0.0) {
        return Err(ConeError::NonpositiveHorizon {
            t,
            vertex_time: vertex.time,
        });
    }
    check_model_dim(model, vertex.dim())?;
    Ok(Leaf::ball(t, center, radius))
}

/// Which of two interleaved control sweeps to draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Sweep {
    Primary,
    /// Offset from the primary sweep by half a grid spacing, with the next
    /// block of the low-discrepancy sequence and one extra switch, so its
    /// switching times fall between the primary ones.
    Refinement,
}

/// Builds the control sequences explored by [`sampled_leaf`].
fn control_sequences(
    model: &DynamicsModel,
    dim: usize,
    n_controls: usize,
    n_switches: usize,
    sweep: Sweep,
) -> Vec<Vec<ControlInput>> {
    let segments = n_switches + 1;
    let bound = model.control_bound();
    let n_constant = n_controls / 2;
    let n_mixed = n_controls - n_constant;
    let seq_offset = match sweep {
        Sweep::Primary => 0,
        Sweep::Refinement => n_controls,
    };
    let mut out: Vec<Vec<ControlInput>> = Vec::with_capacity(n_controls);

    match model {
        DynamicsModel::Dubins { .. } => {
            // Odd grid so the straight-ahead control is always present.
            let n_grid = if n_constant % 2 == 1 { n_constant } else { n_constant - 1 };
            let grid = symmetric_grid(n_grid, bound);
            let rates: Vec<f64> = match sweep {
                Sweep::Primary => grid,
                Sweep::Refinement => grid.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect(),
            };
            for w in rates {
                out.push(vec![ControlInput::TurnRate(w); segments]);
            }
            let mut remaining = n_controls.saturating_sub(out.len());
            // Bang-zero-bang combinations shape the outer boundary.
            let combos = 3usize.checked_pow(segments as u32).unwrap_or(usize::MAX);
            if sweep == Sweep::Primary && segments > 1 && combos <= remaining / 2 {
                for code in 0..combos {
                    let mut c = code;
                    let seq = (0..segments)
                        .map(|_| {
                            let w = (c % 3) as f64 - 1.0;
                            c /= 3;
                            ControlInput::TurnRate(w * bound)
                        })
                        .collect();
                    out.push(seq);
                }
                remaining -= combos;
            }
            let seq = KroneckerSequence::new(segments);
            for i in 0..remaining {
                let p = seq.point(seq_offset + i);
                out.push(
                    p.iter()
                        .map(|&x| ControlInput::TurnRate((2.0 * x - 1.0) * bound))
                        .collect(),
                );
            }
        }
        _ => {
            let wrap = |v: Vector| match model {
                DynamicsModel::BoundedSpeed { .. } => ControlInput::Velocity(v),
                _ => ControlInput::Acceleration(v),
            };
            let dirs = match (sweep, dim) {
                (Sweep::Primary, _) => directions(dim, n_constant),
                (Sweep::Refinement, 2) => circle_directions_offset(n_constant, 0.5),
                (Sweep::Refinement, _) => directions(dim, 2 * n_constant),
            };
            for d in dirs {
                out.push(vec![wrap(d * bound); segments]);
            }
            let seq = KroneckerSequence::new(segments * dim);
            for i in 0..n_mixed {
                let p = seq.point(seq_offset + i);
                out.push(
                    p.chunks(dim)
                        .map(|c| wrap(cube_to_ball(dim, c) * bound))
                        .collect(),
                );
            }
        }
    }
    out
}

fn sampled_points(
    model: &DynamicsModel,
    vertex: &VehicleState,
    t: f64,
    n_controls: usize,
    n_switches: usize,
    sweep: Sweep,
) -> Result<Vec<Vector>, ConeError> {
    if n_controls < MIN_CONTROLS {
        return Err(ConeError::InvalidResolution(n_controls));
    }
    let horizon = t - vertex.time;
    if !(horizon > 0.0) {
        return Err(ConeError::NonpositiveHorizon {
            t,
            vertex_time: vertex.time,
        });
    }
    check_model_dim(model, vertex.dim())?;
    let n_switches = match sweep {
        Sweep::Primary => n_switches,
        Sweep::Refinement => n_switches + 1,
    };
    let segments = n_switches + 1;
    let tau = horizon / segments as f64;

    let sequences = control_sequences(model, vertex.dim(), n_controls, n_switches, sweep);
    let mut points = Vec::with_capacity(sequences.len());
    for seq in sequences {
        let mut s = *vertex;
        for (k, u) in seq.into_iter().enumerate() {
            // Last segment lands exactly on t.
            let dt = if k + 1 == segments { t - s.time } else { tau };
            s = burn_then_coast(model, &s, u, dt)?;
        }
        points.push(s.position);
    }
    Ok(points)
}

/// Applies `u` for `dt`, but when the remaining budget cannot cover the whole
/// segment the burn runs at full commanded thrust until the budget is spent
/// and the vehicle coasts for the rest.
fn burn_then_coast(
    model: &DynamicsModel,
    s: &VehicleState,
    u: ControlInput,
    dt: f64,
) -> Result<VehicleState, ConeError> {
    if let (Some(remaining), ControlInput::Acceleration(a)) = (s.remaining_budget(model), u) {
        let thrust = a.norm();
        let remaining = remaining.max(0.0);
        if thrust * dt > remaining {
            let burn = if thrust > 0.0 { (remaining / thrust).min(dt) } else { 0.0 };
            let mut s = *s;
            if burn > 0.0 {
                s = dynamics::step(model, &s, u, burn)?;
            }
            let coast = dt - burn;
            if coast > 0.0 {
                s = dynamics::step(model, &s, ControlInput::Acceleration(a * 0.0), coast)?;
            }
            return Ok(s);
        }
    }
    Ok(dynamics::step(model, s, u, dt)?)
}

/// Leaf approximated by the endpoints of piecewise-constant control
/// sequences with `n_switches` evenly spaced switching times.
///
/// Half of the samples are constant extremal controls, which reach the leaf
/// boundary for the convex models; the rest come from a low-discrepancy
/// sweep over the admissible set on each segment.
pub fn sampled_leaf(
    model: &DynamicsModel,
    vertex: &VehicleState,
    t: f64,
    n_controls: usize,
    n_switches: usize,
) -> Result<Leaf, ConeError> {
    let points = sampled_points(model, vertex, t, n_controls, n_switches, Sweep::Primary)?;
    let convex = !matches!(model, DynamicsModel::Dubins { .. });
    Leaf::cloud(t, points, convex)
}

/// Estimates how far the true leaf protrudes beyond the hull of
/// [`sampled_leaf`] with the same parameters.
///
/// A second sweep of equal size, interleaved with the first, is integrated
/// and the deepest excursion `d` of its endpoints outside the primary hull is
/// measured. The refinement is itself short of the true leaf, so the result
/// is the first-order extrapolation `2 d` (zero when every refinement point
/// lies inside).
pub fn sampling_tolerance(
    model: &DynamicsModel,
    vertex: &VehicleState,
    t: f64,
    n_controls: usize,
    n_switches: usize,
) -> Result<f64, ConeError> {
    let leaf = sampled_leaf(model, vertex, t, n_controls, n_switches)?;
    let refined = sampled_points(model, vertex, t, n_controls, n_switches, Sweep::Refinement)?;
    let excursion = refined
        .into_iter()
        .map(|p| -leaf.signed_distance(p))
        .fold(0.0, f64::max);
    Ok(2.0 * excursion)
}

/// Leaf of the cone at grid time `t`, including the degenerate leaf at the
/// vertex time itself.
fn leaf_at(
    model: &DynamicsModel,
    vertex: &VehicleState,
    t: f64,
    method: LeafMethod,
) -> Result<Leaf, ConeError> {
    if (t - vertex.time).abs() <= TIME_TOL {
        return Ok(match method {
            LeafMethod::Analytic { .. } if !matches!(model, DynamicsModel::Dubins { .. }) && model.dv_budget().is_none() => {
                Leaf::ball(t, vertex.position, 0.0)
            }
            _ => Leaf::cloud(t, vec![vertex.position], true)?,
        });
    }
    match method {
        LeafMethod::Analytic { fallback } => match analytic_leaf(model, vertex, t) {
            Err(ConeError::UnsupportedAnalytic(_)) if fallback.is_some() => {
                let p = fallback.unwrap();
                sampled_leaf(model, vertex, t, p.n_controls, p.n_switches)
            }
            other => other,
        },
        LeafMethod::Sampled(p) => sampled_leaf(model, vertex, t, p.n_controls, p.n_switches),
    }
}

/// The `n`-point uniform grid over `[t_start, t_end]`; a single point is `t_end`.
pub fn uniform_grid(t_start: f64, t_end: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![t_end],
        _ => (0..n)
            .map(|i| {
                if i + 1 == n {
                    t_end
                } else {
                    t_start + (t_end - t_start) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

/// Builds the future cone of `vertex` with `n_leaves` leaves evenly spaced
/// over `[t_start, t_end]`. Leaves are built in parallel; the result does
/// not depend on scheduling.
pub fn build_cone(
    model: &DynamicsModel,
    vertex: &VehicleState,
    t_start: f64,
    t_end: f64,
    n_leaves: usize,
    method: LeafMethod,
) -> Result<FutureCone, ConeError> {
    let bad = !(t_end > t_start) || t_start < vertex.time - TIME_TOL || !t_end.is_finite();
    if bad {
        return Err(ConeError::BadWindow {
            t_start,
            t_end,
            vertex_time: vertex.time,
        });
    }
    if n_leaves == 0 {
        return Err(ConeError::NoLeaves);
    }
    let mut cone = build_cone_on_grid(model, vertex, &uniform_grid(t_start, t_end, n_leaves), method)?;
    cone.t_start = t_start;
    Ok(cone)
}

/// Builds a cone whose leaves sit at exactly the given times, for aligning
/// with another cone's grid.
pub fn build_cone_on_grid(
    model: &DynamicsModel,
    vertex: &VehicleState,
    times: &[f64],
    method: LeafMethod,
) -> Result<FutureCone, ConeError> {
    let (Some(&t_start), Some(&t_end)) = (times.first(), times.last()) else {
        return Err(ConeError::NoLeaves);
    };
    let increasing = times.windows(2).all(|w| w[1] > w[0] + TIME_TOL);
    if !increasing || t_start < vertex.time - TIME_TOL || !t_end.is_finite() {
        return Err(ConeError::BadWindow {
            t_start,
            t_end,
            vertex_time: vertex.time,
        });
    }
    check_model_dim(model, vertex.dim())?;
    let leaves = times
        .par_iter()
        .map(|&t| leaf_at(model, vertex, t, method))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(FutureCone {
        vertex: *vertex,
        model: *model,
        t_start,
        t_end,
        leaves,
    })
}

/// Verdict of one leaf-in-leaf containment test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContainmentVerdict {
    pub contained: bool,
    /// Signed clearance of the inner leaf inside the outer one.
    pub margin: f64,
    /// The outer leaf is a hull of a nonconvex sampled set.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub approximate: bool,
}

fn check_tol(tol: f64) -> Result<(), ConeError> {
    if tol >= 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(ConeError::NegativeTolerance(tol))
    }
}

/// Decides whether `inner` lies inside `outer` at their common time.
pub fn leaf_contains(outer: &Leaf, inner: &Leaf, tol: f64) -> Result<ContainmentVerdict, ConeError> {
    check_tol(tol)?;
    if (outer.time - inner.time).abs() > TIME_TOL {
        return Err(ConeError::TimeMismatch {
            outer: outer.time,
            inner: inner.time,
        });
    }
    if outer.dim() != inner.dim() {
        return Err(ConeError::DimensionMismatch(outer.dim(), inner.dim()));
    }
    let margin = match (&outer.shape, &inner.shape) {
        (
            LeafShape::Ball { center, radius },
            LeafShape::Ball {
                center: c_in,
                radius: r_in,
            },
        ) => radius - (c_in.distance(center) + r_in),
        (LeafShape::PointCloud(c), LeafShape::Ball { center, radius }) => {
            c.hull.signed_distance(*center) - radius
        }
        // The margin is concave in the inner point, so its minimum over the
        // inner set is attained at an extreme point.
        (_, LeafShape::PointCloud(_)) => inner
            .extreme_points()
            .into_iter()
            .map(|p| outer.signed_distance(p))
            .fold(f64::INFINITY, f64::min),
    };
    Ok(ContainmentVerdict {
        contained: margin >= -tol,
        margin,
        approximate: outer.is_approximate_outer(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimedVerdict {
    pub time: f64,
    #[serde(flatten)]
    pub verdict: ContainmentVerdict,
}

/// Per-time containment of one cone in another.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContainmentReport {
    pub tolerance: f64,
    pub per_time: Vec<TimedVerdict>,
    pub first_containment_time: Option<f64>,
    /// Contiguous contained run of grid times starting at the first containment.
    pub window: Option<(f64, f64)>,
    /// Some verdict relied on a hull of a nonconvex sampled leaf.
    pub approximate: bool,
}

impl ContainmentReport {
    fn from_verdicts(tolerance: f64, per_time: Vec<TimedVerdict>) -> Self {
        let first = per_time.iter().position(|v| v.verdict.contained);
        let window = first.map(|i| {
            let last = per_time[i..]
                .iter()
                .take_while(|v| v.verdict.contained)
                .last()
                .unwrap();
            (per_time[i].time, last.time)
        });
        let approximate = per_time.iter().any(|v| v.verdict.approximate);
        Self {
            tolerance,
            first_containment_time: first.map(|i| per_time[i].time),
            window,
            per_time,
            approximate,
        }
    }

    pub fn max_margin(&self) -> f64 {
        self.per_time
            .iter()
            .map(|v| v.verdict.margin)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Decides containment of `inner` in `outer` at every shared grid time of
/// the overlap of their windows.
pub fn cone_contains(
    outer: &FutureCone,
    inner: &FutureCone,
    tol: f64,
) -> Result<ContainmentReport, ConeError> {
    check_tol(tol)?;
    let lo = outer.t_start.max(inner.t_start);
    let hi = outer.t_end.min(inner.t_end);
    if lo > hi + TIME_TOL {
        return Err(ConeError::NoOverlap);
    }
    let in_window = |l: &&Leaf| l.time >= lo - TIME_TOL && l.time <= hi + TIME_TOL;
    let outer_leaves: Vec<&Leaf> = outer.leaves.iter().filter(in_window).collect();
    let inner_leaves: Vec<&Leaf> = inner.leaves.iter().filter(in_window).collect();
    if outer_leaves.is_empty() || outer_leaves.len() != inner_leaves.len() {
        return Err(ConeError::GridMismatch);
    }
    let mut per_time = Vec::with_capacity(outer_leaves.len());
    for (o, i) in outer_leaves.into_iter().zip(inner_leaves) {
        if (o.time - i.time).abs() > TIME_TOL {
            return Err(ConeError::GridMismatch);
        }
        per_time.push(TimedVerdict {
            time: o.time,
            verdict: leaf_contains(o, i, tol)?,
        });
    }
    Ok(ContainmentReport::from_verdicts(tol, per_time))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    fn origin_state() -> VehicleState {
        VehicleState::at(Vector::new2(0.0, 0.0), 0.0)
    }

    #[test]
    fn analytic_leaf_examples() {
        let bs = DynamicsModel::bounded_speed(2.0).unwrap();
        let leaf = analytic_leaf(&bs, &origin_state(), 1.0).unwrap();
        assert_eq!(leaf, Leaf::ball(1.0, Vector::new2(0.0, 0.0), 2.0));

        let di = DynamicsModel::double_integrator(1.0, None).unwrap();
        let v = origin_state().with_velocity(Vector::new2(1.0, 0.0));
        let leaf = analytic_leaf(&di, &v, 2.0).unwrap();
        assert_eq!(leaf, Leaf::ball(2.0, Vector::new2(2.0, 0.0), 2.0));

        let db = DynamicsModel::dubins(1.0, 1.0).unwrap();
        assert_eq!(
            analytic_leaf(&db, &origin_state(), 1.0),
            Err(ConeError::UnsupportedAnalytic("dubins"))
        );
        let budgeted = DynamicsModel::double_integrator(1.0, Some(1.0)).unwrap();
        assert!(matches!(
            analytic_leaf(&budgeted, &origin_state(), 1.0),
            Err(ConeError::UnsupportedAnalytic(_))
        ));
        assert!(matches!(
            analytic_leaf(&bs, &origin_state(), 0.0),
            Err(ConeError::NonpositiveHorizon { .. })
        ));
    }

    #[test]
    fn sampled_leaf_bounded_speed_fills_the_ball() {
        let bs = DynamicsModel::bounded_speed(1.0).unwrap();
        let leaf = sampled_leaf(&bs, &origin_state(), 1.0, 1000, 0).unwrap();
        let LeafShape::PointCloud(c) = &leaf.shape else { panic!() };
        assert_eq!(c.points().len(), 1000);
        let max = c.points().iter().map(|p| p.norm()).fold(0.0, f64::max);
        assert!(c.points().iter().all(|p| p.norm() <= 1.0 + 1e-9));
        assert!(max >= 0.999);
    }

    #[test]
    fn sampled_leaf_dubins_reaches_max_turn_arc() {
        let db = DynamicsModel::dubins(1.0, 1.0).unwrap();
        let leaf = sampled_leaf(&db, &origin_state(), FRAC_PI_4, 1000, 0).unwrap();
        let target = Vector::new2(FRAC_PI_4.sin(), 1.0 - FRAC_PI_4.cos());
        let LeafShape::PointCloud(c) = &leaf.shape else { panic!() };
        let nearest = c.points().iter().map(|p| p.distance(&target)).fold(f64::INFINITY, f64::min);
        assert!(nearest <= 1e-12, "nearest {nearest}");
        assert!(!c.is_convex());
    }

    #[test]
    fn sampled_leaf_rejects_low_resolution() {
        let bs = DynamicsModel::bounded_speed(1.0).unwrap();
        assert_eq!(
            sampled_leaf(&bs, &origin_state(), 1.0, 4, 0),
            Err(ConeError::InvalidResolution(4))
        );
    }

    #[test]
    fn budgeted_samples_respect_the_budget() {
        // With budget B the vehicle can move at most B*t - ... < B*t from a rest start.
        let di = DynamicsModel::double_integrator(2.0, Some(0.5)).unwrap();
        let leaf = sampled_leaf(&di, &origin_state(), 2.0, 200, 3).unwrap();
        let LeafShape::PointCloud(c) = &leaf.shape else { panic!() };
        let max = c.points().iter().map(|p| p.norm()).fold(0.0, f64::max);
        // Burning the full budget at a_max first is optimal: 0.5*2*0.25^2 + 0.5*1.75.
        let best = 0.5 * 2.0 * 0.25f64.powi(2) + 0.5 * 1.75;
        assert!(max <= best + 1e-12, "max {max} best {best}");
        assert!(max >= 0.999 * best, "max {max} best {best}");
    }

    #[test]
    fn build_cone_grid_and_errors() {
        let bs = DynamicsModel::bounded_speed(1.0).unwrap();
        let cone = build_cone(&bs, &origin_state(), 0.5, 2.0, 4, LeafMethod::analytic()).unwrap();
        assert_eq!(cone.times(), vec![0.5, 1.0, 1.5, 2.0]);
        let radii: Vec<f64> = cone
            .leaves
            .iter()
            .map(|l| match l.shape {
                LeafShape::Ball { radius, .. } => radius,
                _ => panic!(),
            })
            .collect();
        assert!(radii.windows(2).all(|w| w[1] > w[0]));
        assert!(matches!(
            build_cone(&bs, &origin_state(), 0.5, 0.5, 4, LeafMethod::analytic()),
            Err(ConeError::BadWindow { .. })
        ));
        let db = DynamicsModel::dubins(1.0, 1.0).unwrap();
        assert!(matches!(
            build_cone(&db, &origin_state(), 0.5, 1.0, 2, LeafMethod::analytic()),
            Err(ConeError::UnsupportedAnalytic(_))
        ));
        let fallback = LeafMethod::analytic_or_sampled(SamplingParams { n_controls: 64, n_switches: 1 });
        let cone = build_cone(&db, &origin_state(), 0.5, 1.0, 2, fallback).unwrap();
        assert!(cone.is_approximate());
    }

    #[test]
    fn vertex_time_leaf_is_the_vertex() {
        let bs = DynamicsModel::bounded_speed(1.0).unwrap();
        let cone = build_cone(&bs, &origin_state(), 0.0, 1.0, 3, LeafMethod::analytic()).unwrap();
        assert_eq!(cone.leaves[0], Leaf::ball(0.0, Vector::new2(0.0, 0.0), 0.0));
    }

    #[test]
    fn leaf_contains_examples() {
        let o = Leaf::ball(1.0, Vector::new2(0.0, 0.0), 2.0);
        let i = Leaf::ball(1.0, Vector::new2(1.0, 0.0), 1.0);
        let v = leaf_contains(&o, &i, 0.0).unwrap();
        assert!(v.contained);
        assert_eq!(v.margin, 0.0);

        let o = Leaf::ball(1.0, Vector::new2(0.0, 0.0), 1.0);
        let i = Leaf::ball(1.0, Vector::new2(1.0, 0.0), 0.5);
        let v = leaf_contains(&o, &i, 0.0).unwrap();
        assert!(!v.contained);
        assert_eq!(v.margin, -0.5);

        let v = leaf_contains(&o, &o, 0.0).unwrap();
        assert!(v.contained);
        assert_eq!(v.margin, 0.0);

        let later = Leaf::ball(1.5, Vector::new2(0.0, 0.0), 1.0);
        assert!(matches!(leaf_contains(&o, &later, 0.0), Err(ConeError::TimeMismatch { .. })));
        assert!(matches!(leaf_contains(&o, &o, -1.0), Err(ConeError::NegativeTolerance(_))));
    }

    #[test]
    fn cloud_margins_use_hulls() {
        let square = vec![
            Vector::new2(-1.0, -1.0),
            Vector::new2(1.0, -1.0),
            Vector::new2(1.0, 1.0),
            Vector::new2(-1.0, 1.0),
        ];
        let outer = Leaf::cloud(1.0, square, true).unwrap();
        let ball = Leaf::ball(1.0, Vector::new2(0.0, 0.0), 0.5);
        let v = leaf_contains(&outer, &ball, 0.0).unwrap();
        assert!((v.margin - 0.5).abs() < 1e-15);

        let inner = Leaf::cloud(1.0, vec![Vector::new2(0.5, 0.0), Vector::new2(1.5, 0.0)], true).unwrap();
        let v = leaf_contains(&outer, &inner, 0.0).unwrap();
        assert!((v.margin + 0.5).abs() < 1e-15);
        let v = leaf_contains(&ball, &inner, 0.0).unwrap();
        assert!((v.margin + 1.0).abs() < 1e-15);
    }

    #[test]
    fn cone_contains_examples() {
        let fast = DynamicsModel::bounded_speed(2.0).unwrap();
        let slow = DynamicsModel::bounded_speed(1.0).unwrap();
        let x0 = origin_state();
        let y0 = VehicleState::at(Vector::new2(1.0, 0.0), 0.0);
        let m = LeafMethod::analytic();

        let px = build_cone(&fast, &x0, 0.5, 2.0, 4, m).unwrap();
        let py = build_cone(&slow, &y0, 0.5, 2.0, 4, m).unwrap();
        let r = cone_contains(&px, &py, 0.0).unwrap();
        let flags: Vec<bool> = r.per_time.iter().map(|v| v.verdict.contained).collect();
        assert_eq!(flags, vec![false, true, true, true]);
        assert_eq!(r.first_containment_time, Some(1.0));
        assert_eq!(r.window, Some((1.0, 2.0)));

        let px = build_cone(&slow, &x0, 0.5, 2.0, 4, m).unwrap();
        let py = build_cone(&fast, &y0, 0.5, 2.0, 4, m).unwrap();
        let r = cone_contains(&px, &py, 0.0).unwrap();
        assert!(r.per_time.iter().all(|v| !v.verdict.contained));
        assert_eq!(r.first_containment_time, None);
        assert_eq!(r.window, None);

        let r = cone_contains(&px, &px, 0.0).unwrap();
        assert!(r.per_time.iter().all(|v| v.verdict.contained && v.verdict.margin == 0.0));
    }

    #[test]
    fn cone_contains_grid_errors() {
        let bs = DynamicsModel::bounded_speed(1.0).unwrap();
        let m = LeafMethod::analytic();
        let a = build_cone(&bs, &origin_state(), 0.5, 1.0, 2, m).unwrap();
        let b = build_cone(&bs, &origin_state(), 2.0, 3.0, 2, m).unwrap();
        assert_eq!(cone_contains(&a, &b, 0.0), Err(ConeError::NoOverlap));
        let c = build_cone(&bs, &origin_state(), 0.5, 1.0, 3, m).unwrap();
        assert_eq!(cone_contains(&a, &c, 0.0), Err(ConeError::GridMismatch));
        // Overlap restricted to the shared part of the windows.
        let d = build_cone(&bs, &origin_state(), 0.5, 2.0, 4, m).unwrap();
        let e = build_cone(&bs, &origin_state(), 1.0, 3.0, 5, m).unwrap();
        let r = cone_contains(&d, &e, 0.0).unwrap();
        assert_eq!(r.per_time.iter().map(|v| v.time).collect::<Vec<_>>(), vec![1.0, 1.5, 2.0]);
    }

    #[test]
    fn parallel_build_is_deterministic() {
        let db = DynamicsModel::dubins(1.0, 0.5).unwrap();
        let m = LeafMethod::Sampled(SamplingParams { n_controls: 128, n_switches: 2 });
        let a = build_cone(&db, &origin_state(), 0.2, 2.0, 10, m).unwrap();
        let b = build_cone(&db, &origin_state(), 0.2, 2.0, 10, m).unwrap();
        assert_eq!(a, b);
    }
}
