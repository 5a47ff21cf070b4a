//! Bounded-control vehicle models and their exact constant-control flows.
//!
//! Three models are supported:
//!
//! - [`DynamicsModel::BoundedSpeed`]: the velocity is the control, `|u| <= v_max`.
//! - [`DynamicsModel::DoubleIntegrator`]: the acceleration is the control,
//!   `|u| <= a_max`, optionally with a cumulative delta-v budget.
//! - [`DynamicsModel::Dubins`]: planar constant-speed vehicle steered by turn
//!   rate, `|u| <= speed / r_min`.
//!
//! Controls are piecewise constant, so every [`step`] is a closed-form flow
//! map with no integrator error.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::vector::Vector;

/// Relative slack allowed when checking control bounds and budgets.
pub const ADMISSIBILITY_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("control kind {control} does not match model kind {model}")]
    VariantMismatch {
        model: &'static str,
        control: &'static str,
    },
    #[error("control magnitude {magnitude} exceeds bound {bound}")]
    InadmissibleControl { magnitude: f64, bound: f64 },
    #[error("delta-v budget exhausted: step needs {needed}, {remaining} remaining")]
    BudgetExhausted { needed: f64, remaining: f64 },
    #[error("time step must be positive and finite, got {0}")]
    NonpositiveStep(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid model parameter: {0}")]
    InvalidParameter(String),
}

/// A bounded, freely maneuvering vehicle model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum DynamicsModel {
    BoundedSpeed {
        v_max: f64,
    },
    DoubleIntegrator {
        a_max: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dv_budget: Option<f64>,
    },
    Dubins {
        speed: f64,
        r_min: f64,
    },
}

impl DynamicsModel {
    pub fn bounded_speed(v_max: f64) -> Result<Self, DynamicsError> {
        Self::BoundedSpeed { v_max }.validated()
    }

    pub fn double_integrator(a_max: f64, dv_budget: Option<f64>) -> Result<Self, DynamicsError> {
        Self::DoubleIntegrator { a_max, dv_budget }.validated()
    }

    pub fn dubins(speed: f64, r_min: f64) -> Result<Self, DynamicsError> {
        Self::Dubins { speed, r_min }.validated()
    }

    /// Checks the parameter invariants and returns the model unchanged.
    pub fn validated(self) -> Result<Self, DynamicsError> {
        fn positive(name: &str, v: f64) -> Result<(), DynamicsError> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(DynamicsError::InvalidParameter(format!(
                    "{name} must be positive and finite, got {v}"
                )))
            }
        }
        match self {
            Self::BoundedSpeed { v_max } => positive("v_max", v_max)?,
            Self::DoubleIntegrator { a_max, dv_budget } => {
                positive("a_max", a_max)?;
                if let Some(b) = dv_budget {
                    if !(b.is_finite() && b >= 0.0) {
                        return Err(DynamicsError::InvalidParameter(format!(
                            "dv_budget must be nonnegative and finite, got {b}"
                        )));
                    }
                }
            }
            Self::Dubins { speed, r_min } => {
                positive("speed", speed)?;
                positive("r_min", r_min)?;
            }
        }
        Ok(self)
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Self::BoundedSpeed { .. } => "bounded_speed",
            Self::DoubleIntegrator { .. } => "double_integrator",
            Self::Dubins { .. } => "dubins",
        }
    }

    /// Magnitude bound on the control: speed, acceleration or turn rate.
    pub fn control_bound(&self) -> f64 {
        match *self {
            Self::BoundedSpeed { v_max } => v_max,
            Self::DoubleIntegrator { a_max, .. } => a_max,
            Self::Dubins { speed, r_min } => speed / r_min,
        }
    }

    pub fn supports_dimension(&self, dim: usize) -> bool {
        match self {
            Self::Dubins { .. } => dim == 2,
            _ => dim == 2 || dim == 3,
        }
    }

    /// Delta-v budget, when the model carries one.
    pub fn dv_budget(&self) -> Option<f64> {
        match *self {
            Self::DoubleIntegrator { dv_budget, .. } => dv_budget,
            _ => None,
        }
    }

    /// The zero control of the matching kind.
    pub fn zero_control(&self, dim: usize) -> ControlInput {
        match self {
            Self::BoundedSpeed { .. } => ControlInput::Velocity(Vector::zeros(dim)),
            Self::DoubleIntegrator { .. } => ControlInput::Acceleration(Vector::zeros(dim)),
            Self::Dubins { .. } => ControlInput::TurnRate(0.0),
        }
    }

    /// Upper bound on the distance travelled from rest-relative motion in
    /// `horizon` seconds, used as a length scale for tolerances.
    pub fn reach_scale(&self, initial_speed: f64, horizon: f64) -> f64 {
        match *self {
            Self::BoundedSpeed { v_max } => v_max * horizon,
            Self::DoubleIntegrator { a_max, .. } => {
                initial_speed * horizon + 0.5 * a_max * horizon * horizon
            }
            Self::Dubins { speed, .. } => speed * horizon,
        }
    }
}

/// Piecewise-constant control value, matched to the model kind.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlInput {
    Velocity(Vector),
    Acceleration(Vector),
    TurnRate(f64),
}

impl ControlInput {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Self::Velocity(_) => "velocity",
            Self::Acceleration(_) => "acceleration",
            Self::TurnRate(_) => "turn_rate",
        }
    }

    pub fn magnitude(&self) -> f64 {
        match self {
            Self::Velocity(v) | Self::Acceleration(v) => v.norm(),
            Self::TurnRate(w) => w.abs(),
        }
    }

    fn matches(&self, model: &DynamicsModel) -> bool {
        matches!(
            (self, model),
            (Self::Velocity(_), DynamicsModel::BoundedSpeed { .. })
                | (Self::Acceleration(_), DynamicsModel::DoubleIntegrator { .. })
                | (Self::TurnRate(_), DynamicsModel::Dubins { .. })
        )
    }

    /// Same control scaled by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        match *self {
            Self::Velocity(v) => Self::Velocity(v * k),
            Self::Acceleration(a) => Self::Acceleration(a * k),
            Self::TurnRate(w) => Self::TurnRate(w * k),
        }
    }
}

/// Kinematic state of one vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub position: Vector,
    /// Used by the double integrator; kept consistent with the heading for Dubins.
    pub velocity: Vector,
    /// Radians in `[-pi, pi)`; only meaningful for Dubins vehicles.
    pub heading: f64,
    pub time: f64,
    /// Remaining delta-v for budgeted double integrators. `None` means the
    /// full model budget is still available.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dv_remaining: Option<f64>,
}

impl VehicleState {
    /// A vehicle at rest at `position` at `time`, heading 0.
    pub fn at(position: Vector, time: f64) -> Self {
        Self {
            position,
            velocity: Vector::zeros(position.dim()),
            heading: 0.0,
            time,
            dv_remaining: None,
        }
    }

    pub fn with_velocity(mut self, velocity: Vector) -> Self {
        self.velocity = velocity;
        self
    }

    pub fn with_heading(mut self, heading: f64) -> Self {
        self.heading = normalize_heading(heading);
        self
    }

    pub fn dim(&self) -> usize {
        self.position.dim()
    }

    /// Remaining delta-v under `model`, `None` for unbudgeted models.
    pub fn remaining_budget(&self, model: &DynamicsModel) -> Option<f64> {
        model
            .dv_budget()
            .map(|full| self.dv_remaining.unwrap_or(full))
    }

    /// Instantaneous velocity implied by the state under `model`.
    pub fn velocity_under(&self, model: &DynamicsModel) -> Vector {
        match *model {
            DynamicsModel::Dubins { speed, .. } => Vector::polar(self.heading) * speed,
            _ => self.velocity,
        }
    }
}

/// Wraps an angle into `[-pi, pi)`.
pub fn normalize_heading(theta: f64) -> f64 {
    let wrapped = (theta + PI).rem_euclid(2.0 * PI) - PI;
    // rem_euclid can round up to exactly 2*pi for tiny negative inputs.
    if wrapped >= PI {
        wrapped - 2.0 * PI
    } else {
        wrapped
    }
}

/// Projects a raw control onto the admissible set of `model`.
///
/// Vector controls are rescaled to the bound, preserving direction; turn
/// rates are capped at `speed / r_min`. Admissible controls pass through
/// unchanged.
pub fn clamp_control(
    model: &DynamicsModel,
    raw: ControlInput,
) -> Result<ControlInput, DynamicsError> {
    if !raw.matches(model) {
        return Err(DynamicsError::VariantMismatch {
            model: model.kind_name(),
            control: raw.kind_name(),
        });
    }
    let bound = model.control_bound();
    if within_bound(raw.magnitude(), bound) {
        return Ok(raw);
    }
    Ok(match raw {
        ControlInput::Velocity(v) => ControlInput::Velocity(v.clamp_norm(bound)),
        ControlInput::Acceleration(a) => ControlInput::Acceleration(a.clamp_norm(bound)),
        ControlInput::TurnRate(w) => ControlInput::TurnRate(w.clamp(-bound, bound)),
    })
}

/// Scales a double-integrator control down so a step of length `dt` does not
/// overdraw the remaining delta-v budget. Other models pass through.
///
/// A vehicle with an exhausted budget receives the zero control and coasts.
pub fn limit_to_budget(
    model: &DynamicsModel,
    state: &VehicleState,
    u: ControlInput,
    dt: f64,
) -> ControlInput {
    match (state.remaining_budget(model), u) {
        (Some(remaining), ControlInput::Acceleration(a)) if dt > 0.0 => {
            let allowed = (remaining.max(0.0) / dt).min(model.control_bound());
            ControlInput::Acceleration(a.clamp_norm(allowed))
        }
        _ => u,
    }
}

fn within_bound(magnitude: f64, bound: f64) -> bool {
    magnitude <= bound + ADMISSIBILITY_TOL * bound.max(1.0)
}

/// `sin(x) / x`, continuous at zero.
fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Advances `s` by `dt` seconds under the constant control `u`.
pub fn step(
    model: &DynamicsModel,
    s: &VehicleState,
    u: ControlInput,
    dt: f64,
) -> Result<VehicleState, DynamicsError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(DynamicsError::NonpositiveStep(dt));
    }
    if !u.matches(model) {
        return Err(DynamicsError::VariantMismatch {
            model: model.kind_name(),
            control: u.kind_name(),
        });
    }
    let dim = s.dim();
    if !model.supports_dimension(dim) {
        return Err(DynamicsError::DimensionMismatch {
            expected: 2,
            got: dim,
        });
    }
    let bound = model.control_bound();
    if !within_bound(u.magnitude(), bound) {
        return Err(DynamicsError::InadmissibleControl {
            magnitude: u.magnitude(),
            bound,
        });
    }

    let mut next = *s;
    next.time = s.time + dt;
    match (*model, u) {
        (DynamicsModel::BoundedSpeed { .. }, ControlInput::Velocity(v)) => {
            check_dim(dim, v.dim())?;
            next.position = s.position + v * dt;
            next.velocity = v;
        }
        (DynamicsModel::DoubleIntegrator { .. }, ControlInput::Acceleration(a)) => {
            check_dim(dim, a.dim())?;
            if let Some(remaining) = s.remaining_budget(model) {
                let needed = a.norm() * dt;
                let left = remaining - needed;
                if left < -ADMISSIBILITY_TOL {
                    return Err(DynamicsError::BudgetExhausted { needed, remaining });
                }
                next.dv_remaining = Some(left.max(0.0));
            }
            next.position = s.position + s.velocity * dt + a * (0.5 * dt * dt);
            next.velocity = s.velocity + a * dt;
        }
        (DynamicsModel::Dubins { speed, .. }, ControlInput::TurnRate(w)) => {
            // Chord of the arc: length speed*dt*sinc(phi/2) along the mean heading.
            let phi = w * dt;
            let chord = speed * dt * sinc(0.5 * phi);
            let mean = s.heading + 0.5 * phi;
            next.position = s.position + Vector::polar(mean) * chord;
            next.heading = normalize_heading(s.heading + phi);
            next.velocity = Vector::polar(next.heading) * speed;
        }
        _ => unreachable!("variant checked above"),
    }
    Ok(next)
}

fn check_dim(expected: usize, got: usize) -> Result<(), DynamicsError> {
    if expected == got {
        Ok(())
    } else {
        Err(DynamicsError::DimensionMismatch { expected, got })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn clamp_examples() {
        let bs = DynamicsModel::bounded_speed(1.0).unwrap();
        let u = clamp_control(&bs, ControlInput::Velocity(Vector::new2(3.0, 0.0))).unwrap();
        assert_eq!(u, ControlInput::Velocity(Vector::new2(1.0, 0.0)));

        let db = DynamicsModel::dubins(1.0, 1.0).unwrap();
        assert_eq!(
            clamp_control(&db, ControlInput::TurnRate(5.0)).unwrap(),
            ControlInput::TurnRate(1.0)
        );

        let di = DynamicsModel::double_integrator(1.0, None).unwrap();
        let a = ControlInput::Acceleration(Vector::new2(0.5, 0.0));
        assert_eq!(clamp_control(&di, a).unwrap(), a);
    }

    #[test]
    fn clamp_rejects_mismatched_kind() {
        let bs = DynamicsModel::bounded_speed(1.0).unwrap();
        let err = clamp_control(&bs, ControlInput::TurnRate(0.1)).unwrap_err();
        assert!(matches!(err, DynamicsError::VariantMismatch { .. }));
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(DynamicsModel::bounded_speed(0.0).is_err());
        assert!(DynamicsModel::dubins(1.0, -1.0).is_err());
        assert!(DynamicsModel::double_integrator(1.0, Some(-0.1)).is_err());
        assert!(DynamicsModel::double_integrator(1.0, Some(0.0)).is_ok());
    }

    #[test]
    fn step_examples() {
        let bs = DynamicsModel::bounded_speed(1.0).unwrap();
        let s0 = VehicleState::at(Vector::new2(0.0, 0.0), 0.0);
        let s1 = step(&bs, &s0, ControlInput::Velocity(Vector::new2(1.0, 0.0)), 0.5).unwrap();
        assert_eq!(s1.position, Vector::new2(0.5, 0.0));
        assert_eq!(s1.time, 0.5);

        let di = DynamicsModel::double_integrator(1.0, None).unwrap();
        let s1 = step(&di, &s0, ControlInput::Acceleration(Vector::new2(1.0, 0.0)), 1.0).unwrap();
        assert_eq!(s1.position, Vector::new2(0.5, 0.0));
        assert_eq!(s1.velocity, Vector::new2(1.0, 0.0));

        let db = DynamicsModel::dubins(1.0, 1.0).unwrap();
        let s1 = step(&db, &s0, ControlInput::TurnRate(1.0), FRAC_PI_2).unwrap();
        assert!(close(s1.position.x(), 1.0, 1e-12));
        assert!(close(s1.position.y(), 1.0, 1e-12));
        assert!(close(s1.heading, FRAC_PI_2, 1e-12));
    }

    #[test]
    fn step_rejects_inadmissible_control() {
        let bs = DynamicsModel::bounded_speed(1.0).unwrap();
        let s0 = VehicleState::at(Vector::new2(0.0, 0.0), 0.0);
        let err = step(&bs, &s0, ControlInput::Velocity(Vector::new2(1.1, 0.0)), 1.0).unwrap_err();
        assert!(matches!(err, DynamicsError::InadmissibleControl { .. }));
        assert!(step(&bs, &s0, ControlInput::Velocity(Vector::new2(1.0, 0.0)), 0.0).is_err());
    }

    #[test]
    fn budget_is_consumed_and_enforced() {
        let di = DynamicsModel::double_integrator(2.0, Some(1.0)).unwrap();
        let s0 = VehicleState::at(Vector::new2(0.0, 0.0), 0.0);
        let a = ControlInput::Acceleration(Vector::new2(2.0, 0.0));
        let s1 = step(&di, &s0, a, 0.25).unwrap();
        assert!(close(s1.dv_remaining.unwrap(), 0.5, 1e-15));
        let s2 = step(&di, &s1, a, 0.25).unwrap();
        assert!(close(s2.dv_remaining.unwrap(), 0.0, 1e-15));
        let err = step(&di, &s2, a, 0.25).unwrap_err();
        assert!(matches!(err, DynamicsError::BudgetExhausted { .. }));

        // An exhausted vehicle coasts.
        let coast = limit_to_budget(&di, &s2, a, 0.25);
        assert_eq!(coast.magnitude(), 0.0);
        let s3 = step(&di, &s2, coast, 1.0).unwrap();
        assert!(close(s3.velocity.x(), 1.0, 1e-15));
        assert!(close(s3.position.x() - s2.position.x(), 1.0, 1e-15));
    }

    #[test]
    fn dubins_rejects_spatial_states() {
        let db = DynamicsModel::dubins(1.0, 1.0).unwrap();
        let s0 = VehicleState::at(Vector::new3(0.0, 0.0, 0.0), 0.0);
        assert!(matches!(
            step(&db, &s0, ControlInput::TurnRate(0.0), 1.0),
            Err(DynamicsError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn heading_wraps_into_half_open_interval() {
        assert_eq!(normalize_heading(PI), -PI);
        assert!(close(normalize_heading(3.0 * PI / 2.0), -FRAC_PI_2, 1e-15));
        assert_eq!(normalize_heading(0.0), 0.0);
        assert!(normalize_heading(-1e-300) < PI);
    }

    fn any_model() -> impl Strategy<Value = DynamicsModel> {
        prop_oneof![
            (0.1f64..5.0).prop_map(|v| DynamicsModel::BoundedSpeed { v_max: v }),
            (0.1f64..5.0).prop_map(|a| DynamicsModel::DoubleIntegrator { a_max: a, dv_budget: None }),
            (0.1f64..5.0, 0.1f64..5.0).prop_map(|(s, r)| DynamicsModel::Dubins { speed: s, r_min: r }),
        ]
    }

    fn raw_control(model: DynamicsModel, x: f64, y: f64) -> ControlInput {
        match model {
            DynamicsModel::BoundedSpeed { .. } => ControlInput::Velocity(Vector::new2(x, y)),
            DynamicsModel::DoubleIntegrator { .. } => ControlInput::Acceleration(Vector::new2(x, y)),
            DynamicsModel::Dubins { .. } => ControlInput::TurnRate(x),
        }
    }

    proptest! {
        #[test]
        fn clamp_is_idempotent(model in any_model(), x in -20.0f64..20.0, y in -20.0f64..20.0) {
            let once = clamp_control(&model, raw_control(model, x, y)).unwrap();
            let twice = clamp_control(&model, once).unwrap();
            prop_assert_eq!(once, twice);
            prop_assert!(within_bound(once.magnitude(), model.control_bound()));
        }

        #[test]
        fn bounded_speed_displacement_is_bounded(
            v_max in 0.1f64..5.0, x in -20.0f64..20.0, y in -20.0f64..20.0, dt in 1e-3f64..3.0
        ) {
            let model = DynamicsModel::BoundedSpeed { v_max };
            let u = clamp_control(&model, ControlInput::Velocity(Vector::new2(x, y))).unwrap();
            let s0 = VehicleState::at(Vector::new2(1.0, -2.0), 0.0);
            let s1 = step(&model, &s0, u, dt).unwrap();
            prop_assert!(s1.position.distance(&s0.position) <= v_max * dt + 1e-9);
        }

        #[test]
        fn dubins_chord_never_exceeds_arc(
            speed in 0.1f64..5.0, r_min in 0.1f64..5.0, w in -50.0f64..50.0,
            heading in -3.0f64..3.0, dt in 1e-3f64..5.0
        ) {
            let model = DynamicsModel::Dubins { speed, r_min };
            let u = clamp_control(&model, ControlInput::TurnRate(w)).unwrap();
            let s0 = VehicleState::at(Vector::new2(0.0, 0.0), 0.0).with_heading(heading);
            let s1 = step(&model, &s0, u, dt).unwrap();
            let chord = s1.position.distance(&s0.position);
            prop_assert!(chord <= speed * dt * (1.0 + 1e-12));
            // Chord of an arc of length L and turn angle phi is L*sinc(phi/2).
            let phi = match u { ControlInput::TurnRate(w) => w * dt, _ => unreachable!() };
            let expected = if phi.abs() < 1e-9 { speed * dt } else { 2.0 * speed * (0.5 * phi).sin().abs() / (phi.abs() / dt) };
            prop_assert!((chord - expected).abs() <= 1e-9 * (1.0 + expected));
            prop_assert!(s1.heading >= -PI && s1.heading < PI);
        }

        #[test]
        fn constant_control_flows_compose(
            model in any_model(), x in -20.0f64..20.0, y in -20.0f64..20.0,
            dt1 in 1e-2f64..2.0, dt2 in 1e-2f64..2.0,
            vx in -2.0f64..2.0, vy in -2.0f64..2.0, heading in -3.0f64..3.0
        ) {
            let u = clamp_control(&model, raw_control(model, x, y)).unwrap();
            let s0 = VehicleState::at(Vector::new2(0.5, 0.25), 0.0)
                .with_velocity(Vector::new2(vx, vy))
                .with_heading(heading);
            let direct = step(&model, &s0, u, dt1 + dt2).unwrap();
            let split = step(&model, &step(&model, &s0, u, dt1).unwrap(), u, dt2).unwrap();
            let scale = 1.0 + s0.position.norm() + 10.0 * (dt1 + dt2).powi(2) * model.control_bound();
            prop_assert!(direct.position.distance(&split.position) <= 1e-9 * scale);
            prop_assert!(direct.velocity.distance(&split.velocity) <= 1e-9 * scale);
            let dh = normalize_heading(direct.heading - split.heading).abs();
            prop_assert!(dh <= 1e-9);
            prop_assert!((direct.time - split.time).abs() <= 1e-12);
        }
    }
}
