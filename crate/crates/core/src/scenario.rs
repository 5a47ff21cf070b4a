//! Scenario files: one pursuer, one evader, a cone window and engagement settings.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::dynamics::{DynamicsModel, VehicleState};
use crate::engagement::{EngagementConfig, Player};
use crate::strategies::StrategyKind;
use crate::vector::Vector;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("field `{field}`: {message}")]
    Field { field: String, message: String },
}

fn field_err(field: impl Into<String>, message: impl ToString) -> ScenarioError {
    ScenarioError::Field {
        field: field.into(),
        message: message.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlayerSpec {
    pub model: DynamicsModel,
    pub position: Vector,
    pub velocity: Option<Vector>,
    pub heading: Option<f64>,
}

impl PlayerSpec {
    pub fn new(model: DynamicsModel, position: Vector) -> Self {
        Self {
            model,
            position,
            velocity: None,
            heading: None,
        }
    }

    /// Initial state at time 0. A Dubins velocity follows from its heading.
    pub fn state(&self) -> VehicleState {
        let mut s = VehicleState::at(self.position, 0.0);
        if let Some(v) = self.velocity {
            s = s.with_velocity(v);
        }
        if let Some(h) = self.heading {
            s = s.with_heading(h);
        }
        if matches!(self.model, DynamicsModel::Dubins { .. }) {
            s.velocity = s.velocity_under(&self.model);
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSpec {
    pub t_start: f64,
    pub t_end: f64,
    pub n_leaves: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioFile {
    pub dimension: usize,
    pub pursuer: PlayerSpec,
    pub evader: PlayerSpec,
    pub window: WindowSpec,
    pub engagement: EngagementConfig,
    pub seed: u64,
}

// Wire shapes. Parameters are checked per model after the outer document parses.

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    dimension: usize,
    pursuer: RawPlayer,
    evader: RawPlayer,
    window: WindowSpec,
    engagement: EngagementConfig,
    seed: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPlayer {
    model: String,
    params: Map<String, Value>,
    position: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    velocity: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    heading: Option<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoundedSpeedParams {
    v_max: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DoubleIntegratorParams {
    a_max: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dv_budget: Option<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DubinsParams {
    speed: f64,
    r_min: f64,
}

fn parse_params<T: for<'de> Deserialize<'de>>(
    field: &str,
    params: &Map<String, Value>,
) -> Result<T, ScenarioError> {
    serde_json::from_value(Value::Object(params.clone())).map_err(|e| field_err(field, e))
}

fn parse_vector(field: &str, values: &[f64], dim: usize) -> Result<Vector, ScenarioError> {
    if values.len() != dim {
        return Err(field_err(
            field,
            format!("expected {dim} components, got {}", values.len()),
        ));
    }
    let v = Vector::from_slice(values).ok_or_else(|| field_err(field, "invalid vector"))?;
    if !v.is_finite() {
        return Err(field_err(field, "components must be finite"));
    }
    Ok(v)
}

fn parse_player(name: &str, raw: &RawPlayer, dim: usize) -> Result<PlayerSpec, ScenarioError> {
    let params_field = format!("{name}.params");
    let model = match raw.model.as_str() {
        "bounded_speed" => {
            let p: BoundedSpeedParams = parse_params(&params_field, &raw.params)?;
            DynamicsModel::bounded_speed(p.v_max)
        }
        "double_integrator" => {
            let p: DoubleIntegratorParams = parse_params(&params_field, &raw.params)?;
            DynamicsModel::double_integrator(p.a_max, p.dv_budget)
        }
        "dubins" => {
            let p: DubinsParams = parse_params(&params_field, &raw.params)?;
            DynamicsModel::dubins(p.speed, p.r_min)
        }
        other => {
            return Err(field_err(
                format!("{name}.model"),
                format!("unknown model `{other}`, expected bounded_speed, double_integrator or dubins"),
            ))
        }
    }
    .map_err(|e| field_err(&params_field, e))?;
    if !model.supports_dimension(dim) {
        return Err(field_err(
            format!("{name}.model"),
            format!("{} does not support dimension {dim}", model.kind_name()),
        ));
    }
    let position = parse_vector(&format!("{name}.position"), &raw.position, dim)?;
    let velocity = raw
        .velocity
        .as_deref()
        .map(|v| parse_vector(&format!("{name}.velocity"), v, dim))
        .transpose()?;
    if let Some(h) = raw.heading {
        if !h.is_finite() {
            return Err(field_err(format!("{name}.heading"), "must be finite"));
        }
    }
    Ok(PlayerSpec {
        model,
        position,
        velocity,
        heading: raw.heading,
    })
}

fn raw_player(p: &PlayerSpec) -> RawPlayer {
    let params = match serde_json::to_value(p.model).expect("models serialize") {
        Value::Object(mut m) => {
            m.remove("model");
            m
        }
        _ => unreachable!("models serialize as objects"),
    };
    RawPlayer {
        model: p.model.kind_name().to_string(),
        params,
        position: p.position.as_slice().to_vec(),
        velocity: p.velocity.map(|v| v.as_slice().to_vec()),
        heading: p.heading,
    }
}

impl ScenarioFile {
    pub fn from_json_str(text: &str) -> Result<Self, ScenarioError> {
        let raw: RawScenario = serde_json::from_str(text).map_err(|e| ScenarioError::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        let dim = raw.dimension;
        if !matches!(dim, 2 | 3) {
            return Err(field_err("dimension", format!("must be 2 or 3, got {dim}")));
        }
        let scenario = Self {
            dimension: dim,
            pursuer: parse_player("pursuer", &raw.pursuer, dim)?,
            evader: parse_player("evader", &raw.evader, dim)?,
            window: raw.window,
            engagement: raw.engagement,
            seed: raw.seed,
        };
        scenario.check_window()?;
        scenario
            .engagement
            .validated()
            .map_err(|e| field_err("engagement", e))?;
        Ok(scenario)
    }

    fn check_window(&self) -> Result<(), ScenarioError> {
        let w = self.window;
        if !(w.t_start >= 0.0 && w.t_end > w.t_start && w.t_end.is_finite()) {
            return Err(field_err(
                "window",
                format!("need 0 <= t_start < t_end, got [{}, {}]", w.t_start, w.t_end),
            ));
        }
        if w.n_leaves == 0 {
            return Err(field_err("window.n_leaves", "must be positive"));
        }
        Ok(())
    }

    pub fn to_json_pretty(&self) -> String {
        let raw = RawScenario {
            dimension: self.dimension,
            pursuer: raw_player(&self.pursuer),
            evader: raw_player(&self.evader),
            window: self.window,
            engagement: self.engagement,
            seed: self.seed,
        };
        serde_json::to_string_pretty(&raw).expect("scenarios serialize")
    }

    pub fn pursuer_player(&self, strategy: StrategyKind) -> Player {
        Player::new(self.pursuer.model, self.pursuer.state(), strategy)
    }

    pub fn evader_player(&self, strategy: StrategyKind) -> Player {
        Player::new(self.evader.model, self.evader.state(), strategy)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const CHASE: &str = r#"{
        "dimension": 2,
        "pursuer": {"model": "bounded_speed", "params": {"v_max": 2.0}, "position": [0.0, 0.0]},
        "evader": {"model": "bounded_speed", "params": {"v_max": 1.0}, "position": [1.0, 0.0]},
        "window": {"t_start": 0.0, "t_end": 5.0, "n_leaves": 51},
        "engagement": {"dt": 0.01, "t_max": 5.0, "capture_radius": 0.1},
        "seed": 7
    }"#;

    #[test]
    fn parses_the_chase_scenario() {
        let s = ScenarioFile::from_json_str(CHASE).unwrap();
        assert_eq!(s.pursuer.model, DynamicsModel::BoundedSpeed { v_max: 2.0 });
        assert_eq!(s.evader.position, Vector::new2(1.0, 0.0));
        assert_eq!(s.engagement.arena_radius, None);
        assert_eq!(ScenarioFile::from_json_str(&s.to_json_pretty()).unwrap(), s);
    }

    fn replace(from: &str, to: &str) -> Result<ScenarioFile, ScenarioError> {
        ScenarioFile::from_json_str(&CHASE.replace(from, to))
    }

    #[test]
    fn diagnostics_name_the_problem() {
        let e = ScenarioFile::from_json_str("{\n  \"dimension\": 2,\n  oops").unwrap_err();
        assert!(matches!(e, ScenarioError::Syntax { line: 3, .. }), "{e}");

        let e = replace(r#""seed": 7"#, r#""seed": 7, "extra": 1"#).unwrap_err();
        assert!(e.to_string().contains("extra"), "{e}");

        let e = replace(r#"{"v_max": 2.0}"#, r#"{"v_max": 2.0, "a_max": 1.0}"#).unwrap_err();
        assert!(matches!(&e, ScenarioError::Field { field, .. } if field == "pursuer.params"), "{e}");

        let e = replace(r#"{"v_max": 1.0}"#, r#"{"v_max": -1.0}"#).unwrap_err();
        assert!(matches!(&e, ScenarioError::Field { field, .. } if field == "evader.params"), "{e}");

        let e = replace(r#""position": [1.0, 0.0]"#, r#""position": [1.0]"#).unwrap_err();
        assert!(matches!(&e, ScenarioError::Field { field, .. } if field == "evader.position"), "{e}");

        let e = replace(r#""dt": 0.01"#, r#""dt": 10.0"#).unwrap_err();
        assert!(matches!(&e, ScenarioError::Field { field, .. } if field == "engagement"), "{e}");

        let e = replace(r#""dimension": 2"#, r#""dimension": 4"#).unwrap_err();
        assert!(matches!(&e, ScenarioError::Field { field, .. } if field == "dimension"), "{e}");

        let e = replace(r#""model": "bounded_speed", "params": {"v_max": 2.0}"#, r#""model": "rocket", "params": {}"#)
            .unwrap_err();
        assert!(matches!(&e, ScenarioError::Field { field, .. } if field == "pursuer.model"), "{e}");
    }

    #[test]
    fn dubins_heading_sets_velocity() {
        let text = CHASE.replace(
            r#""model": "bounded_speed", "params": {"v_max": 1.0}, "position": [1.0, 0.0]"#,
            r#""model": "dubins", "params": {"speed": 1.0, "r_min": 0.5}, "position": [1.0, 0.0], "heading": 1.5707963267948966"#,
        );
        let s = ScenarioFile::from_json_str(&text).unwrap();
        let v = s.evader.state().velocity;
        assert!(v.x().abs() < 1e-12 && (v.y() - 1.0).abs() < 1e-12);
    }

    fn arb_vector(dim: usize) -> impl Strategy<Value = Vector> {
        proptest::collection::vec(-1e3..1e3f64, dim).prop_map(|v| Vector::from_slice(&v).unwrap())
    }

    fn arb_player(dim: usize) -> impl Strategy<Value = PlayerSpec> {
        let model = if dim == 2 {
            prop_oneof![
                (0.1..10.0f64).prop_map(|v| DynamicsModel::bounded_speed(v).unwrap()),
                (0.1..10.0f64, proptest::option::of(0.1..10.0f64))
                    .prop_map(|(a, b)| DynamicsModel::double_integrator(a, b).unwrap()),
                (0.1..10.0f64, 0.1..10.0f64).prop_map(|(s, r)| DynamicsModel::dubins(s, r).unwrap()),
            ]
            .boxed()
        } else {
            prop_oneof![
                (0.1..10.0f64).prop_map(|v| DynamicsModel::bounded_speed(v).unwrap()),
                (0.1..10.0f64, proptest::option::of(0.1..10.0f64))
                    .prop_map(|(a, b)| DynamicsModel::double_integrator(a, b).unwrap()),
            ]
            .boxed()
        };
        (
            model,
            arb_vector(dim),
            proptest::option::of(arb_vector(dim)),
            proptest::option::of(-3.0..3.0f64),
        )
            .prop_map(|(model, position, velocity, heading)| PlayerSpec {
                model,
                position,
                velocity,
                heading,
            })
    }

    fn arb_scenario() -> impl Strategy<Value = ScenarioFile> {
        (2usize..=3).prop_flat_map(|dim| {
            (
                arb_player(dim),
                arb_player(dim),
                0.0..5.0f64,
                0.1..10.0f64,
                1usize..200,
                0.001..0.1f64,
                0.0..1.0f64,
                proptest::option::of(1.0..100.0f64),
                any::<u64>(),
            )
                .prop_map(move |(p, e, t0, len, n, dt, eps, arena, seed)| ScenarioFile {
                    dimension: dim,
                    pursuer: p,
                    evader: e,
                    window: WindowSpec {
                        t_start: t0,
                        t_end: t0 + len,
                        n_leaves: n,
                    },
                    engagement: EngagementConfig {
                        dt,
                        t_max: len,
                        capture_radius: eps,
                        arena_radius: arena,
                    },
                    seed,
                })
        })
    }

    proptest! {
        #[test]
        fn written_scenarios_reparse_identically(s in arb_scenario()) {
            let text = s.to_json_pretty();
            prop_assert_eq!(ScenarioFile::from_json_str(&text).unwrap(), s);
        }
    }
}
