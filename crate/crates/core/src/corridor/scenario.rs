//! Scenario documents (JSON).
//!
//! ```json
//! {
//!   "path": {"waypoints": [[0, 0], [60, 0]], "delta_s": 0.5},
//!   "vehicle": {"wheelbase": 6.0, "width": 2.55, "front_overhang": 2.7, "rear_overhang": 3.3},
//!   "start": {"s": 5.0, "e_y": 0.0, "e_psi": 0.0, "u": 0.0},
//!   "limits": {"u_max": 0.0833, "u_rate_max": 0.01},
//!   "corridor": {"left": [[0, 1.75, 3.0], [60, 1.75, 3.0]], "right": [[0, -1.75, -3.0], [60, -1.75, -3.0]]},
//!   "obstacles": [{"vertices": [[20, 1], [24, 1], [24, 3], [20, 3]], "label": "obstacle"}],
//!   "weights": {"center": 1, "smooth": 10, "overhang": 10},
//!   "sqp": {"max_iter": 20, "tol": 0.001, "trust_y": 0.3, "trust_psi": 0.1, "trust_u": 0.02}
//! }
//! ```
//!
//! Corridor rows are `[s, drivable, obstacle]` knots of a piecewise-linear
//! profile. Everything but `path`, `start` and `corridor` has defaults; an
//! optional `sampling` block sets the body point counts.

use serde::Deserialize;
use thiserror::Error;

use super::{apply_polygon_obstacle, Corridor, CorridorError, ObstacleLabel, ObstaclePolygon};
use crate::frenet::{CartesianPoint, GeometryError, PathBuilder, ReferencePath};
use crate::planner::{SqpSettings, Weights};
use crate::vehicle::{ActuatorLimits, ControlInput, VehicleGeometry, VehicleStateZ};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid `{field}`: {message}")]
    Invalid { field: String, message: String },
}

impl ScenarioError {
    fn invalid(field: impl Into<String>, message: impl ToString) -> Self {
        Self::Invalid {
            field: field.into(),
            message: message.to_string(),
        }
    }
}

/// Body point counts: `edge_points` per full-length side, `wheelbase_points`
/// per wheelbase side.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sampling {
    pub edge_points: usize,
    pub wheelbase_points: usize,
}

impl Default for Sampling {
    fn default() -> Self {
        Self {
            edge_points: 8,
            wheelbase_points: 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StartState {
    pub s: f64,
    pub z: VehicleStateZ,
    pub u: ControlInput,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub waypoints: Vec<CartesianPoint>,
    pub path: ReferencePath,
    pub vehicle: VehicleGeometry,
    pub start: StartState,
    pub limits: ActuatorLimits,
    /// Bounds from the corridor profiles alone.
    pub base_corridor: Corridor,
    /// Bounds after all obstacle polygons are applied.
    pub corridor: Corridor,
    pub obstacles: Vec<ObstaclePolygon>,
    pub weights: Weights,
    pub sqp: SqpSettings,
    pub sampling: Sampling,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PathDoc {
    waypoints: Vec<[f64; 2]>,
    #[serde(default = "default_delta_s")]
    delta_s: f64,
    #[serde(default = "default_kappa_max")]
    kappa_max: f64,
}

fn default_delta_s() -> f64 {
    0.5
}

fn default_kappa_max() -> f64 {
    0.5
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StartDoc {
    s: f64,
    #[serde(default)]
    e_y: f64,
    #[serde(default)]
    e_psi: f64,
    #[serde(default)]
    u: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CorridorDoc {
    left: Vec<[f64; 3]>,
    right: Vec<[f64; 3]>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ObstacleDoc {
    vertices: Vec<[f64; 2]>,
    #[serde(default = "default_label")]
    label: ObstacleLabel,
}

fn default_label() -> ObstacleLabel {
    ObstacleLabel::Obstacle
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    path: PathDoc,
    #[serde(default)]
    vehicle: VehicleGeometry,
    start: StartDoc,
    #[serde(default)]
    limits: ActuatorLimits,
    corridor: CorridorDoc,
    #[serde(default)]
    obstacles: Vec<ObstacleDoc>,
    #[serde(default)]
    weights: Weights,
    #[serde(default)]
    sqp: SqpSettings,
    #[serde(default)]
    sampling: Sampling,
}

fn positive(field: &str, v: f64) -> Result<(), ScenarioError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ScenarioError::invalid(field, format!("must be positive, got {v}")))
    }
}

fn nonnegative(field: &str, v: f64) -> Result<(), ScenarioError> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ScenarioError::invalid(field, format!("must be non-negative, got {v}")))
    }
}

/// Parses and validates a scenario document.
pub fn load_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let doc: ScenarioDoc = serde_json::from_str(text).map_err(|e| ScenarioError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;

    let waypoints: Vec<CartesianPoint> = doc
        .path
        .waypoints
        .iter()
        .map(|p| CartesianPoint::new(p[0], p[1]))
        .collect();
    positive("path.delta_s", doc.path.delta_s)?;
    positive("path.kappa_max", doc.path.kappa_max)?;
    let path = PathBuilder::new(doc.path.delta_s)
        .with_kappa_max(doc.path.kappa_max)
        .build(&waypoints)
        .map_err(|e| match e {
            GeometryError::DuplicateWaypoint { .. } | GeometryError::TooFewWaypoints(_) | GeometryError::NonFinite => {
                ScenarioError::invalid("path.waypoints", e)
            }
            GeometryError::CurvatureLimit { .. } => ScenarioError::invalid("path.kappa_max", e),
            _ => ScenarioError::invalid("path.delta_s", e),
        })?;

    let v = doc.vehicle;
    positive("vehicle.wheelbase", v.wheelbase)?;
    positive("vehicle.width", v.width)?;
    positive("vehicle.front_overhang", v.front_overhang)?;
    positive("vehicle.rear_overhang", v.rear_overhang)?;

    positive("limits.u_max", doc.limits.u_max)?;
    positive("limits.u_rate_max", doc.limits.u_rate_max)?;

    nonnegative("weights.center", doc.weights.center)?;
    nonnegative("weights.smooth", doc.weights.smooth)?;
    nonnegative("weights.overhang", doc.weights.overhang)?;
    doc.sqp
        .validate()
        .map_err(|(field, msg)| ScenarioError::invalid(format!("sqp.{field}"), msg))?;

    if doc.sampling.edge_points < 2 {
        return Err(ScenarioError::invalid("sampling.edge_points", "must be at least 2"));
    }
    if doc.sampling.wheelbase_points < 2 {
        return Err(ScenarioError::invalid(
            "sampling.wheelbase_points",
            "must be at least 2",
        ));
    }

    let base_corridor =
        Corridor::from_profiles(&path, &doc.corridor.left, &doc.corridor.right).map_err(|e| match e {
            CorridorError::InvalidProfile { side, .. } => ScenarioError::invalid(format!("corridor.{side}"), e),
            _ => ScenarioError::invalid("corridor", e),
        })?;

    let mut obstacles = Vec::with_capacity(doc.obstacles.len());
    let mut corridor = base_corridor.clone();
    for (k, o) in doc.obstacles.iter().enumerate() {
        let field = format!("obstacles[{k}]");
        let verts = o.vertices.iter().map(|p| CartesianPoint::new(p[0], p[1])).collect();
        let poly = ObstaclePolygon::new(verts, o.label).map_err(|e| ScenarioError::invalid(&field, e))?;
        corridor = apply_polygon_obstacle(&corridor, &path, &poly).map_err(|e| ScenarioError::invalid(&field, e))?;
        obstacles.push(poly);
    }

    let st = &doc.start;
    if !st.s.is_finite() || st.s < 0.0 || st.s > path.length() {
        return Err(ScenarioError::invalid(
            "start.s",
            format!("{} is outside the path [0, {}]", st.s, path.length()),
        ));
    }
    if !(st.e_psi.abs() < std::f64::consts::FRAC_PI_2) {
        return Err(ScenarioError::invalid(
            "start.e_psi",
            "heading error must be within (-pi/2, pi/2)",
        ));
    }
    if !(st.u.abs() <= doc.limits.u_max) {
        return Err(ScenarioError::invalid(
            "start.u",
            format!("|u| exceeds u_max = {}", doc.limits.u_max),
        ));
    }
    let b = corridor
        .bounds_at(st.s)
        .map_err(|e| ScenarioError::invalid("start.s", e))?;
    if !(st.e_y >= b.drivable_right && st.e_y <= b.drivable_left) {
        return Err(ScenarioError::invalid(
            "start.e_y",
            format!(
                "{} is outside the drivable band [{}, {}]",
                st.e_y, b.drivable_right, b.drivable_left
            ),
        ));
    }

    Ok(Scenario {
        waypoints,
        path,
        vehicle: v,
        start: StartState {
            s: st.s,
            z: VehicleStateZ::new(st.e_y, st.e_psi),
            u: ControlInput::new(st.u),
        },
        limits: doc.limits,
        base_corridor,
        corridor,
        obstacles,
        weights: doc.weights,
        sqp: doc.sqp,
        sampling: doc.sampling,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "path": {"waypoints": [[0, 0], [40, 0]], "delta_s": 0.5},
        "start": {"s": 6.0},
        "corridor": {"left": [[0, 3.0, 4.0], [40, 3.0, 4.0]], "right": [[0, -3.0, -4.0], [40, -3.0, -4.0]]}
    }"#;

    #[test]
    fn minimal_document() {
        let sc = load_scenario(MINIMAL).unwrap();
        assert_eq!(sc.path.len(), 81);
        assert!(sc.path.curvatures().iter().all(|k| *k == 0.0));
        assert!(sc
            .corridor
            .bounds()
            .iter()
            .all(|b| b.drivable_left == 3.0 && b.obstacle_right == -4.0));
        assert_eq!(sc.vehicle, VehicleGeometry::default());
        assert_eq!(sc.sampling, Sampling::default());
    }

    #[test]
    fn crossing_bounds_name_the_station() {
        let text = MINIMAL.replace("[40, 3.0, 4.0]", "[40, -5.0, 4.0]");
        let err = load_scenario(&text).unwrap_err().to_string();
        assert!(err.contains("corridor.left") || err.contains("corridor"), "{err}");
        assert!(err.contains("station"), "{err}");
    }

    #[test]
    fn parse_errors_carry_position() {
        let err = load_scenario("{\n  \"path\": {\"waypoints\": [[1,\n}").unwrap_err();
        assert!(matches!(err, ScenarioError::Parse { line: 3, .. }), "{err}");
        let err = load_scenario(&MINIMAL.replace("\"start\"", "\"begin\"")).unwrap_err();
        assert!(matches!(err, ScenarioError::Parse { .. }));
    }

    #[test]
    fn field_validation() {
        let err = load_scenario(&MINIMAL.replace("\"s\": 6.0", "\"s\": 6.0, \"e_y\": 3.5")).unwrap_err();
        assert!(err.to_string().contains("start.e_y"), "{err}");
        let err = load_scenario(&MINIMAL.replace("\"delta_s\": 0.5", "\"delta_s\": -1")).unwrap_err();
        assert!(err.to_string().contains("path.delta_s"), "{err}");
    }
}
