//! Space-based road-aligned kinematic model.
//!
//! With `kappa` the path curvature and `u` the vehicle curvature:
//!
//! ```text
//! e_y'   = (1 - kappa e_y) tan(e_psi)
//! e_psi' = u (1 - kappa e_y) / cos(e_psi) - kappa
//! ```
//!
//! Derivatives are with respect to path arclength. The model is discretized
//! with one explicit Euler step per station.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frenet::ReferencePath;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("heading error {e_psi} rad reaches the model singularity")]
    HeadingSingularity { e_psi: f64 },
    #[error("lateral offset {e_y} m reaches the curvature center (kappa = {kappa})")]
    CurvatureSingularity { e_y: f64, kappa: f64 },
    #[error("rollout left the model domain at station {station}: {source}")]
    RolloutSingularity {
        station: usize,
        #[source]
        source: Box<ModelError>,
    },
    #[error("{count} controls exceed the {available} steps available from station {start}")]
    TooManyControls {
        count: usize,
        available: usize,
        start: usize,
    },
    #[error("invalid vehicle parameter: {0}")]
    InvalidParameter(String),
}

/// Rectangular body with the rear axle as reference point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleGeometry {
    pub wheelbase: f64,
    pub width: f64,
    pub front_overhang: f64,
    pub rear_overhang: f64,
}

impl Default for VehicleGeometry {
    /// A 12 m city bus.
    fn default() -> Self {
        Self {
            wheelbase: 6.0,
            width: 2.55,
            front_overhang: 2.7,
            rear_overhang: 3.3,
        }
    }
}

impl VehicleGeometry {
    pub fn total_length(&self) -> f64 {
        self.wheelbase + self.front_overhang + self.rear_overhang
    }

    pub fn half_width(&self) -> f64 {
        0.5 * self.width
    }

    /// Longitudinal offset of the front bumper from the rear axle.
    pub fn front_extent(&self) -> f64 {
        self.wheelbase + self.front_overhang
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let fields = [
            ("wheelbase", self.wheelbase),
            ("width", self.width),
            ("front_overhang", self.front_overhang),
            ("rear_overhang", self.rear_overhang),
        ];
        for (name, v) in fields {
            if !(v > 0.0) || !v.is_finite() {
                return Err(ModelError::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Corner of the body: `front` selects the front bumper, `left` the left side.
    pub fn corner(&self, front: bool, left: bool) -> BodyPointSpec {
        BodyPointSpec {
            longitudinal_offset: if front {
                self.front_extent()
            } else {
                -self.rear_overhang
            },
            lateral_offset: if left { self.half_width() } else { -self.half_width() },
            tag: BodyPointTag::Corner,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VehicleStateZ {
    pub e_y: f64,
    pub e_psi: f64,
}

impl VehicleStateZ {
    pub const ZERO: Self = Self { e_y: 0.0, e_psi: 0.0 };

    pub const fn new(e_y: f64, e_psi: f64) -> Self {
        Self { e_y, e_psi }
    }
}

/// Vehicle curvature command.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ControlInput {
    pub u: f64,
}

impl ControlInput {
    pub const fn new(u: f64) -> Self {
        Self { u }
    }
}

/// Magnitude and per-station rate limits on the curvature command.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActuatorLimits {
    pub u_max: f64,
    pub u_rate_max: f64,
}

impl Default for ActuatorLimits {
    fn default() -> Self {
        Self {
            u_max: 1.0 / 12.0,
            u_rate_max: 0.01,
        }
    }
}

/// `z_{i+1} = A z_i + B u_i + G` for one station step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearizedDynamics {
    pub a: [[f64; 2]; 2],
    pub b: [f64; 2],
    pub g: [f64; 2],
}

impl LinearizedDynamics {
    pub fn apply(&self, z: VehicleStateZ, u: f64) -> VehicleStateZ {
        VehicleStateZ::new(
            self.a[0][0] * z.e_y + self.a[0][1] * z.e_psi + self.b[0] * u + self.g[0],
            self.a[1][0] * z.e_y + self.a[1][1] * z.e_psi + self.b[1] * u + self.g[1],
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BodyPointTag {
    EdgeLeft,
    EdgeRight,
    WheelbaseLeft,
    WheelbaseRight,
    Corner,
}

/// A point fixed to the body, relative to the rear axle center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BodyPointSpec {
    /// Positive forward.
    pub longitudinal_offset: f64,
    /// Positive to the left.
    pub lateral_offset: f64,
    pub tag: BodyPointTag,
}

impl BodyPointSpec {
    pub fn is_left(&self) -> bool {
        self.lateral_offset > 0.0
    }
}

fn check_domain(z: VehicleStateZ, kappa: f64) -> Result<f64, ModelError> {
    if !(z.e_psi.cos() > 1e-9) {
        return Err(ModelError::HeadingSingularity { e_psi: z.e_psi });
    }
    let scale = 1.0 - kappa * z.e_y;
    if !(scale > 0.0) {
        return Err(ModelError::CurvatureSingularity { e_y: z.e_y, kappa });
    }
    Ok(scale)
}

/// Arclength derivatives `(e_y', e_psi')`.
pub fn dynamics_rhs(z: VehicleStateZ, u: ControlInput, kappa: f64) -> Result<[f64; 2], ModelError> {
    let scale = check_domain(z, kappa)?;
    let (sin, cos) = z.e_psi.sin_cos();
    Ok([scale * sin / cos, u.u * scale / cos - kappa])
}

/// Analytic Jacobians `(df/dz, df/du)` of [`dynamics_rhs`].
pub fn dynamics_jacobians(
    z: VehicleStateZ,
    u: ControlInput,
    kappa: f64,
) -> Result<([[f64; 2]; 2], [f64; 2]), ModelError> {
    let scale = check_domain(z, kappa)?;
    let (sin, cos) = z.e_psi.sin_cos();
    let tan = sin / cos;
    let dz = [
        [-kappa * tan, scale / (cos * cos)],
        [-kappa * u.u / cos, u.u * scale * sin / (cos * cos)],
    ];
    let du = [0.0, scale / cos];
    Ok((dz, du))
}

/// Explicit-Euler linearization around `(z_ref, u_ref)`.
pub fn linearize(
    z_ref: VehicleStateZ,
    u_ref: ControlInput,
    kappa: f64,
    delta_s: f64,
) -> Result<LinearizedDynamics, ModelError> {
    let f = dynamics_rhs(z_ref, u_ref, kappa)?;
    let (dz, du) = dynamics_jacobians(z_ref, u_ref, kappa)?;
    let zr = [z_ref.e_y, z_ref.e_psi];
    let mut a = [[0.0; 2]; 2];
    let mut b = [0.0; 2];
    let mut g = [0.0; 2];
    for r in 0..2 {
        for c in 0..2 {
            a[r][c] = if r == c { 1.0 } else { 0.0 } + delta_s * dz[r][c];
        }
        b[r] = delta_s * du[r];
        g[r] = delta_s * (f[r] - dz[r][0] * zr[0] - dz[r][1] * zr[1] - du[r] * u_ref.u);
    }
    Ok(LinearizedDynamics { a, b, g })
}

/// One nonlinear Euler step.
pub fn step(z: VehicleStateZ, u: ControlInput, kappa: f64, delta_s: f64) -> Result<VehicleStateZ, ModelError> {
    let f = dynamics_rhs(z, u, kappa)?;
    Ok(VehicleStateZ::new(z.e_y + delta_s * f[0], z.e_psi + delta_s * f[1]))
}

/// Nonlinear rollout from station 0.
pub fn rollout(
    path: &ReferencePath,
    z0: VehicleStateZ,
    controls: &[ControlInput],
) -> Result<Vec<VehicleStateZ>, ModelError> {
    rollout_from(path, 0, z0, controls)
}

/// Nonlinear rollout starting at station `start`; returns `controls.len() + 1`
/// states, the first being `z0`.
pub fn rollout_from(
    path: &ReferencePath,
    start: usize,
    z0: VehicleStateZ,
    controls: &[ControlInput],
) -> Result<Vec<VehicleStateZ>, ModelError> {
    let available = path.len().saturating_sub(start + 1);
    if controls.len() > available {
        return Err(ModelError::TooManyControls {
            count: controls.len(),
            available,
            start,
        });
    }
    let ds = path.delta_s();
    let mut states = Vec::with_capacity(controls.len() + 1);
    states.push(z0);
    let mut z = z0;
    for (k, u) in controls.iter().enumerate() {
        let station = start + k;
        z = step(z, *u, path.curvatures()[station], ds).map_err(|e| ModelError::RolloutSingularity {
            station,
            source: Box::new(e),
        })?;
        states.push(z);
    }
    Ok(states)
}

/// `u = tan(phi) / L`.
pub fn steering_to_curvature(steering: f64, wheelbase: f64) -> f64 {
    steering.tan() / wheelbase
}

pub fn curvature_to_steering(u: f64, wheelbase: f64) -> f64 {
    (u * wheelbase).atan()
}

/// Body points used for constraint generation: `k` equispaced points on each
/// full-length side, `m` on each wheelbase side, then the four corners.
pub fn body_sample_points(geom: &VehicleGeometry, k: usize, m: usize) -> Result<Vec<BodyPointSpec>, ModelError> {
    if k < 2 || m < 2 {
        return Err(ModelError::InvalidParameter(format!(
            "need at least two points per edge, got K = {k}, M = {m}"
        )));
    }
    geom.validate()?;
    let half = geom.half_width();
    let rear = -geom.rear_overhang;
    let front = geom.front_extent();
    let lerp = |a: f64, b: f64, i: usize, n: usize| a + (b - a) * i as f64 / (n - 1) as f64;
    let mut out = Vec::with_capacity(2 * k + 2 * m + 4);
    for (lat, tag) in [(half, BodyPointTag::EdgeLeft), (-half, BodyPointTag::EdgeRight)] {
        for i in 0..k {
            out.push(BodyPointSpec {
                longitudinal_offset: lerp(rear, front, i, k),
                lateral_offset: lat,
                tag,
            });
        }
    }
    for (lat, tag) in [
        (half, BodyPointTag::WheelbaseLeft),
        (-half, BodyPointTag::WheelbaseRight),
    ] {
        for i in 0..m {
            out.push(BodyPointSpec {
                longitudinal_offset: lerp(0.0, geom.wheelbase, i, m),
                lateral_offset: lat,
                tag,
            });
        }
    }
    for (front_side, left) in [(true, true), (true, false), (false, true), (false, false)] {
        out.push(geom.corner(front_side, left));
    }
    Ok(out)
}
