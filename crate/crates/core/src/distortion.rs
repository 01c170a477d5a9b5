//! Arc-circle approximation of a rigid body edge seen in the road-aligned frame.
//!
//! On a path of curvature `kappa`, a straight body edge maps to a curve in
//! `(s, e_y)` that is well approximated by a circle of radius `1/kappa`
//! offset by the edge's lateral position, centered perpendicular to the rear
//! axle. For a fixed station `s_hat` this gives the edge's lateral offset as a
//! closed-form function of `(e_y, e_psi)` with cheap derivatives.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frenet::{GeometryError, ReferencePath};
use crate::oracle::body_point_position;
use crate::vehicle::{BodyPointSpec, VehicleStateZ};

/// Below this curvature magnitude no arc center is reported; the edge is
/// evaluated through its straight-body limit.
pub const KAPPA_MIN: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistortionError {
    #[error("station {s_hat} is out of reach of the edge arc (discriminant {discriminant})")]
    OutOfReach { s_hat: f64, discriminant: f64 },
    #[error("heading error {0} rad is outside the model domain")]
    HeadingDomain(f64),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArcCircle {
    pub c_s: f64,
    pub c_ey: f64,
    /// Signed like the curvature: positive centers lie toward negative `e_y`.
    pub radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeEvalContext {
    /// Station at which the edge offset is evaluated, held fixed.
    pub station_hat: f64,
    pub body_point: BodyPointSpec,
    /// Path curvature at the axle station.
    pub kappa: f64,
    pub axle_station: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    /// `P z + p >= bound`
    Lower,
    /// `P z + p <= bound`
    Upper,
}

/// Linearized lateral offset `P z + p` of one body point, with its bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintRow {
    pub coeffs: [f64; 2],
    pub offset: f64,
    pub bound: f64,
    pub sense: Sense,
}

impl ConstraintRow {
    pub fn evaluate(&self, z: VehicleStateZ) -> f64 {
        self.coeffs[0] * z.e_y + self.coeffs[1] * z.e_psi + self.offset
    }

    /// Amount by which `z` violates the row; zero or negative when satisfied.
    pub fn violation(&self, z: VehicleStateZ) -> f64 {
        match self.sense {
            Sense::Upper => self.evaluate(z) - self.bound,
            Sense::Lower => self.bound - self.evaluate(z),
        }
    }
}

/// Arc center in road-aligned coordinates.
pub fn arc_center(z: VehicleStateZ, kappa: f64, s: f64) -> (f64, f64) {
    let rho = 1.0 / kappa;
    let (sin, cos) = z.e_psi.sin_cos();
    (s + rho * sin, z.e_y - rho * cos)
}

/// The arc for one body point, or `None` in the straight-body regime.
pub fn arc_circle(ctx: &EdgeEvalContext, z: VehicleStateZ) -> Option<ArcCircle> {
    if ctx.kappa.abs() < KAPPA_MIN {
        return None;
    }
    let (c_s, c_ey) = arc_center(z, ctx.kappa, ctx.axle_station);
    Some(ArcCircle {
        c_s,
        c_ey,
        radius: 1.0 / ctx.kappa + ctx.body_point.lateral_offset,
    })
}

/// Shared intermediate terms. With `rho = 1/kappa`, `d = s_hat - s` and
/// `lambda` the lateral offset of the point,
///
/// ```text
/// e_y_hat = c_ey + sgn(kappa) sqrt((rho + lambda)^2 - (s_hat - c_s)^2)
///         = e_y + m / (cos(e_psi) (1 + sqrt(1 + q)))
/// m = 2 (lambda + d sin e_psi) + kappa (lambda^2 - d^2)
/// q = kappa m / cos^2(e_psi)
/// ```
///
/// The second form has no `1/kappa` and reduces to the straight body at
/// `kappa = 0`, so one expression serves every curvature.
struct Terms {
    sin: f64,
    cos: f64,
    d: f64,
    m: f64,
    root: f64,
}

fn terms(ctx: &EdgeEvalContext, z: VehicleStateZ) -> Result<Terms, DistortionError> {
    let (sin, cos) = z.e_psi.sin_cos();
    if !(cos > 1e-9) {
        return Err(DistortionError::HeadingDomain(z.e_psi));
    }
    let lambda = ctx.body_point.lateral_offset;
    let kappa = ctx.kappa;
    let d = ctx.station_hat - ctx.axle_station;
    let m = 2.0 * (lambda + d * sin) + kappa * (lambda * lambda - d * d);
    let disc = 1.0 + kappa * m / (cos * cos);
    if !(disc > 0.0) {
        return Err(DistortionError::OutOfReach {
            s_hat: ctx.station_hat,
            discriminant: disc,
        });
    }
    Ok(Terms {
        sin,
        cos,
        d,
        m,
        root: disc.sqrt(),
    })
}

/// Approximate lateral offset of the body edge at `ctx.station_hat`.
pub fn edge_lateral(ctx: &EdgeEvalContext, z: VehicleStateZ) -> Result<f64, DistortionError> {
    let t = terms(ctx, z)?;
    Ok(z.e_y + t.m / (t.cos * (1.0 + t.root)))
}

/// `(d e_y_hat / d e_y, d e_y_hat / d e_psi)` at fixed `station_hat`.
pub fn edge_partials(ctx: &EdgeEvalContext, z: VehicleStateZ) -> Result<(f64, f64), DistortionError> {
    let t = terms(ctx, z)?;
    let d_epsi = (t.d + t.sin * t.m / (t.cos * t.cos * (1.0 + t.root))) / t.root;
    Ok((1.0, d_epsi))
}

/// Station `s_hat` of a body point for the axle at `(s, z)`.
pub fn station_of_body_point(
    path: &ReferencePath,
    s: f64,
    z: VehicleStateZ,
    bp: &BodyPointSpec,
) -> Result<f64, GeometryError> {
    let p = body_point_position(path, s, z, bp)?;
    Ok(path.to_frenet(p)?.s)
}

/// First-order expansion of the edge offset around `z_ref`, anchored at the
/// exact offset `exact_ey` of the point at the reference pose.
pub fn taylor_constraint_row(
    ctx: &EdgeEvalContext,
    z_ref: VehicleStateZ,
    exact_ey: f64,
    bound: f64,
    sense: Sense,
) -> Result<ConstraintRow, DistortionError> {
    let (d_ey, d_epsi) = edge_partials(ctx, z_ref)?;
    Ok(ConstraintRow {
        coeffs: [d_ey, d_epsi],
        offset: exact_ey - d_ey * z_ref.e_y - d_epsi * z_ref.e_psi,
        bound,
        sense,
    })
}
