//! Geometric ground truth: body poses in the global frame and the exact
//! lateral offsets the planner's linearizations approximate.

use thiserror::Error;

mod footprint;
pub mod polygon;

pub use footprint::{
    body_polygon, check_plan, FootprintChecker, FootprintReport, FootprintSample, CORNER_NAMES, OUTLINE_STEP,
};

use crate::frenet::{CartesianPoint, CartesianPose, FrenetCoord, GeometryError, ReferencePath};
use crate::vehicle::{BodyPointSpec, ModelError, VehicleStateZ};

pub const FD_STEP_EY: f64 = 1e-4;
pub const FD_STEP_EPSI: f64 = 1e-4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("body edge is parallel to the path normal at s = {0}")]
    ParallelEdge(f64),
    #[error("plan is inconsistent: {0}")]
    Inconsistent(String),
}

/// Pose of the rear axle for the road-aligned state `(s, z)`.
pub fn pose_of(path: &ReferencePath, s: f64, z: VehicleStateZ) -> Result<CartesianPose, GeometryError> {
    let position = path.to_cartesian(FrenetCoord::new(s, z.e_y))?;
    Ok(CartesianPose::new(position, path.heading_at(s)? + z.e_psi))
}

pub fn body_point_position(
    path: &ReferencePath,
    s: f64,
    z: VehicleStateZ,
    bp: &BodyPointSpec,
) -> Result<CartesianPoint, GeometryError> {
    Ok(pose_of(path, s, z)?.offset(bp.longitudinal_offset, bp.lateral_offset))
}

/// Exact lateral offset, along the path normal at `s_hat`, of the line
/// carrying the body edge at lateral position `lateral`.
pub fn edge_lateral_geometric(
    path: &ReferencePath,
    s: f64,
    z: VehicleStateZ,
    lateral: f64,
    s_hat: f64,
) -> Result<f64, OracleError> {
    let pose = pose_of(path, s, z)?;
    let on_edge = pose.offset(0.0, lateral);
    let origin = path.point_at(s_hat)?;
    let psi = path.heading_at(s_hat)?;
    let (ns, nc) = psi.sin_cos();
    let normal = (-ns, nc);
    let dir = (pose.heading.cos(), pose.heading.sin());
    let cross = |a: (f64, f64), b: (f64, f64)| a.0 * b.1 - a.1 * b.0;
    let denom = cross(normal, dir);
    if denom.abs() < 1e-9 {
        return Err(OracleError::ParallelEdge(s_hat));
    }
    let r = (on_edge.x - origin.x, on_edge.y - origin.y);
    Ok(cross(r, dir) / denom)
}

/// Central-difference partials of the exact edge offset with respect to
/// `(e_y, e_psi)`, at the station the body point occupies at `(s, z)`.
pub fn finite_diff_partials(
    path: &ReferencePath,
    s: f64,
    z: VehicleStateZ,
    bp: &BodyPointSpec,
    h: (f64, f64),
) -> Result<(f64, f64), OracleError> {
    let s_hat = path.to_frenet(body_point_position(path, s, z, bp)?)?.s;
    let eval = |dz: VehicleStateZ| {
        edge_lateral_geometric(
            path,
            s,
            VehicleStateZ::new(z.e_y + dz.e_y, z.e_psi + dz.e_psi),
            bp.lateral_offset,
            s_hat,
        )
    };
    let d_ey = (eval(VehicleStateZ::new(h.0, 0.0))? - eval(VehicleStateZ::new(-h.0, 0.0))?) / (2.0 * h.0);
    let d_epsi = (eval(VehicleStateZ::new(0.0, h.1))? - eval(VehicleStateZ::new(0.0, -h.1))?) / (2.0 * h.1);
    Ok((d_ey, d_epsi))
}
