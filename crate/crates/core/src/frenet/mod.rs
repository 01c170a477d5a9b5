//! Discretized reference paths and conversion between Cartesian and
//! road-aligned `(s, e_y)` coordinates.
//!
//! Lateral offsets are positive to the left of the path tangent, and a left
//! turn has positive curvature. Everything downstream uses this convention.

mod quad;
mod segment;
mod spline;

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numfmt::fmt_g9;
use segment::{HermiteSegment, Vec2};
use spline::PlanarSpline;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("at least two waypoints are required, got {0}")]
    TooFewWaypoints(usize),
    #[error("waypoints {index} and {} coincide", index + 1)]
    DuplicateWaypoint { index: usize },
    #[error("non-finite coordinate in input")]
    NonFinite,
    #[error("station spacing must be positive, got {0}")]
    NonPositiveSpacing(f64),
    #[error("station spacing {delta_s} exceeds the curve length {length}")]
    SpacingExceedsLength { delta_s: f64, length: f64 },
    #[error("curvature {kappa} at station {station} exceeds the limit {limit}")]
    CurvatureLimit { station: usize, kappa: f64, limit: f64 },
    #[error("inconsistent path samples: {0}")]
    InvalidSamples(String),
    #[error("arclength {s} outside the path domain [0, {length}]")]
    OutOfDomain { s: f64, length: f64 },
    #[error("point ({x}, {y}) projects beyond the path endpoints")]
    BeyondEndpoints { x: f64, y: f64 },
    #[error("point at s = {s}, e_y = {e_y} lies beyond the center of curvature")]
    BeyondCurvatureCenter { s: f64, e_y: f64 },
}

/// Position in the global frame, meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CartesianPoint {
    pub x: f64,
    pub y: f64,
}

impl CartesianPoint {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &CartesianPoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    fn vec(self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    fn from_vec(v: Vec2) -> Self {
        Self::new(v.x, v.y)
    }
}

/// Position plus heading; heading is kept in `(-pi, pi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CartesianPose {
    pub position: CartesianPoint,
    pub heading: f64,
}

impl CartesianPose {
    pub fn new(position: CartesianPoint, heading: f64) -> Self {
        Self {
            position,
            heading: wrap_angle(heading),
        }
    }

    /// Point at `longitudinal` ahead and `lateral` to the left of this pose.
    pub fn offset(&self, longitudinal: f64, lateral: f64) -> CartesianPoint {
        let (sin, cos) = self.heading.sin_cos();
        CartesianPoint::new(
            self.position.x + longitudinal * cos - lateral * sin,
            self.position.y + longitudinal * sin + lateral * cos,
        )
    }
}

/// Road-aligned coordinate: arclength and signed lateral offset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrenetCoord {
    pub s: f64,
    pub e_y: f64,
}

impl FrenetCoord {
    pub const fn new(s: f64, e_y: f64) -> Self {
        Self { s, e_y }
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::PI;
    let mut r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    r
}

/// Curve sampled every `delta_s` of arclength, with heading and curvature
/// per station.
#[derive(Debug, Clone)]
pub struct ReferencePath {
    delta_s: f64,
    stations: Vec<f64>,
    points: Vec<CartesianPoint>,
    headings: Vec<f64>,
    curvatures: Vec<f64>,
    segments: Vec<HermiteSegment>,
}

/// Settings for turning waypoints into a [`ReferencePath`].
#[derive(Debug, Clone, Copy)]
pub struct PathBuilder {
    pub delta_s: f64,
    pub kappa_max: f64,
}

impl PathBuilder {
    pub const DEFAULT_KAPPA_MAX: f64 = 0.5;

    pub fn new(delta_s: f64) -> Self {
        Self {
            delta_s,
            kappa_max: Self::DEFAULT_KAPPA_MAX,
        }
    }

    pub fn with_kappa_max(mut self, kappa_max: f64) -> Self {
        self.kappa_max = kappa_max;
        self
    }

    /// Interpolates the waypoints with a cubic spline and resamples it
    /// uniformly in arclength.
    pub fn build(&self, waypoints: &[CartesianPoint]) -> Result<ReferencePath, GeometryError> {
        if waypoints.len() < 2 {
            return Err(GeometryError::TooFewWaypoints(waypoints.len()));
        }
        if waypoints.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        if !(self.delta_s > 0.0) || !self.delta_s.is_finite() {
            return Err(GeometryError::NonPositiveSpacing(self.delta_s));
        }
        for (index, w) in waypoints.windows(2).enumerate() {
            if w[0].distance(&w[1]) < 1e-9 {
                return Err(GeometryError::DuplicateWaypoint { index });
            }
        }
        let pts: Vec<(f64, f64)> = waypoints.iter().map(|p| (p.x, p.y)).collect();
        let spline = PlanarSpline::through(&pts);
        let length = spline.length();
        if self.delta_s > length + 1e-9 {
            return Err(GeometryError::SpacingExceedsLength {
                delta_s: self.delta_s,
                length,
            });
        }
        let n = (length / self.delta_s + 1e-9).floor() as usize;
        let mut points = Vec::with_capacity(n + 1);
        let mut headings = Vec::with_capacity(n + 1);
        let mut curvatures = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let (k, t) = spline.parameter_at(i as f64 * self.delta_s);
            let sample = spline.sample(k, t);
            if sample.curvature.abs() > self.kappa_max {
                return Err(GeometryError::CurvatureLimit {
                    station: i,
                    kappa: sample.curvature,
                    limit: self.kappa_max,
                });
            }
            points.push(CartesianPoint::new(sample.x, sample.y));
            headings.push(sample.heading);
            curvatures.push(sample.curvature);
        }
        ReferencePath::from_samples(self.delta_s, points, headings, curvatures)
    }
}

/// Builds a reference path from waypoints with the default curvature limit.
pub fn build_reference_path(waypoints: &[CartesianPoint], delta_s: f64) -> Result<ReferencePath, GeometryError> {
    PathBuilder::new(delta_s).build(waypoints)
}

impl ReferencePath {
    /// Assembles a path from already uniformly spaced samples.
    pub fn from_samples(
        delta_s: f64,
        points: Vec<CartesianPoint>,
        headings: Vec<f64>,
        curvatures: Vec<f64>,
    ) -> Result<Self, GeometryError> {
        if !(delta_s > 0.0) {
            return Err(GeometryError::NonPositiveSpacing(delta_s));
        }
        let n = points.len();
        if n < 2 || headings.len() != n || curvatures.len() != n {
            return Err(GeometryError::InvalidSamples(format!(
                "need matching lists of at least two samples (points {}, headings {}, curvatures {})",
                n,
                headings.len(),
                curvatures.len()
            )));
        }
        let finite = points.iter().all(|p| p.x.is_finite() && p.y.is_finite())
            && headings.iter().chain(&curvatures).all(|v| v.is_finite());
        if !finite {
            return Err(GeometryError::NonFinite);
        }
        let headings: Vec<f64> = headings.into_iter().map(wrap_angle).collect();
        for i in 0..n - 1 {
            let chord = points[i + 1].vec().sub(points[i].vec());
            let chord_heading = chord.y.atan2(chord.x);
            let mismatch = wrap_angle(chord_heading - headings[i]).abs();
            // The chord leans by half the turned angle; allow for that.
            let turned = wrap_angle(headings[i + 1] - headings[i]).abs();
            if mismatch > 0.05 + 0.5 * turned {
                return Err(GeometryError::InvalidSamples(format!(
                    "heading at station {i} disagrees with the segment direction by {mismatch} rad"
                )));
            }
        }
        let stations = (0..n).map(|i| i as f64 * delta_s).collect();
        let segments = (0..n - 1)
            .map(|i| {
                HermiteSegment::new(
                    points[i].vec(),
                    headings[i],
                    points[i + 1].vec(),
                    headings[i + 1],
                    delta_s,
                )
            })
            .collect();
        Ok(Self {
            delta_s,
            stations,
            points,
            headings,
            curvatures,
            segments,
        })
    }

    pub fn delta_s(&self) -> f64 {
        self.delta_s
    }

    /// Number of stations, `N + 1`.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Arclength of the last station.
    pub fn length(&self) -> f64 {
        *self.stations.last().expect("non-empty path")
    }

    pub fn stations(&self) -> &[f64] {
        &self.stations
    }

    pub fn points(&self) -> &[CartesianPoint] {
        &self.points
    }

    pub fn headings(&self) -> &[f64] {
        &self.headings
    }

    pub fn curvatures(&self) -> &[f64] {
        &self.curvatures
    }

    fn check_domain(&self, s: f64) -> Result<(), GeometryError> {
        let tol = 1e-9 * self.delta_s;
        if !s.is_finite() || s < -tol || s > self.length() + tol {
            return Err(GeometryError::OutOfDomain {
                s,
                length: self.length(),
            });
        }
        Ok(())
    }

    /// Segment index and local Hermite parameter for arclength `s`.
    fn locate(&self, s: f64) -> (usize, f64) {
        let last = self.segments.len() - 1;
        let i = ((s / self.delta_s).floor().max(0.0) as usize).min(last);
        let seg = &self.segments[i];
        let sigma = (s - self.stations[i]) * seg.length / self.delta_s;
        (i, seg.parameter_at(sigma))
    }

    fn frame(&self, s: f64) -> (Vec2, Vec2) {
        let (i, t) = self.locate(s);
        let seg = &self.segments[i];
        let d = seg.derivative(t);
        (seg.point(t), d.scale(1.0 / d.norm()))
    }

    /// Interpolated position `gamma(s)`.
    pub fn point_at(&self, s: f64) -> Result<CartesianPoint, GeometryError> {
        self.check_domain(s)?;
        Ok(CartesianPoint::from_vec(self.frame(s).0))
    }

    /// Interpolated tangent heading at `s`.
    pub fn heading_at(&self, s: f64) -> Result<f64, GeometryError> {
        self.check_domain(s)?;
        let (_, tangent) = self.frame(s);
        Ok(tangent.y.atan2(tangent.x))
    }

    /// Curvature at `s`, linearly interpolated between stations.
    pub fn curvature_at(&self, s: f64) -> Result<f64, GeometryError> {
        self.check_domain(s)?;
        let last = self.len() - 2;
        let i = ((s / self.delta_s).floor().max(0.0) as usize).min(last);
        let w = ((s - self.stations[i]) / self.delta_s).clamp(0.0, 1.0);
        Ok((1.0 - w) * self.curvatures[i] + w * self.curvatures[i + 1])
    }

    /// `gamma(s) + e_y * n(s)` with `n` the left unit normal.
    pub fn to_cartesian(&self, c: FrenetCoord) -> Result<CartesianPoint, GeometryError> {
        self.check_domain(c.s)?;
        let (p, tangent) = self.frame(c.s);
        Ok(CartesianPoint::from_vec(p.add(tangent.perp().scale(c.e_y))))
    }

    /// Normal projection of `p` onto the path.
    ///
    /// Candidates come from a nearest-station scan; each is refined by solving
    /// the orthogonality condition on the adjacent interpolated segments.
    /// Equidistant projections resolve to the smallest `s`.
    pub fn to_frenet(&self, p: CartesianPoint) -> Result<FrenetCoord, GeometryError> {
        if !p.x.is_finite() || !p.y.is_finite() {
            return Err(GeometryError::NonFinite);
        }
        let q = p.vec();
        let dist: Vec<f64> = self.points.iter().map(|s| s.distance(&p)).collect();
        let nearest = dist
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).expect("finite distance"))
            .map(|(i, _)| i)
            .expect("non-empty path");
        let dmin = dist[nearest];
        let n = self.len();
        let mut best: Option<(f64, f64, f64)> = None; // (distance, s, e_y)
        for j in 0..n {
            let local_min = (j == 0 || dist[j] <= dist[j - 1]) && (j + 1 == n || dist[j] <= dist[j + 1]);
            if !local_min || dist[j] > dmin + self.delta_s {
                continue;
            }
            for i in [j.wrapping_sub(1), j] {
                if i >= self.segments.len() {
                    continue;
                }
                let seg = &self.segments[i];
                let Some(t) = seg.project(q) else { continue };
                let foot = seg.point(t);
                let d = seg.derivative(t);
                let normal = d.scale(1.0 / d.norm()).perp();
                let offset = q.sub(foot);
                let e_y = offset.dot(normal);
                let distance = offset.norm();
                let s = self.stations[i] + seg.arclength(t) * self.delta_s / seg.length;
                let better = match best {
                    None => true,
                    Some((bd, bs, _)) => {
                        let tie = 1e-9 * (1.0 + bd);
                        distance < bd - tie || (distance <= bd + tie && s < bs)
                    }
                };
                if better {
                    best = Some((distance, s, e_y));
                }
            }
        }
        let Some((_, s, e_y)) = best else {
            // No orthogonal foot: either past an end of the path or on the
            // concave side beyond the center of curvature.
            let normal = Vec2::new(self.headings[nearest].cos(), self.headings[nearest].sin()).perp();
            let lateral = q.sub(self.points[nearest].vec()).dot(normal);
            if self.curvatures[nearest] * lateral >= 1.0 {
                return Err(GeometryError::BeyondCurvatureCenter {
                    s: self.stations[nearest],
                    e_y: lateral,
                });
            }
            return Err(GeometryError::BeyondEndpoints { x: p.x, y: p.y });
        };
        let s = s.clamp(0.0, self.length());
        let kappa = self.curvature_at(s)?;
        if kappa * e_y >= 1.0 {
            return Err(GeometryError::BeyondCurvatureCenter { s, e_y });
        }
        Ok(FrenetCoord::new(s, e_y))
    }

    /// Writes `s,x,y,psi,kappa`, one row per station.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "s,x,y,psi,kappa")?;
        for i in 0..self.len() {
            writeln!(
                out,
                "{},{},{},{},{}",
                fmt_g9(self.stations[i]),
                fmt_g9(self.points[i].x),
                fmt_g9(self.points[i].y),
                fmt_g9(self.headings[i]),
                fmt_g9(self.curvatures[i])
            )?;
        }
        Ok(())
    }
}

/// Constructors for analytic fixture paths.
pub mod fixtures {
    use super::*;

    /// Straight path from `origin` along `heading`.
    pub fn straight(
        origin: CartesianPoint,
        heading: f64,
        length: f64,
        delta_s: f64,
    ) -> Result<ReferencePath, GeometryError> {
        let n = (length / delta_s + 1e-9).floor() as usize;
        let (sin, cos) = heading.sin_cos();
        let points = (0..=n)
            .map(|i| {
                let s = i as f64 * delta_s;
                CartesianPoint::new(origin.x + s * cos, origin.y + s * sin)
            })
            .collect();
        ReferencePath::from_samples(delta_s, points, vec![heading; n + 1], vec![0.0; n + 1])
    }

    /// Arc of a circle of `radius` about `center`, starting at polar angle
    /// `start_angle`; counter-clockwise when `ccw` (positive curvature).
    pub fn circle_arc(
        center: CartesianPoint,
        radius: f64,
        start_angle: f64,
        length: f64,
        delta_s: f64,
        ccw: bool,
    ) -> Result<ReferencePath, GeometryError> {
        let n = (length / delta_s + 1e-9).floor() as usize;
        let dir = if ccw { 1.0 } else { -1.0 };
        let mut points = Vec::with_capacity(n + 1);
        let mut headings = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let angle = start_angle + dir * i as f64 * delta_s / radius;
            points.push(CartesianPoint::new(
                center.x + radius * angle.cos(),
                center.y + radius * angle.sin(),
            ));
            headings.push(angle + dir * std::f64::consts::FRAC_PI_2);
        }
        ReferencePath::from_samples(delta_s, points, headings, vec![dir / radius; n + 1])
    }
}
