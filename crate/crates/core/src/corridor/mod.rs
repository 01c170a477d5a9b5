//! Per-station lateral bounds for the three-region environment model:
//! obstacle (never entered), sweepable (overhangs only) and drivable
//! (wheels allowed).

mod scenario;

pub use crate::oracle::polygon::signed_area2;

pub use scenario::{load_scenario, Sampling, Scenario, ScenarioError, StartState};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frenet::{CartesianPoint, GeometryError, ReferencePath};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CorridorError {
    #[error("station {station} (s = {s}): {message}")]
    InvalidBounds { station: usize, s: f64, message: String },
    #[error("{side} profile: {message}")]
    InvalidProfile { side: &'static str, message: String },
    #[error("arclength {s} outside the corridor domain [0, {length}]")]
    OutOfDomain { s: f64, length: f64 },
    #[error("corridor has {got} stations, path has {expected}")]
    StationMismatch { expected: usize, got: usize },
    #[error("invalid polygon: {0}")]
    InvalidPolygon(String),
    #[error("polygon does not project onto the path")]
    PolygonOffPath,
    #[error("obstacle closes the corridor at station {station} (s = {s})")]
    Blocked { station: usize, s: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Signed lateral bounds at one station.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionBounds {
    pub drivable_left: f64,
    pub drivable_right: f64,
    pub obstacle_left: f64,
    pub obstacle_right: f64,
}

impl RegionBounds {
    fn check(&self) -> Result<(), String> {
        let v = [
            self.drivable_left,
            self.drivable_right,
            self.obstacle_left,
            self.obstacle_right,
        ];
        if v.iter().any(|x| !x.is_finite()) {
            return Err("non-finite bound".into());
        }
        if self.drivable_right > self.drivable_left {
            return Err(format!(
                "drivable_left {} is below drivable_right {}",
                self.drivable_left, self.drivable_right
            ));
        }
        if self.obstacle_left < self.drivable_left {
            return Err(format!(
                "obstacle_left {} is inside the drivable band (drivable_left {})",
                self.obstacle_left, self.drivable_left
            ));
        }
        if self.obstacle_right > self.drivable_right {
            return Err(format!(
                "obstacle_right {} is inside the drivable band (drivable_right {})",
                self.obstacle_right, self.drivable_right
            ));
        }
        Ok(())
    }

    fn lerp(&self, other: &Self, w: f64) -> Self {
        let f = |a: f64, b: f64| if w == 0.0 { a } else { (1.0 - w) * a + w * b };
        Self {
            drivable_left: f(self.drivable_left, other.drivable_left),
            drivable_right: f(self.drivable_right, other.drivable_right),
            obstacle_left: f(self.obstacle_left, other.obstacle_left),
            obstacle_right: f(self.obstacle_right, other.obstacle_right),
        }
    }
}

/// Piecewise-linear profile of `[s, drivable, obstacle]` knots for one side.
pub type SideProfile = [[f64; 3]];

#[derive(Debug, Clone, PartialEq)]
pub struct Corridor {
    delta_s: f64,
    bounds: Vec<RegionBounds>,
}

fn eval_profile(profile: &SideProfile, s: f64) -> (f64, f64) {
    let k = profile.partition_point(|r| r[0] <= s);
    if k == 0 {
        return (profile[0][1], profile[0][2]);
    }
    if k == profile.len() {
        let r = profile[k - 1];
        return (r[1], r[2]);
    }
    let (a, b) = (profile[k - 1], profile[k]);
    let w = (s - a[0]) / (b[0] - a[0]);
    (a[1] + w * (b[1] - a[1]), a[2] + w * (b[2] - a[2]))
}

fn check_profile(side: &'static str, profile: &SideProfile, length: f64) -> Result<(), CorridorError> {
    let err = |message: String| CorridorError::InvalidProfile { side, message };
    if profile.is_empty() {
        return Err(err("no knots".into()));
    }
    if profile.iter().flatten().any(|v| !v.is_finite()) {
        return Err(err("non-finite value".into()));
    }
    for w in profile.windows(2) {
        if w[1][0] <= w[0][0] {
            return Err(err(format!(
                "knot s values must increase ({} then {})",
                w[0][0], w[1][0]
            )));
        }
    }
    let tol = 1e-9 * (1.0 + length);
    if profile[0][0] > tol || profile[profile.len() - 1][0] < length - tol {
        return Err(err(format!(
            "knots span [{}, {}] but must cover [0, {length}]",
            profile[0][0],
            profile[profile.len() - 1][0]
        )));
    }
    Ok(())
}

impl Corridor {
    /// Samples the left and right profiles at every path station.
    pub fn from_profiles(path: &ReferencePath, left: &SideProfile, right: &SideProfile) -> Result<Self, CorridorError> {
        check_profile("left", left, path.length())?;
        check_profile("right", right, path.length())?;
        let bounds = path
            .stations()
            .iter()
            .map(|&s| {
                let (dl, ol) = eval_profile(left, s);
                let (dr, or) = eval_profile(right, s);
                RegionBounds {
                    drivable_left: dl,
                    drivable_right: dr,
                    obstacle_left: ol,
                    obstacle_right: or,
                }
            })
            .collect();
        Self::from_bounds(path.delta_s(), bounds)
    }

    pub fn from_bounds(delta_s: f64, bounds: Vec<RegionBounds>) -> Result<Self, CorridorError> {
        for (i, b) in bounds.iter().enumerate() {
            b.check().map_err(|message| CorridorError::InvalidBounds {
                station: i,
                s: i as f64 * delta_s,
                message,
            })?;
        }
        Ok(Self { delta_s, bounds })
    }

    /// Constant bounds on every station of `path`.
    pub fn uniform(path: &ReferencePath, b: RegionBounds) -> Result<Self, CorridorError> {
        Self::from_bounds(path.delta_s(), vec![b; path.len()])
    }

    pub fn len(&self) -> usize {
        self.bounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bounds.is_empty()
    }

    pub fn delta_s(&self) -> f64 {
        self.delta_s
    }

    pub fn bounds(&self) -> &[RegionBounds] {
        &self.bounds
    }

    pub fn length(&self) -> f64 {
        (self.bounds.len().saturating_sub(1)) as f64 * self.delta_s
    }

    /// Bounds at `s`, linear between stations and exact on them.
    pub fn bounds_at(&self, s: f64) -> Result<RegionBounds, CorridorError> {
        let length = self.length();
        let tol = 1e-9 * (1.0 + length);
        if !(s >= -tol && s <= length + tol) {
            return Err(CorridorError::OutOfDomain { s, length });
        }
        let x = (s / self.delta_s).clamp(0.0, (self.bounds.len() - 1) as f64);
        let i = (x.floor() as usize).min(self.bounds.len().saturating_sub(2));
        let w = x - i as f64;
        if self.bounds.len() == 1 {
            return Ok(self.bounds[0]);
        }
        if w == 1.0 {
            return Ok(self.bounds[i + 1]);
        }
        Ok(self.bounds[i].lerp(&self.bounds[i + 1], w))
    }

    /// Tightest bounds over `[a, b]`: the smallest left and largest right
    /// values of `bounds_at` on the interval. The ends are clamped to the
    /// corridor domain.
    pub fn tightest_between(&self, a: f64, b: f64) -> Result<RegionBounds, CorridorError> {
        let (a, b) = (a.min(b).max(0.0), a.max(b).min(self.length()));
        let mut t = self.bounds_at(a)?;
        let mut merge = |o: RegionBounds| {
            t.drivable_left = t.drivable_left.min(o.drivable_left);
            t.obstacle_left = t.obstacle_left.min(o.obstacle_left);
            t.drivable_right = t.drivable_right.max(o.drivable_right);
            t.obstacle_right = t.obstacle_right.max(o.obstacle_right);
        };
        merge(self.bounds_at(b)?);
        let first = (a / self.delta_s).floor() as usize + 1;
        let last = ((b / self.delta_s).ceil() as usize).min(self.bounds.len());
        for o in self.bounds.iter().take(last).skip(first) {
            merge(*o);
        }
        Ok(t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObstacleLabel {
    /// Nothing may enter.
    Obstacle,
    /// Wheels may not enter, overhangs may sweep over it.
    SweepableBlock,
}

/// Simple polygon in the global frame, stored counter-clockwise.
#[derive(Debug, Clone, PartialEq)]
pub struct ObstaclePolygon {
    vertices: Vec<CartesianPoint>,
    label: ObstacleLabel,
}

fn segments_intersect(a: CartesianPoint, b: CartesianPoint, c: CartesianPoint, d: CartesianPoint) -> bool {
    let orient =
        |p: CartesianPoint, q: CartesianPoint, r: CartesianPoint| (q.x - p.x) * (r.y - p.y) - (q.y - p.y) * (r.x - p.x);
    let on = |p: CartesianPoint, q: CartesianPoint, r: CartesianPoint| {
        r.x >= p.x.min(q.x) && r.x <= p.x.max(q.x) && r.y >= p.y.min(q.y) && r.y <= p.y.max(q.y)
    };
    let (o1, o2, o3, o4) = (orient(a, b, c), orient(a, b, d), orient(c, d, a), orient(c, d, b));
    if o1 * o2 < 0.0 && o3 * o4 < 0.0 {
        return true;
    }
    (o1 == 0.0 && on(a, b, c)) || (o2 == 0.0 && on(a, b, d)) || (o3 == 0.0 && on(c, d, a)) || (o4 == 0.0 && on(c, d, b))
}

impl ObstaclePolygon {
    pub fn new(vertices: Vec<CartesianPoint>, label: ObstacleLabel) -> Result<Self, CorridorError> {
        let n = vertices.len();
        if n < 3 {
            return Err(CorridorError::InvalidPolygon(format!("{n} vertices, need at least 3")));
        }
        if vertices.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(CorridorError::InvalidPolygon("non-finite vertex".into()));
        }
        for i in 0..n {
            for j in i + 1..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if adjacent {
                    continue;
                }
                if segments_intersect(vertices[i], vertices[(i + 1) % n], vertices[j], vertices[(j + 1) % n]) {
                    return Err(CorridorError::InvalidPolygon(format!("edges {i} and {j} intersect")));
                }
            }
        }
        let area = signed_area2(&vertices);
        if area.abs() < 1e-12 {
            return Err(CorridorError::InvalidPolygon("zero area".into()));
        }
        let mut vertices = vertices;
        if area < 0.0 {
            vertices.reverse();
        }
        Ok(Self { vertices, label })
    }

    pub fn vertices(&self) -> &[CartesianPoint] {
        &self.vertices
    }

    pub fn label(&self) -> ObstacleLabel {
        self.label
    }

    /// Boundary points with spacing at most `step`, vertices included.
    pub fn boundary_samples(&self, step: f64) -> Vec<CartesianPoint> {
        let n = self.vertices.len();
        let mut out = Vec::new();
        for i in 0..n {
            let (a, b) = (self.vertices[i], self.vertices[(i + 1) % n]);
            let pieces = (a.distance(&b) / step).ceil().max(1.0) as usize;
            for k in 0..pieces {
                let t = k as f64 / pieces as f64;
                out.push(CartesianPoint::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)));
            }
        }
        out
    }

    /// Even-odd point-in-polygon test; boundary points count as inside.
    pub fn contains(&self, p: CartesianPoint) -> bool {
        let v = &self.vertices;
        let n = v.len();
        let mut inside = false;
        for i in 0..n {
            let (a, b) = (v[i], v[(i + 1) % n]);
            let cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
            let within = p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y);
            if cross.abs() <= 1e-12 && within {
                return true;
            }
            if (a.y > p.y) != (b.y > p.y) && p.x < a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y) {
                inside = !inside;
            }
        }
        inside
    }
}

/// Tightens `corridor` so that neither drivable band (for obstacles) nor
/// obstacle bounds admit the polygon.
///
/// The polygon boundary is densified to a quarter station and projected;
/// every sample affects the two stations bracketing it. A polygon is passed
/// on one side over its whole length: the side whose narrowest remaining
/// gap is wider, unless it lies entirely on one side of the reference.
pub fn apply_polygon_obstacle(
    corridor: &Corridor,
    path: &ReferencePath,
    poly: &ObstaclePolygon,
) -> Result<Corridor, CorridorError> {
    if corridor.len() != path.len() {
        return Err(CorridorError::StationMismatch {
            expected: path.len(),
            got: corridor.len(),
        });
    }
    let ds = path.delta_s();
    let mut extent: Vec<Option<(f64, f64)>> = vec![None; path.len()];
    let mut projected = 0;
    for p in poly.boundary_samples(0.25 * ds) {
        let Ok(f) = path.to_frenet(p) else { continue };
        projected += 1;
        let x = f.s / ds;
        let lo = (x.floor().max(0.0) as usize).min(path.len() - 1);
        let hi = (x.ceil().max(0.0) as usize).min(path.len() - 1);
        for i in [lo, hi] {
            let e = extent[i].get_or_insert((f.e_y, f.e_y));
            e.0 = e.0.min(f.e_y);
            e.1 = e.1.max(f.e_y);
        }
    }
    if projected == 0 {
        return Err(CorridorError::PolygonOffPath);
    }
    let outer = |b: &RegionBounds| match poly.label {
        ObstacleLabel::Obstacle => (b.obstacle_left, b.obstacle_right),
        ObstacleLabel::SweepableBlock => (b.drivable_left, b.drivable_right),
    };
    let (mut all_left, mut all_right) = (true, true);
    let (mut room_right, mut room_left) = (f64::INFINITY, f64::INFINITY);
    for (ext, b) in extent.iter().zip(corridor.bounds()) {
        let Some((e_lo, e_hi)) = *ext else { continue };
        let (outer_left, outer_right) = outer(b);
        if e_lo >= outer_left || e_hi <= outer_right {
            continue;
        }
        all_left &= e_lo > 0.0;
        all_right &= e_hi < 0.0;
        room_right = room_right.min(e_lo - outer_right);
        room_left = room_left.min(outer_left - e_hi);
    }
    let block_left = if all_left {
        true
    } else if all_right {
        false
    } else {
        room_right >= room_left
    };
    let mut bounds = corridor.bounds().to_vec();
    for (i, ext) in extent.iter().enumerate() {
        let Some((e_lo, e_hi)) = *ext else { continue };
        let b = &mut bounds[i];
        let (outer_left, outer_right) = outer(b);
        if e_lo >= outer_left || e_hi <= outer_right {
            continue;
        }
        match (poly.label, block_left) {
            (ObstacleLabel::Obstacle, true) => {
                b.obstacle_left = b.obstacle_left.min(e_lo);
                b.drivable_left = b.drivable_left.min(b.obstacle_left);
            }
            (ObstacleLabel::Obstacle, false) => {
                b.obstacle_right = b.obstacle_right.max(e_hi);
                b.drivable_right = b.drivable_right.max(b.obstacle_right);
            }
            (ObstacleLabel::SweepableBlock, true) => b.drivable_left = b.drivable_left.min(e_lo),
            (ObstacleLabel::SweepableBlock, false) => b.drivable_right = b.drivable_right.max(e_hi),
        }
        if b.drivable_right > b.drivable_left || b.obstacle_right > b.obstacle_left {
            return Err(CorridorError::Blocked {
                station: i,
                s: path.stations()[i],
            });
        }
    }
    Corridor::from_bounds(ds, bounds)
}
