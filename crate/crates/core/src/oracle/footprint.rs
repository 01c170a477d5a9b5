//! Swept footprint measurements of a planned control sequence.

use serde::Serialize;

use super::polygon::{convex_parts, overlap_depth, point_depth, segment_distance};
use super::{pose_of, OracleError};
use crate::corridor::{Corridor, ObstacleLabel, Scenario};
use crate::frenet::{CartesianPoint, CartesianPose, FrenetCoord, ReferencePath};
use crate::planner::{Horizon, PlanResult};
use crate::vehicle::{dynamics_rhs, rollout_from, ControlInput, VehicleGeometry, VehicleStateZ};

/// Spacing of the points checked along body and wheelbase outlines.
pub const OUTLINE_STEP: f64 = 0.1;

/// Corner names in the order of [`FootprintSample::corner_penetration`].
pub const CORNER_NAMES: [&str; 4] = ["front_left", "front_right", "rear_left", "rear_right"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FootprintSample {
    pub s: f64,
    pub midpoint: bool,
    pub e_y: f64,
    pub e_psi: f64,
    /// Body rectangle, counter-clockwise from the rear right corner.
    pub body: [CartesianPoint; 4],
    pub obstacle_penetration: f64,
    pub wheel_excursion: f64,
    pub overhang_exit: f64,
    pub corner_penetration: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FootprintReport {
    pub max_obstacle_penetration: f64,
    pub max_wheel_excursion: f64,
    pub max_overhang_exit: f64,
    pub max_corner_penetration: [f64; 4],
    pub samples: Vec<FootprintSample>,
}

/// Corner `(longitudinal, lateral)` offsets in [`CORNER_NAMES`] order.
fn corner_offsets(v: &VehicleGeometry) -> [(f64, f64); 4] {
    let (f, r, w) = (v.front_extent(), -v.rear_overhang, v.half_width());
    [(f, w), (f, -w), (r, w), (r, -w)]
}

pub fn body_polygon(pose: &CartesianPose, v: &VehicleGeometry) -> [CartesianPoint; 4] {
    let (f, r, w) = (v.front_extent(), -v.rear_overhang, v.half_width());
    [
        pose.offset(r, -w),
        pose.offset(f, -w),
        pose.offset(f, w),
        pose.offset(r, w),
    ]
}

fn outline(pose: &CartesianPose, from: f64, to: f64, half: f64, ends: bool) -> Vec<CartesianPoint> {
    let along = ((to - from) / OUTLINE_STEP).ceil().max(1.0) as usize;
    let mut out = Vec::new();
    for k in 0..=along {
        let l = from + (to - from) * k as f64 / along as f64;
        out.push(pose.offset(l, half));
        out.push(pose.offset(l, -half));
    }
    if ends {
        let across = (2.0 * half / OUTLINE_STEP).ceil().max(1.0) as usize;
        for k in 1..across {
            let lat = -half + 2.0 * half * k as f64 / across as f64;
            out.push(pose.offset(from, lat));
            out.push(pose.offset(to, lat));
        }
    }
    out
}

/// Boundary polylines of one corridor bound family.
struct Boundary {
    left: Vec<CartesianPoint>,
    right: Vec<CartesianPoint>,
}

impl Boundary {
    fn new(path: &ReferencePath, corridor: &Corridor, obstacle: bool) -> Result<Self, OracleError> {
        let mut left = Vec::with_capacity(path.len());
        let mut right = Vec::with_capacity(path.len());
        for (s, b) in path.stations().iter().zip(corridor.bounds()) {
            let (l, r) = if obstacle {
                (b.obstacle_left, b.obstacle_right)
            } else {
                (b.drivable_left, b.drivable_right)
            };
            left.push(path.to_cartesian(FrenetCoord::new(*s, l))?);
            right.push(path.to_cartesian(FrenetCoord::new(*s, r))?);
        }
        Ok(Self { left, right })
    }
}

/// Distance of `p` outside the band between the bounds, zero inside. The
/// side test is done in road-aligned coordinates, the distance is measured
/// to the boundary polyline.
fn outside_distance(
    path: &ReferencePath,
    corridor: &Corridor,
    boundary: &Boundary,
    obstacle: bool,
    p: CartesianPoint,
) -> Result<f64, OracleError> {
    let f = path.to_frenet(p)?;
    let b = corridor
        .bounds_at(f.s)
        .map_err(|e| OracleError::Inconsistent(e.to_string()))?;
    let (hi, lo) = if obstacle {
        (b.obstacle_left, b.obstacle_right)
    } else {
        (b.drivable_left, b.drivable_right)
    };
    let (excess, line) = if f.e_y > hi {
        (f.e_y - hi, &boundary.left)
    } else if f.e_y < lo {
        (lo - f.e_y, &boundary.right)
    } else {
        return Ok(0.0);
    };
    let ds = path.delta_s();
    let reach = (excess / ds).ceil() as usize + 2;
    let center = (f.s / ds).floor() as usize;
    let first = center.saturating_sub(reach);
    let last = (center + reach + 1).min(line.len() - 1);
    let d = (first..last)
        .map(|j| segment_distance(p, line[j], line[j + 1]))
        .fold(f64::INFINITY, f64::min);
    Ok(d.min(excess))
}

/// Oracle state shared across footprint evaluations of one scenario.
pub struct FootprintChecker<'a> {
    sc: &'a Scenario,
    drivable: Boundary,
    obstacle: Boundary,
    obstacles: Vec<Vec<Vec<CartesianPoint>>>,
    blocks: Vec<Vec<Vec<CartesianPoint>>>,
}

impl<'a> FootprintChecker<'a> {
    pub fn new(sc: &'a Scenario) -> Result<Self, OracleError> {
        let parts = |label| {
            sc.obstacles
                .iter()
                .filter(|o| o.label() == label)
                .map(|o| convex_parts(o.vertices()))
                .collect()
        };
        Ok(Self {
            sc,
            drivable: Boundary::new(&sc.path, &sc.corridor, false)?,
            obstacle: Boundary::new(&sc.path, &sc.base_corridor, true)?,
            obstacles: parts(ObstacleLabel::Obstacle),
            blocks: parts(ObstacleLabel::SweepableBlock),
        })
    }

    fn outside_drivable(&self, p: CartesianPoint) -> Result<f64, OracleError> {
        outside_distance(&self.sc.path, &self.sc.corridor, &self.drivable, false, p)
    }

    fn outside_obstacle_bounds(&self, p: CartesianPoint) -> Result<f64, OracleError> {
        outside_distance(&self.sc.path, &self.sc.base_corridor, &self.obstacle, true, p)
    }

    /// Measures the footprint of the vehicle with its rear axle at `(s, z)`.
    pub fn sample(&self, s: f64, z: VehicleStateZ, midpoint: bool) -> Result<FootprintSample, OracleError> {
        let v = &self.sc.vehicle;
        let pose = pose_of(&self.sc.path, s, z)?;
        let body = body_polygon(&pose, v);

        let mut penetration: f64 = 0.0;
        for parts in &self.obstacles {
            penetration = penetration.max(overlap_depth(&body, parts));
        }
        for p in outline(&pose, -v.rear_overhang, v.front_extent(), v.half_width(), true) {
            penetration = penetration.max(self.outside_obstacle_bounds(p)?);
        }

        let wheel_rect = [
            pose.offset(0.0, -v.half_width()),
            pose.offset(v.wheelbase, -v.half_width()),
            pose.offset(v.wheelbase, v.half_width()),
            pose.offset(0.0, v.half_width()),
        ];
        let mut wheel: f64 = 0.0;
        for parts in &self.blocks {
            wheel = wheel.max(overlap_depth(&wheel_rect, parts));
        }
        for p in outline(&pose, 0.0, v.wheelbase, v.half_width(), false) {
            wheel = wheel.max(self.outside_drivable(p)?);
        }

        let mut overhang: f64 = 0.0;
        let mut corner_penetration = [0.0; 4];
        for (c, (l, lat)) in corner_offsets(v).into_iter().enumerate() {
            let p = pose.offset(l, lat);
            overhang = overhang.max(self.outside_drivable(p)?);
            let mut depth = self.outside_obstacle_bounds(p)?;
            for o in self
                .sc
                .obstacles
                .iter()
                .filter(|o| o.label() == ObstacleLabel::Obstacle)
            {
                depth = depth.max(point_depth(o.vertices(), p));
            }
            corner_penetration[c] = depth;
        }

        Ok(FootprintSample {
            s,
            midpoint,
            e_y: z.e_y,
            e_psi: z.e_psi,
            body,
            obstacle_penetration: penetration,
            wheel_excursion: wheel,
            overhang_exit: overhang,
            corner_penetration,
        })
    }

    /// Rolls `controls` out from the scenario start and measures every
    /// station plus the midpoints between them.
    pub fn check_controls(&self, h: &Horizon, controls: &[ControlInput]) -> Result<FootprintReport, OracleError> {
        let sc = self.sc;
        let states = rollout_from(&sc.path, h.start, sc.start.z, controls)?;
        let ds = sc.path.delta_s();
        let mut samples = Vec::with_capacity(2 * states.len());
        for (i, z) in states.iter().enumerate() {
            let station = h.station(i);
            let s = sc.path.stations()[station];
            samples.push(self.sample(s, *z, false)?);
            if i < controls.len() {
                let f = dynamics_rhs(*z, controls[i], sc.path.curvatures()[station])?;
                let mid = VehicleStateZ::new(z.e_y + 0.5 * ds * f[0], z.e_psi + 0.5 * ds * f[1]);
                samples.push(self.sample(s + 0.5 * ds, mid, true)?);
            }
        }
        let max = |f: fn(&FootprintSample) -> f64| samples.iter().map(f).fold(0.0, f64::max);
        let mut corners = [0.0f64; 4];
        for smp in &samples {
            for c in 0..4 {
                corners[c] = corners[c].max(smp.corner_penetration[c]);
            }
        }
        Ok(FootprintReport {
            max_obstacle_penetration: max(|s| s.obstacle_penetration),
            max_wheel_excursion: max(|s| s.wheel_excursion),
            max_overhang_exit: max(|s| s.overhang_exit),
            max_corner_penetration: corners,
            samples,
        })
    }
}

/// Footprint report of a plan, built from the nonlinear rollout of its
/// controls rather than from its states.
pub fn check_plan(sc: &Scenario, result: &PlanResult) -> Result<FootprintReport, OracleError> {
    if result.controls.len() != result.horizon.steps || result.states.len() != result.horizon.steps + 1 {
        return Err(OracleError::Inconsistent(format!(
            "{} states and {} controls for {} steps",
            result.states.len(),
            result.controls.len(),
            result.horizon.steps
        )));
    }
    FootprintChecker::new(sc)?.check_controls(&result.horizon, &result.controls)
}
