//! Sequential quadratic programming over a fixed horizon of path stations.
//!
//! Variable layout of every QP: controls `u_0..u_{N-1}`, then states
//! `z_1..z_N` with `(e_y, e_psi)` interleaved, then four corner slacks per
//! state station. `z_0` is the start state and enters as data.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corridor::{CorridorError, Scenario};
use crate::distortion::{taylor_constraint_row, DistortionError, EdgeEvalContext, Sense};
use crate::frenet::GeometryError;
use crate::oracle::{body_point_position, edge_lateral_geometric};
use crate::qp::{solve_qp, QpError, QpProblem, QpSolution, QpStatus};
use crate::vehicle::{
    body_sample_points, linearize, rollout_from, BodyPointSpec, BodyPointTag, ControlInput, ModelError,
    VehicleGeometry, VehicleStateZ,
};

/// Floor on the slack weight so the QP stays bounded when overhang is not
/// penalized.
pub const MIN_SLACK_WEIGHT: f64 = 1e-6;

/// Extra clearance kept between the body and either end of the path.
pub const END_MARGIN: f64 = 1.0;

/// Factor applied to the trust region when a QP is retried after an
/// infeasible attempt.
pub const RETRY_TRUST_SCALE: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Weights {
    pub center: f64,
    pub smooth: f64,
    pub overhang: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Self {
            center: 1.0,
            smooth: 10.0,
            overhang: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SqpSettings {
    pub max_iter: usize,
    /// Threshold on the scaled infinity norm of the state step.
    pub tol: f64,
    pub trust_y: f64,
    pub trust_psi: f64,
    pub trust_u: f64,
}

impl Default for SqpSettings {
    fn default() -> Self {
        Self {
            max_iter: 20,
            tol: 1e-3,
            trust_y: 0.3,
            trust_psi: 0.1,
            trust_u: 0.02,
        }
    }
}

impl SqpSettings {
    /// Returns the offending field name and a message.
    pub fn validate(&self) -> Result<(), (&'static str, String)> {
        if self.max_iter == 0 {
            return Err(("max_iter", "must be at least 1".into()));
        }
        for (name, v) in [
            ("tol", self.tol),
            ("trust_y", self.trust_y),
            ("trust_psi", self.trust_psi),
            ("trust_u", self.trust_u),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err((name, format!("must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Which parts of the overhang formulation take part.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ablation {
    /// Wheelbase rows, corner slacks and the overhang objective.
    #[default]
    Full,
    /// Wheelbase rows and corner slacks, overhang weight zeroed.
    NoOverhangObjective,
    /// Obstacle rows only: no wheelbase rows, overhang weight zeroed.
    CenterOnly,
}

impl Ablation {
    pub fn wheelbase_rows(self) -> bool {
        self != Ablation::CenterOnly
    }

    pub fn overhang_weight(self, weights: &Weights) -> f64 {
        match self {
            Ablation::Full => weights.overhang,
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanStatus {
    Converged,
    MaxIter,
    Infeasible,
}

/// Unweighted objective terms.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Objectives {
    pub center: f64,
    pub smooth: f64,
    pub overhang: f64,
}

impl Objectives {
    pub fn weighted(&self, w: &Weights) -> f64 {
        w.center * self.center + w.smooth * self.smooth + w.overhang * self.overhang
    }
}

#[derive(Debug, Error)]
pub enum PlannerError {
    #[error("horizon: {0}")]
    Horizon(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Corridor(#[from] CorridorError),
    #[error("constraint row at station {station}: {source}")]
    Distortion {
        station: usize,
        #[source]
        source: DistortionError,
    },
    #[error("reference has {got} states, expected {expected}")]
    ReferenceLength { got: usize, expected: usize },
    #[error(transparent)]
    Qp(#[from] QpError),
    #[error("QP solver hit its iteration limit in SQP iteration {iteration}")]
    SolverStalled { iteration: usize },
}

pub fn evaluate_objectives(states: &[VehicleStateZ], controls: &[ControlInput], slacks: &[[f64; 4]]) -> Objectives {
    Objectives {
        center: states.iter().map(|z| z.e_y * z.e_y).sum(),
        smooth: controls.windows(2).map(|w| (w[1].u - w[0].u).powi(2)).sum(),
        overhang: slacks.iter().flatten().map(|s| s * s).sum(),
    }
}

/// Planned stations `start..=start + steps` of the scenario path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Horizon {
    pub start: usize,
    pub steps: usize,
}

impl Horizon {
    pub fn for_scenario(sc: &Scenario) -> Result<Self, PlannerError> {
        let ds = sc.path.delta_s();
        let start_f = sc.start.s / ds;
        let start = start_f.round();
        if (start_f - start).abs() > 1e-6 {
            return Err(PlannerError::Horizon(format!(
                "start s = {} is not on a station (delta_s = {ds})",
                sc.start.s
            )));
        }
        let start = start as usize;
        let v = &sc.vehicle;
        let rear_reach = v.rear_overhang + v.half_width() + END_MARGIN;
        if sc.start.s < rear_reach {
            return Err(PlannerError::Horizon(format!(
                "start s = {} leaves the rear of the body off the path; need at least {rear_reach}",
                sc.start.s
            )));
        }
        let front_reach = v.front_extent() + v.half_width() + END_MARGIN;
        let stations = sc.path.stations();
        let last = (0..stations.len())
            .rev()
            .find(|&i| stations[i] + front_reach <= sc.path.length())
            .unwrap_or(0);
        if last < start + 2 {
            return Err(PlannerError::Horizon(format!(
                "path too short: need {front_reach} m ahead of the last planned station"
            )));
        }
        Ok(Self {
            start,
            steps: last - start,
        })
    }

    pub fn station(&self, i: usize) -> usize {
        self.start + i
    }
}

/// Linearization reference: `steps + 1` states and `steps` controls.
#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    pub states: Vec<VehicleStateZ>,
    pub controls: Vec<ControlInput>,
}

/// Curvature feedforward rolled out from the start state.
pub fn initial_reference(sc: &Scenario, h: &Horizon) -> Result<Reference, PlannerError> {
    let mut controls: Vec<ControlInput> = (0..h.steps)
        .map(|i| {
            let k = sc.path.curvatures()[h.station(i)];
            ControlInput::new(k.clamp(-sc.limits.u_max, sc.limits.u_max))
        })
        .collect();
    controls[0] = sc.start.u;
    let states = rollout_from(&sc.path, h.start, sc.start.z, &controls)?;
    Ok(Reference { states, controls })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QpLayout {
    pub steps: usize,
}

impl QpLayout {
    pub fn num_vars(&self) -> usize {
        7 * self.steps
    }

    pub fn u(&self, i: usize) -> usize {
        i
    }

    /// State indices for `1 <= i <= steps`.
    pub fn e_y(&self, i: usize) -> usize {
        self.steps + 2 * (i - 1)
    }

    pub fn e_psi(&self, i: usize) -> usize {
        self.e_y(i) + 1
    }

    pub fn sigma(&self, i: usize, corner: usize) -> usize {
        3 * self.steps + 4 * (i - 1) + corner
    }
}

/// Number of inequality rows [`assemble_qp`] produces.
pub fn inequality_row_count(steps: usize, k: usize, m: usize, ablation: Ablation, trust: bool) -> usize {
    let wheel = if ablation.wheelbase_rows() { 2 * m } else { 0 };
    let per_station = 2 * k + wheel + 4 + 4;
    let actuator = 4 * (steps - 1);
    let trust_rows = if trust { 4 * steps + 2 * (steps - 1) } else { 0 };
    steps * per_station + actuator + trust_rows
}

/// Length of body outline behind and ahead of `bp` whose tightest bound the
/// point must respect: the full spacing to each neighbouring sample, so that
/// both ends of every straight segment between samples satisfy the bound of
/// the whole segment.
fn coverage(bp: &BodyPointSpec, v: &VehicleGeometry, k: usize, m: usize) -> (f64, f64) {
    let (lo, hi, n) = match bp.tag {
        BodyPointTag::WheelbaseLeft | BodyPointTag::WheelbaseRight => (0.0, v.wheelbase, m),
        _ => (-v.rear_overhang, v.front_extent(), k),
    };
    let spacing = (hi - lo) / (n - 1) as f64;
    let l = bp.longitudinal_offset;
    (spacing.min(l - lo).max(0.0), spacing.min(hi - l).max(0.0))
}

/// A linearized body-point row kept for diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyRow {
    pub step: usize,
    pub axle_s: f64,
    pub s_hat: f64,
    pub point: BodyPointSpec,
    pub coeffs: [f64; 2],
    pub offset: f64,
    pub bound: f64,
    pub sense: Sense,
}

#[derive(Debug, Clone)]
pub struct AssembledQp {
    pub problem: QpProblem,
    pub layout: QpLayout,
    pub body_rows: Vec<BodyRow>,
}

/// Builds the QP linearized around `reference`. `trust` scales the trust
/// region box, `None` leaves it out.
pub fn assemble_qp(
    sc: &Scenario,
    h: &Horizon,
    reference: &Reference,
    ablation: Ablation,
    trust: Option<f64>,
) -> Result<AssembledQp, PlannerError> {
    let n = h.steps;
    if reference.states.len() != n + 1 || reference.controls.len() != n {
        return Err(PlannerError::ReferenceLength {
            got: reference.states.len(),
            expected: n + 1,
        });
    }
    if sc.corridor.len() != sc.path.len() {
        return Err(CorridorError::StationMismatch {
            got: sc.corridor.len(),
            expected: sc.path.len(),
        }
        .into());
    }
    let lay = QpLayout { steps: n };
    let mut p = QpProblem::new(lay.num_vars());
    let w = &sc.weights;
    let ds = sc.path.delta_s();
    let kappas = sc.path.curvatures();

    // Objective.
    for i in 1..=n {
        p.hessian.add(lay.e_y(i), lay.e_y(i), 2.0 * w.center);
    }
    for i in 1..n {
        let (a, b) = (lay.u(i - 1), lay.u(i));
        p.hessian.add(a, a, 2.0 * w.smooth);
        p.hessian.add(b, b, 2.0 * w.smooth);
        p.hessian.add(b, a, -2.0 * w.smooth);
    }
    let w_sigma = ablation.overhang_weight(w).max(MIN_SLACK_WEIGHT);
    for i in 1..=n {
        for c in 0..4 {
            p.hessian.add(lay.sigma(i, c), lay.sigma(i, c), 2.0 * w_sigma);
        }
    }

    // Start control and dynamics.
    p.add_eq([(lay.u(0), 1.0)], sc.start.u.u);
    for i in 0..n {
        let dynamics = linearize(reference.states[i], reference.controls[i], kappas[h.station(i)], ds)?;
        for r in 0..2 {
            let next = if r == 0 { lay.e_y(i + 1) } else { lay.e_psi(i + 1) };
            let mut row = vec![(next, 1.0), (lay.u(i), -dynamics.b[r])];
            let mut rhs = dynamics.g[r];
            if i == 0 {
                rhs += dynamics.a[r][0] * sc.start.z.e_y + dynamics.a[r][1] * sc.start.z.e_psi;
            } else {
                row.push((lay.e_y(i), -dynamics.a[r][0]));
                row.push((lay.e_psi(i), -dynamics.a[r][1]));
            }
            p.add_eq(row, rhs);
        }
    }

    // Body rows.
    let points = body_sample_points(&sc.vehicle, sc.sampling.edge_points, sc.sampling.wheelbase_points)?;
    let mut body_rows = Vec::with_capacity(n * points.len());
    for i in 1..=n {
        let station = h.station(i);
        let axle_s = sc.path.stations()[station];
        let z_ref = reference.states[i];
        let mut corner = 0;
        for bp in &points {
            let slack = match bp.tag {
                BodyPointTag::WheelbaseLeft | BodyPointTag::WheelbaseRight if !ablation.wheelbase_rows() => continue,
                BodyPointTag::Corner => {
                    corner += 1;
                    Some(corner - 1)
                }
                _ => None,
            };
            let f = sc.path.to_frenet(body_point_position(&sc.path, axle_s, z_ref, bp)?)?;
            let (back, ahead) = coverage(bp, &sc.vehicle, sc.sampling.edge_points, sc.sampling.wheelbase_points);
            let b = sc.corridor.tightest_between(f.s - back, f.s + ahead)?;
            let left = bp.is_left();
            let bound = match (bp.tag, left) {
                (BodyPointTag::EdgeLeft, _) => b.obstacle_left,
                (BodyPointTag::EdgeRight, _) => b.obstacle_right,
                (_, true) => b.drivable_left,
                (_, false) => b.drivable_right,
            };
            let sense = if left { Sense::Upper } else { Sense::Lower };
            let ctx = EdgeEvalContext {
                station_hat: f.s,
                body_point: *bp,
                kappa: kappas[station],
                axle_station: axle_s,
            };
            let row = taylor_constraint_row(&ctx, z_ref, f.e_y, bound, sense)
                .map_err(|source| PlannerError::Distortion { station, source })?;
            let mut entries = vec![(lay.e_y(i), row.coeffs[0]), (lay.e_psi(i), row.coeffs[1])];
            if let Some(c) = slack {
                // The slack moves the corner bound outward.
                entries.push((lay.sigma(i, c), if left { -1.0 } else { 1.0 }));
            }
            match sense {
                Sense::Upper => p.add_le(entries, bound - row.offset),
                Sense::Lower => p.add_ge(entries, bound - row.offset),
            };
            body_rows.push(BodyRow {
                step: i,
                axle_s,
                s_hat: f.s,
                point: *bp,
                coeffs: row.coeffs,
                offset: row.offset,
                bound,
                sense,
            });
        }
        for c in 0..4 {
            p.add_ge([(lay.sigma(i, c), 1.0)], 0.0);
        }
    }

    // Actuator limits; u_0 is fixed by the start equality.
    let lim = &sc.limits;
    for i in 1..n {
        p.add_le([(lay.u(i), 1.0)], lim.u_max);
        p.add_ge([(lay.u(i), 1.0)], -lim.u_max);
        p.add_le([(lay.u(i), 1.0), (lay.u(i - 1), -1.0)], lim.u_rate_max);
        p.add_ge([(lay.u(i), 1.0), (lay.u(i - 1), -1.0)], -lim.u_rate_max);
    }

    if let Some(scale) = trust {
        let t = &sc.sqp;
        for i in 1..=n {
            let z = reference.states[i];
            for (idx, center, radius) in [
                (lay.e_y(i), z.e_y, scale * t.trust_y),
                (lay.e_psi(i), z.e_psi, scale * t.trust_psi),
            ] {
                p.add_le([(idx, 1.0)], center + radius);
                p.add_ge([(idx, 1.0)], center - radius);
            }
        }
        for i in 1..n {
            let u = reference.controls[i].u;
            p.add_le([(lay.u(i), 1.0)], u + scale * t.trust_u);
            p.add_ge([(lay.u(i), 1.0)], u - scale * t.trust_u);
        }
    }

    Ok(AssembledQp {
        problem: p,
        layout: lay,
        body_rows,
    })
}

/// Trajectory encoded in a QP solution vector.
fn unpack(sc: &Scenario, lay: &QpLayout, x: &[f64]) -> (Vec<VehicleStateZ>, Vec<ControlInput>, Vec<[f64; 4]>) {
    let n = lay.steps;
    let mut states = vec![sc.start.z];
    let mut slacks = vec![[0.0; 4]];
    for i in 1..=n {
        states.push(VehicleStateZ::new(x[lay.e_y(i)], x[lay.e_psi(i)]));
        let mut s = [0.0; 4];
        for (c, v) in s.iter_mut().enumerate() {
            *v = x[lay.sigma(i, c)].max(0.0);
        }
        slacks.push(s);
    }
    let controls = (0..n).map(|i| ControlInput::new(x[lay.u(i)])).collect();
    (states, controls, slacks)
}

/// Largest state change, with heading scaled onto the lateral trust size.
pub fn step_norm(a: &[VehicleStateZ], b: &[VehicleStateZ], settings: &SqpSettings) -> f64 {
    let ratio = settings.trust_y / settings.trust_psi;
    a.iter()
        .zip(b)
        .map(|(p, q)| (p.e_y - q.e_y).abs().max((p.e_psi - q.e_psi).abs() * ratio))
        .fold(0.0, f64::max)
}

/// Largest difference between the linearized rows and the exact edge
/// offsets, both at the stations the rows were built for.
pub fn taylor_gap(sc: &Scenario, rows: &[BodyRow], states: &[VehicleStateZ]) -> Result<f64, PlannerError> {
    let mut gap: f64 = 0.0;
    for r in rows {
        let z = states[r.step];
        let linear = r.coeffs[0] * z.e_y + r.coeffs[1] * z.e_psi + r.offset;
        let exact = edge_lateral_geometric(&sc.path, r.axle_s, z, r.point.lateral_offset, r.s_hat)
            .map_err(|e| PlannerError::Horizon(e.to_string()))?;
        gap = gap.max((linear - exact).abs());
    }
    Ok(gap)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub step_norm: f64,
    pub taylor_gap: f64,
    pub qp_iterations: usize,
    pub trust_widened: bool,
    #[serde(skip)]
    pub states: Vec<VehicleStateZ>,
    #[serde(skip)]
    pub controls: Vec<ControlInput>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanResult {
    pub horizon: Horizon,
    /// `steps + 1` states starting with the start state.
    pub states: Vec<VehicleStateZ>,
    pub controls: Vec<ControlInput>,
    /// Corner slacks per station in body corner order; zero at the start.
    pub slacks: Vec<[f64; 4]>,
    pub objectives: Objectives,
    pub iterations: usize,
    pub step_norms: Vec<f64>,
    pub status: PlanStatus,
    /// SQP iteration whose QP was infeasible.
    pub infeasible_iteration: Option<usize>,
    /// Largest difference between the states and the nonlinear rollout of
    /// the controls.
    pub linearization_gap: f64,
    pub history: Vec<IterationRecord>,
}

impl PlanResult {
    pub fn stations(&self, sc: &Scenario) -> Vec<f64> {
        (0..=self.horizon.steps)
            .map(|i| sc.path.stations()[self.horizon.station(i)])
            .collect()
    }
}

pub fn sqp_plan(sc: &Scenario, ablation: Ablation) -> Result<PlanResult, PlannerError> {
    sqp_plan_observed(sc, ablation, |_, _| {})
}

/// [`sqp_plan`], handing every solved QP to `observer`.
pub fn sqp_plan_observed(
    sc: &Scenario,
    ablation: Ablation,
    mut observer: impl FnMut(&QpProblem, &QpSolution),
) -> Result<PlanResult, PlannerError> {
    let h = Horizon::for_scenario(sc)?;
    let mut reference = initial_reference(sc, &h)?;
    let mut slacks = vec![[0.0; 4]; h.steps + 1];
    let mut history = Vec::new();
    let mut step_norms = Vec::new();
    let mut status = PlanStatus::MaxIter;
    let mut infeasible_iteration = None;

    for iteration in 1..=sc.sqp.max_iter {
        let mut asm = assemble_qp(sc, &h, &reference, ablation, Some(1.0))?;
        let mut sol = solve_qp(&asm.problem)?;
        observer(&asm.problem, &sol);
        let mut widened = false;
        if sol.status == QpStatus::PrimalInfeasible {
            asm = assemble_qp(sc, &h, &reference, ablation, Some(RETRY_TRUST_SCALE))?;
            sol = solve_qp(&asm.problem)?;
            observer(&asm.problem, &sol);
            widened = true;
        }
        match sol.status {
            QpStatus::Solved => {}
            QpStatus::PrimalInfeasible => {
                status = PlanStatus::Infeasible;
                infeasible_iteration = Some(iteration);
                break;
            }
            QpStatus::MaxIter => return Err(PlannerError::SolverStalled { iteration }),
        }
        let (states, controls, sig) = unpack(sc, &asm.layout, &sol.x);
        let step = step_norm(&states, &reference.states, &sc.sqp);
        let gap = taylor_gap(sc, &asm.body_rows, &states)?;
        history.push(IterationRecord {
            iteration,
            step_norm: step,
            taylor_gap: gap,
            qp_iterations: sol.iterations,
            trust_widened: widened,
            states: states.clone(),
            controls: controls.clone(),
        });
        step_norms.push(step);
        reference = Reference { states, controls };
        slacks = sig;
        if step <= sc.sqp.tol {
            status = PlanStatus::Converged;
            break;
        }
    }

    let linearization_gap = match rollout_from(&sc.path, h.start, sc.start.z, &reference.controls) {
        Ok(roll) => step_norm_raw(&roll, &reference.states),
        Err(_) => f64::INFINITY,
    };
    Ok(PlanResult {
        horizon: h,
        objectives: evaluate_objectives(&reference.states, &reference.controls, &slacks),
        states: reference.states,
        controls: reference.controls,
        slacks,
        iterations: history.len(),
        step_norms,
        status,
        infeasible_iteration,
        linearization_gap,
        history,
    })
}

fn step_norm_raw(a: &[VehicleStateZ], b: &[VehicleStateZ]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(p, q)| (p.e_y - q.e_y).abs().max((p.e_psi - q.e_psi).abs()))
        .fold(0.0, f64::max)
}
