//! Scenario runner: plan, check, and write trajectory, summary and plot.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};
use thiserror::Error;

use overhang_core::corridor::{load_scenario, ObstacleLabel, Scenario, ScenarioError};
use overhang_core::frenet::{CartesianPoint, FrenetCoord};
use overhang_core::numfmt::{fmt_g9, round_g9};
use overhang_core::oracle::{check_plan, pose_of, FootprintReport, OracleError, CORNER_NAMES};
use overhang_core::planner::{sqp_plan, Ablation, PlanResult, PlanStatus, PlannerError, Weights};

/// Stations between plotted footprints.
pub const FOOTPRINT_STRIDE: usize = 5;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Scenario {
        path: PathBuf,
        #[source]
        source: ScenarioError,
    },
    #[error("planner: {0}")]
    Planner(#[from] PlannerError),
    #[error("invalid override: {0}")]
    Override(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Command-line replacements for scenario settings.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub weights: Option<Weights>,
    pub max_iter: Option<usize>,
    pub tol: Option<f64>,
}

impl Overrides {
    pub fn apply(&self, sc: &mut Scenario) -> Result<(), CliError> {
        if let Some(w) = self.weights {
            if [w.center, w.smooth, w.overhang]
                .iter()
                .any(|v| !(*v >= 0.0 && v.is_finite()))
            {
                return Err(CliError::Override("weights must be non-negative".into()));
            }
            sc.weights = w;
        }
        if let Some(n) = self.max_iter {
            sc.sqp.max_iter = n;
        }
        if let Some(t) = self.tol {
            sc.sqp.tol = t;
        }
        sc.sqp
            .validate()
            .map_err(|(field, msg)| CliError::Override(format!("{field}: {msg}")))
    }
}

/// Parses `c,s,o`.
pub fn parse_weights(text: &str) -> Result<Weights, String> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected three comma-separated weights, got `{text}`"));
    }
    let mut v = [0.0; 3];
    for (slot, p) in v.iter_mut().zip(&parts) {
        *slot = p.parse().map_err(|_| format!("`{p}` is not a number"))?;
    }
    Ok(Weights {
        center: v[0],
        smooth: v[1],
        overhang: v[2],
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario_path: PathBuf,
    pub out_dir: PathBuf,
    pub emit_plot: bool,
    pub ablation: Ablation,
    pub overrides: Overrides,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub scenario: Scenario,
    pub plan: PlanResult,
    pub report: Result<FootprintReport, OracleError>,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        exit_code(self.plan.status)
    }
}

pub fn exit_code(status: PlanStatus) -> i32 {
    match status {
        PlanStatus::Converged => 0,
        PlanStatus::Infeasible => 2,
        PlanStatus::MaxIter => 3,
    }
}

pub fn ablation_name(a: Ablation) -> &'static str {
    match a {
        Ablation::Full => "full",
        Ablation::NoOverhangObjective => "no_overhang_objective",
        Ablation::CenterOnly => "center_only",
    }
}

pub fn status_name(s: PlanStatus) -> &'static str {
    match s {
        PlanStatus::Converged => "converged",
        PlanStatus::MaxIter => "max_iter",
        PlanStatus::Infeasible => "infeasible",
    }
}

/// Loads the scenario, plans, checks the plan and writes the artifacts.
pub fn run(config: &RunConfig) -> Result<RunOutcome, CliError> {
    let text = fs::read_to_string(&config.scenario_path).map_err(io_err(&config.scenario_path))?;
    let mut scenario = load_scenario(&text).map_err(|source| CliError::Scenario {
        path: config.scenario_path.clone(),
        source,
    })?;
    config.overrides.apply(&mut scenario)?;
    let plan = sqp_plan(&scenario, config.ablation)?;
    let report = check_plan(&scenario, &plan);

    fs::create_dir_all(&config.out_dir).map_err(io_err(&config.out_dir))?;
    let csv_path = config.out_dir.join("trajectory.csv");
    let mut csv = Vec::new();
    write_trajectory_csv(&mut csv, &scenario, &plan).map_err(io_err(&csv_path))?;
    fs::write(&csv_path, csv).map_err(io_err(&csv_path))?;

    let summary = summary_json(&scenario, &plan, &report, config.ablation);
    let json_path = config.out_dir.join("summary.json");
    let mut text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    text.push('\n');
    fs::write(&json_path, text).map_err(io_err(&json_path))?;

    if config.emit_plot {
        let svg_path = config.out_dir.join("plan.svg");
        let svg = render_plot(&scenario, &plan, report.as_ref().ok());
        fs::write(&svg_path, svg).map_err(io_err(&svg_path))?;
    }
    Ok(RunOutcome { scenario, plan, report })
}

/// `i,s,e_y,e_psi,u,sigma_1..4,x,y,psi`, one row per planned station. The
/// last station has no control.
pub fn write_trajectory_csv(out: &mut impl std::io::Write, sc: &Scenario, plan: &PlanResult) -> std::io::Result<()> {
    writeln!(out, "i,s,e_y,e_psi,u,sigma_1,sigma_2,sigma_3,sigma_4,x,y,psi")?;
    for (i, (s, z)) in plan.stations(sc).into_iter().zip(&plan.states).enumerate() {
        let u = plan.controls.get(i).map(|u| fmt_g9(u.u)).unwrap_or_default();
        let sig = plan.slacks[i];
        let pose = pose_of(&sc.path, s, *z).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
        writeln!(
            out,
            "{i},{},{},{},{u},{},{},{},{},{},{},{}",
            fmt_g9(s),
            fmt_g9(z.e_y),
            fmt_g9(z.e_psi),
            fmt_g9(sig[0]),
            fmt_g9(sig[1]),
            fmt_g9(sig[2]),
            fmt_g9(sig[3]),
            fmt_g9(pose.position.x),
            fmt_g9(pose.position.y),
            fmt_g9(pose.heading),
        )?;
    }
    Ok(())
}

fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(round_g9(x))
    } else {
        Value::Null
    }
}

fn nums(v: impl IntoIterator<Item = f64>) -> Value {
    Value::Array(v.into_iter().map(num).collect())
}

pub fn summary_json(
    sc: &Scenario,
    plan: &PlanResult,
    report: &Result<FootprintReport, OracleError>,
    ablation: Ablation,
) -> Value {
    let o = &plan.objectives;
    let mut m = Map::new();
    m.insert("status".into(), json!(status_name(plan.status)));
    m.insert("ablation".into(), json!(ablation_name(ablation)));
    m.insert("iterations".into(), json!(plan.iterations));
    m.insert("infeasible_iteration".into(), json!(plan.infeasible_iteration));
    m.insert(
        "horizon".into(),
        json!({"start_station": plan.horizon.start, "steps": plan.horizon.steps}),
    );
    m.insert(
        "objectives".into(),
        json!({
            "center": num(o.center),
            "smooth": num(o.smooth),
            "overhang": num(o.overhang),
            "weighted": num(o.weighted(&sc.weights)),
        }),
    );
    m.insert("step_norms".into(), nums(plan.step_norms.iter().copied()));
    m.insert("taylor_gaps".into(), nums(plan.history.iter().map(|h| h.taylor_gap)));
    m.insert("linearization_gap".into(), num(plan.linearization_gap));
    match report {
        Ok(r) => {
            m.insert("max_overhang_exit".into(), num(r.max_overhang_exit));
            m.insert("max_obstacle_penetration".into(), num(r.max_obstacle_penetration));
            m.insert("max_wheel_excursion".into(), num(r.max_wheel_excursion));
            let corners: Map<String, Value> = CORNER_NAMES
                .iter()
                .zip(r.max_corner_penetration)
                .map(|(n, v)| (n.to_string(), num(v)))
                .collect();
            m.insert("max_corner_penetration".into(), Value::Object(corners));
            let stations: Vec<_> = r.samples.iter().filter(|s| !s.midpoint).collect();
            m.insert(
                "footprints".into(),
                json!({
                    "s": nums(stations.iter().map(|s| s.s)),
                    "obstacle_penetration": nums(stations.iter().map(|s| s.obstacle_penetration)),
                    "wheel_excursion": nums(stations.iter().map(|s| s.wheel_excursion)),
                    "overhang_exit": nums(stations.iter().map(|s| s.overhang_exit)),
                }),
            );
        }
        Err(e) => {
            m.insert("max_overhang_exit".into(), Value::Null);
            m.insert("oracle_error".into(), json!(e.to_string()));
        }
    }
    Value::Object(m)
}

struct Canvas {
    out: String,
}

impl Canvas {
    fn points(pts: &[CartesianPoint]) -> String {
        let mut s = String::new();
        for (k, p) in pts.iter().enumerate() {
            if k > 0 {
                s.push(' ');
            }
            let _ = write!(s, "{},{}", fmt_g9(p.x), fmt_g9(p.y));
        }
        s
    }

    fn polygon(&mut self, class: &str, fill: &str, pts: &[CartesianPoint]) {
        let _ = writeln!(
            self.out,
            r#"<polygon class="{class}" fill="{fill}" points="{}"/>"#,
            Self::points(pts)
        );
    }

    fn polyline(&mut self, class: &str, stroke: &str, pts: &[CartesianPoint]) {
        let _ = writeln!(
            self.out,
            r#"<polyline class="{class}" fill="none" stroke="{stroke}" stroke-width="0.15" points="{}"/>"#,
            Self::points(pts)
        );
    }
}

/// Width drawn for the obstacle band beyond each obstacle bound.
const OBSTACLE_BAND: f64 = 1.0;

/// Static SVG of the corridor regions, obstacles, reference and planned
/// paths, and body footprints every [`FOOTPRINT_STRIDE`] stations.
pub fn render_plot(sc: &Scenario, plan: &PlanResult, report: Option<&FootprintReport>) -> String {
    let path = &sc.path;
    let line = |f: &dyn Fn(usize) -> f64| -> Vec<CartesianPoint> {
        path.stations()
            .iter()
            .enumerate()
            .filter_map(|(i, s)| path.to_cartesian(FrenetCoord::new(*s, f(i))).ok())
            .collect()
    };
    let b = sc.corridor.bounds();
    let obs_l = line(&|i| b[i].obstacle_left);
    let obs_r = line(&|i| b[i].obstacle_right);
    let drv_l = line(&|i| b[i].drivable_left);
    let drv_r = line(&|i| b[i].drivable_right);
    let out_l = line(&|i| b[i].obstacle_left + OBSTACLE_BAND);
    let out_r = line(&|i| b[i].obstacle_right - OBSTACLE_BAND);
    let band = |a: &[CartesianPoint], c: &[CartesianPoint]| -> Vec<CartesianPoint> {
        a.iter().chain(c.iter().rev()).copied().collect()
    };

    let all = out_l
        .iter()
        .chain(&out_r)
        .chain(sc.obstacles.iter().flat_map(|o| o.vertices()));
    let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in all {
        x0 = x0.min(p.x);
        y0 = y0.min(p.y);
        x1 = x1.max(p.x);
        y1 = y1.max(p.y);
    }
    let pad = 2.0;
    let (w, h) = (x1 - x0 + 2.0 * pad, y1 - y0 + 2.0 * pad);

    let mut c = Canvas { out: String::new() };
    let _ = writeln!(
        c.out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{} {} {} {}" width="{}" height="{}">"#,
        fmt_g9(x0 - pad),
        fmt_g9(-(y1 + pad)),
        fmt_g9(w),
        fmt_g9(h),
        fmt_g9((w * 10.0).round()),
        fmt_g9((h * 10.0).round()),
    );
    c.out.push_str("<g transform=\"scale(1,-1)\">\n");
    c.polygon("obstacle-band", "#ef7c7c", &band(&out_l, &obs_l));
    c.polygon("obstacle-band", "#ef7c7c", &band(&obs_r, &out_r));
    c.polygon("sweepable-band", "#edb120", &band(&obs_l, &drv_l));
    c.polygon("sweepable-band", "#edb120", &band(&drv_r, &obs_r));
    c.polygon("drivable-band", "#77ac30", &band(&drv_l, &drv_r));
    for o in &sc.obstacles {
        let (class, fill) = match o.label() {
            ObstacleLabel::Obstacle => ("obstacle", "#c0392b"),
            ObstacleLabel::SweepableBlock => ("sweepable-block", "#d4a017"),
        };
        c.polygon(class, fill, o.vertices());
    }
    c.polyline("reference", "#555555", path.points());
    let planned: Vec<CartesianPoint> = plan
        .stations(sc)
        .into_iter()
        .zip(&plan.states)
        .filter_map(|(s, z)| pose_of(path, s, *z).ok().map(|p| p.position))
        .collect();
    c.polyline("planned", "#0072bd", &planned);
    if let Some(r) = report {
        let stations = r.samples.iter().filter(|s| !s.midpoint);
        for smp in stations.step_by(FOOTPRINT_STRIDE) {
            let _ = writeln!(
                c.out,
                r##"<polygon class="footprint" fill="none" stroke="#0072bd" stroke-width="0.08" points="{}"/>"##,
                Canvas::points(&smp.body)
            );
        }
    }
    c.out.push_str("</g>\n</svg>\n");
    c.out
}
