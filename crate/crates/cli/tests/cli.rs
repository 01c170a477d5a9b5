//! End-to-end runs of the `overhang` binary and the plot renderer.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use overhang_cli::render_plot;
use overhang_core::corridor::load_scenario;
use overhang_core::frenet::CartesianPoint;
use overhang_core::oracle::check_plan;
use overhang_core::oracle::polygon::convex_overlap_depth;
use overhang_core::planner::{sqp_plan, Ablation};
use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    [env!("CARGO_MANIFEST_DIR"), "..", "..", "fixtures", name]
        .iter()
        .collect()
}

fn plan(scenario: &Path, out: &Path, extra: &[&str]) -> i32 {
    let status = Command::new(env!("CARGO_BIN_EXE_overhang"))
        .arg("plan")
        .arg("--scenario")
        .arg(scenario)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
        .status;
    status.code().unwrap()
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn straight_road_converges_without_overhang() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(plan(&fixture("straight_road.json"), tmp.path(), &[]), 0);
    let s = summary(tmp.path());
    assert_eq!(s["status"], "converged");
    assert_eq!(s["max_overhang_exit"].as_f64(), Some(0.0));
    let csv = fs::read_to_string(tmp.path().join("trajectory.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("i,s,e_y,e_psi,u,sigma_1,sigma_2,sigma_3,sigma_4,x,y,psi")
    );
    let rows: Vec<&str> = lines.collect();
    let steps = s["horizon"]["steps"].as_u64().unwrap() as usize;
    assert_eq!(rows.len(), steps + 1);
    assert!(rows.iter().all(|r| r.split(',').count() == 12));
    // No control after the last station.
    assert_eq!(rows.last().unwrap().split(',').nth(4), Some(""));
    assert!(!tmp.path().join("plan.svg").exists());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [&a, &b] {
        assert_eq!(plan(&fixture("turn_90.json"), dir.path(), &["--svg"]), 0);
    }
    for file in ["trajectory.csv", "summary.json", "plan.svg"] {
        assert_eq!(
            fs::read(a.path().join(file)).unwrap(),
            fs::read(b.path().join(file)).unwrap(),
            "{file}"
        );
    }
}

#[test]
fn ablations_order_the_overhang_exit() {
    let mut exits = Vec::new();
    for ab in ["center_only", "no_overhang_objective", "full"] {
        let tmp = tempfile::tempdir().unwrap();
        assert_eq!(plan(&fixture("turn_90.json"), tmp.path(), &["--ablation", ab]), 0);
        let s = summary(tmp.path());
        assert_eq!(s["ablation"], ab);
        exits.push(s["max_overhang_exit"].as_f64().unwrap());
    }
    assert!(exits[0] > exits[1] && exits[1] > exits[2], "{exits:?}");
}

#[test]
fn exit_codes_follow_the_status() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(plan(&fixture("tight_passage_no_sweep.json"), tmp.path(), &[]), 2);
    assert_eq!(summary(tmp.path())["status"], "infeasible");
    assert_eq!(plan(&fixture("turn_90.json"), tmp.path(), &["--max-iter", "2"]), 3);
    assert_eq!(summary(tmp.path())["status"], "max_iter");
    assert_eq!(plan(&fixture("missing.json"), tmp.path(), &[]), 1);
    assert_eq!(plan(&fixture("turn_90.json"), tmp.path(), &["--weights", "1,2"]), 1);
    assert_eq!(plan(&fixture("turn_90.json"), tmp.path(), &["--tol", "-1"]), 1);
}

#[test]
fn weight_override_reaches_the_planner() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert_eq!(plan(&fixture("turn_90.json"), a.path(), &["--weights", "1,10,0"]), 0);
    assert_eq!(
        plan(
            &fixture("turn_90.json"),
            b.path(),
            &["--ablation", "no_overhang_objective"]
        ),
        0
    );
    assert_eq!(
        summary(a.path())["max_overhang_exit"],
        summary(b.path())["max_overhang_exit"]
    );
}

/// `points` attributes of every polygon with the given class.
fn svg_polygons(svg: &str, class: &str) -> Vec<Vec<CartesianPoint>> {
    let tag = format!(r#"<polygon class="{class}""#);
    svg.lines()
        .filter(|l| l.starts_with(&tag))
        .map(|l| {
            let start = l.find("points=\"").unwrap() + 8;
            let end = start + l[start..].find('"').unwrap();
            l[start..end]
                .split(' ')
                .map(|pair| {
                    let (x, y) = pair.split_once(',').unwrap();
                    CartesianPoint::new(x.parse().unwrap(), y.parse().unwrap())
                })
                .collect()
        })
        .collect()
}

#[test]
fn forty_steps_plot_nine_footprints() {
    let text = r#"{
        "path": {"waypoints": [[0, 0], [37, 0]], "delta_s": 0.5},
        "start": {"s": 6.0, "e_y": 0.0, "e_psi": 0.0, "u": 0.0},
        "corridor": {"left": [[0, 3.5, 5.0], [37, 3.5, 5.0]], "right": [[0, -3.5, -5.0], [37, -3.5, -5.0]]}
    }"#;
    let sc = load_scenario(text).unwrap();
    let r = sqp_plan(&sc, Ablation::Full).unwrap();
    assert_eq!(r.horizon.steps, 40);
    let report = check_plan(&sc, &r).unwrap();
    let svg = render_plot(&sc, &r, Some(&report));
    assert_eq!(svg_polygons(&svg, "footprint").len(), 9);
    // Without obstacles only the two default obstacle bands are red.
    assert_eq!(svg_polygons(&svg, "obstacle-band").len(), 2);
    assert!(svg_polygons(&svg, "obstacle").is_empty());
    assert_eq!(svg, render_plot(&sc, &r, Some(&report)));
}

#[test]
fn tight_passage_footprints_clear_the_obstacles() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(plan(&fixture("tight_passage.json"), tmp.path(), &["--svg"]), 0);
    let svg = fs::read_to_string(tmp.path().join("plan.svg")).unwrap();
    let feet = svg_polygons(&svg, "footprint");
    let obstacles = svg_polygons(&svg, "obstacle");
    assert_eq!(obstacles.len(), 2);
    assert!(!feet.is_empty());
    for f in &feet {
        for o in &obstacles {
            let d = convex_overlap_depth(f, o);
            assert!(d <= 1e-6, "footprint {f:?} overlaps {o:?} by {d}");
        }
    }
}
