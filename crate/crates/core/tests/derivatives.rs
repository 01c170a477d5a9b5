//! Arc-circle partials against finite differences of their own formula and
//! against finite differences of the exact geometric transform.

use overhang_core::distortion::{
    edge_lateral, edge_partials, station_of_body_point, taylor_constraint_row, EdgeEvalContext, Sense, KAPPA_MIN,
};
use overhang_core::oracle::{edge_lateral_geometric, finite_diff_partials};
use overhang_core::vehicle::{body_sample_points, BodyPointSpec, BodyPointTag, VehicleGeometry, VehicleStateZ};

#[path = "support/derivative_sweep.rs"]
mod derivative_sweep;

use derivative_sweep::{context, own_difference_gap, path_for, sweep};

#[test]
fn analytic_partials_match_own_finite_differences() {
    let worst = own_difference_gap(11, 1000);
    println!("max relative deviation {worst:e}");
    assert!(worst <= 1e-6);
}

#[test]
fn arc_partials_track_the_geometric_transform() {
    let (rel, fid) = sweep(5, 0.0);
    println!("axle on the path: partial deviation {rel:.4}, offset error {fid:.4} m");
    assert!(rel <= 0.10);
    assert!(fid <= 0.25);
}

#[test]
fn arc_error_with_lateral_offset() {
    // Off the reference line the angle between edge and path normal grows
    // and the circle model degrades; these bounds pin the measured behavior.
    let (rel, fid) = sweep(6, 1.0);
    println!("|e_y| <= 1: partial deviation {rel:.4}, offset error {fid:.4} m");
    assert!(rel <= 0.15);
    assert!(fid <= 0.36);
}

#[test]
fn worked_example_on_a_twenty_meter_circle() {
    let path = path_for(0.05);
    let z = VehicleStateZ::new(0.3, 0.05);
    for lambda in [1.275, -1.275] {
        let ctx = EdgeEvalContext {
            station_hat: 24.0,
            body_point: BodyPointSpec {
                longitudinal_offset: 4.0,
                lateral_offset: lambda,
                tag: BodyPointTag::EdgeLeft,
            },
            kappa: 0.05,
            axle_station: 20.0,
        };
        let approx = edge_lateral(&ctx, z).unwrap();
        let exact = edge_lateral_geometric(&path, 20.0, z, lambda, 24.0).unwrap();
        assert!((approx - exact).abs() <= 0.15, "{approx} vs {exact}");
    }
}

#[test]
fn continuous_across_the_small_curvature_switch() {
    let z = VehicleStateZ::new(0.4, -0.15);
    for l in [-3.3, 2.0, 8.7] {
        for lambda in [1.275, -1.275] {
            let at = |kappa: f64| {
                let ctx = EdgeEvalContext {
                    station_hat: 10.0 + l,
                    body_point: BodyPointSpec {
                        longitudinal_offset: l,
                        lateral_offset: lambda,
                        tag: BodyPointTag::Corner,
                    },
                    kappa,
                    axle_station: 10.0,
                };
                let v = edge_lateral(&ctx, z).unwrap();
                let (_, d) = edge_partials(&ctx, z).unwrap();
                (v, d)
            };
            for sign in [1.0, -1.0] {
                let above = at(sign * KAPPA_MIN * (1.0 + 1e-9));
                let below = at(sign * KAPPA_MIN * (1.0 - 1e-9));
                assert!((above.0 - below.0).abs() <= 1e-3 && (above.1 - below.1).abs() <= 1e-3);
            }
            let flat = at(0.0);
            let tiny = at(1e-9);
            assert!((flat.0 - tiny.0).abs() <= 1e-6 && (flat.1 - tiny.1).abs() <= 1e-6);
        }
    }
}

#[test]
fn straight_row_is_half_width_plus_lever_arm() {
    let path = path_for(0.0);
    let geom = VehicleGeometry::default();
    for l in [-3.3, 0.0, 4.0, 8.7] {
        let bp = BodyPointSpec {
            longitudinal_offset: l,
            lateral_offset: geom.half_width(),
            tag: BodyPointTag::EdgeLeft,
        };
        let z = VehicleStateZ::ZERO;
        let ctx = context(&path, 20.0, z, &bp);
        let exact = edge_lateral_geometric(&path, 20.0, z, bp.lateral_offset, ctx.station_hat).unwrap();
        let row = taylor_constraint_row(&ctx, z, exact, 10.0, Sense::Upper).unwrap();
        assert!((row.coeffs[0] - 1.0).abs() < 1e-12);
        assert!((row.coeffs[1] - l).abs() < 1e-9);
        assert!((row.offset - geom.half_width()).abs() < 1e-9);
    }
}

#[test]
fn taylor_prediction_under_small_perturbation() {
    let geom = VehicleGeometry::default();
    let points = body_sample_points(&geom, 8, 4).unwrap();
    let mut worst: f64 = 0.0;
    for kappa in [0.0, 0.02, -0.02, 0.05, -0.05] {
        let path = path_for(kappa);
        for z_ref in [
            VehicleStateZ::ZERO,
            VehicleStateZ::new(0.5, 0.1),
            VehicleStateZ::new(-0.4, -0.08),
        ] {
            for bp in &points {
                let ctx = context(&path, 20.0, z_ref, bp);
                let exact = edge_lateral_geometric(&path, 20.0, z_ref, bp.lateral_offset, ctx.station_hat).unwrap();
                let row = taylor_constraint_row(&ctx, z_ref, exact, 0.0, Sense::Upper).unwrap();
                assert!((row.evaluate(z_ref) - exact).abs() <= 1e-12);
                let z = VehicleStateZ::new(z_ref.e_y + 0.01, z_ref.e_psi + 0.01);
                let truth = edge_lateral_geometric(&path, 20.0, z, bp.lateral_offset, ctx.station_hat).unwrap();
                worst = worst.max((row.evaluate(z) - truth).abs());
            }
        }
    }
    println!("max linear prediction error {worst:.2e} m");
    assert!(worst <= 1.5e-2);
}

#[test]
fn finite_difference_order() {
    let path = path_for(0.04);
    let bp = BodyPointSpec {
        longitudinal_offset: 8.7,
        lateral_offset: 1.275,
        tag: BodyPointTag::Corner,
    };
    let z = VehicleStateZ::new(0.2, 0.1);
    let reference = finite_diff_partials(&path, 20.0, z, &bp, (1e-4, 1e-4)).unwrap().1;
    let coarse = finite_diff_partials(&path, 20.0, z, &bp, (0.04, 0.04)).unwrap().1;
    let half = finite_diff_partials(&path, 20.0, z, &bp, (0.02, 0.02)).unwrap().1;
    let ratio = (coarse - reference).abs() / (half - reference).abs();
    assert!((ratio - 4.0).abs() < 0.4, "ratio {ratio}");
}

#[test]
fn station_of_body_point_examples() {
    let path = path_for(0.0);
    let bp = BodyPointSpec {
        longitudinal_offset: 5.0,
        lateral_offset: 0.0,
        tag: BodyPointTag::Corner,
    };
    let s = station_of_body_point(&path, 10.0, VehicleStateZ::ZERO, &bp).unwrap();
    assert!((s - 15.0).abs() < 1e-9);
    let s = station_of_body_point(&path, 10.0, VehicleStateZ::new(0.0, 0.2), &bp).unwrap();
    assert!((s - (10.0 + 5.0 * 0.2f64.cos())).abs() < 1e-9);

    // Circle of radius 20: the point at angle theta + atan2(l, 20 - e_y) from the center.
    let path = path_for(0.05);
    let z = VehicleStateZ::new(1.0, 0.0);
    let s = station_of_body_point(&path, 10.0, z, &bp).unwrap();
    let expected = 10.0 + 20.0 * (5.0f64).atan2(19.0);
    assert!((s - expected).abs() < 1e-6, "{s} vs {expected}");
}
