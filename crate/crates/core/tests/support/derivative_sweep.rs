//! Derivative sweeps shared by the distortion tests and the acceptance run.

#![allow(dead_code)]

use overhang_core::distortion::{edge_lateral, edge_partials, station_of_body_point, EdgeEvalContext, KAPPA_MIN};
use overhang_core::frenet::fixtures::{circle_arc, straight};
use overhang_core::frenet::{CartesianPoint, ReferencePath};
use overhang_core::oracle::{edge_lateral_geometric, finite_diff_partials, FD_STEP_EPSI, FD_STEP_EY};
use overhang_core::vehicle::{body_sample_points, BodyPointSpec, BodyPointTag, VehicleGeometry, VehicleStateZ};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Test path of constant curvature long enough for the bus at station 20.
pub fn path_for(kappa: f64) -> ReferencePath {
    if kappa.abs() < 1e-9 {
        straight(CartesianPoint::new(0.0, 0.0), 0.4, 40.0, 0.5).unwrap()
    } else {
        let r = 1.0 / kappa.abs();
        circle_arc(CartesianPoint::new(2.0, -1.0), r, 0.3, 40.0, 0.5, kappa > 0.0).unwrap()
    }
}

pub fn context(path: &ReferencePath, s: f64, z: VehicleStateZ, bp: &BodyPointSpec) -> EdgeEvalContext {
    EdgeEvalContext {
        station_hat: station_of_body_point(path, s, z, bp).unwrap(),
        body_point: *bp,
        kappa: path.curvature_at(s).unwrap(),
        axle_station: s,
    }
}

/// Largest relative gap between analytic partials and central differences
/// of the arc-circle formula over `count` random cases.
pub fn own_difference_gap(seed: u64, count: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    while checked < count {
        let kappa: f64 = rng.gen_range(-0.1..0.1);
        if kappa.abs() < KAPPA_MIN {
            continue;
        }
        let ctx = EdgeEvalContext {
            station_hat: 10.0 + rng.gen_range(-3.3..8.7),
            body_point: BodyPointSpec {
                longitudinal_offset: 0.0,
                lateral_offset: if rng.gen_bool(0.5) { 1.275 } else { -1.275 },
                tag: BodyPointTag::Corner,
            },
            kappa,
            axle_station: 10.0,
        };
        let z = VehicleStateZ::new(rng.gen_range(-2.0..2.0), rng.gen_range(-0.3..0.3));
        let h = 1e-5;
        let f = |dy: f64, dp: f64| edge_lateral(&ctx, VehicleStateZ::new(z.e_y + dy, z.e_psi + dp));
        let (Ok(a), Ok(b), Ok(c), Ok(d)) = (f(h, 0.0), f(-h, 0.0), f(0.0, h), f(0.0, -h)) else {
            // Station beyond the arc's reach: not part of the arc's domain.
            continue;
        };
        let (a_ey, a_epsi) = edge_partials(&ctx, z).unwrap();
        let n_ey = (a - b) / (2.0 * h);
        let n_epsi = (c - d) / (2.0 * h);
        let rel = |a: f64, n: f64| (a - n).abs() / n.abs().max(1.0);
        worst = worst.max(rel(a_ey, n_ey)).max(rel(a_epsi, n_epsi));
        checked += 1;
    }
    worst
}

/// Largest relative gap between arc-circle and geometric heading partials,
/// and largest arc-circle offset error, over random cases.
pub fn sweep(seed: u64, lateral_range: f64) -> (f64, f64) {
    let geom = VehicleGeometry::default();
    let points = body_sample_points(&geom, 8, 4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut rel, mut fid): (f64, f64) = (0.0, 0.0);
    for _ in 0..200 {
        let kappa = rng.gen_range(-0.05..0.05);
        let path = path_for(kappa);
        let e_y = if lateral_range > 0.0 {
            rng.gen_range(-lateral_range..lateral_range)
        } else {
            0.0
        };
        let z = VehicleStateZ::new(e_y, rng.gen_range(-0.2..0.2));
        for bp in &points {
            let ctx = context(&path, 20.0, z, bp);
            let (_, a) = edge_partials(&ctx, z).unwrap();
            let (_, n) = finite_diff_partials(&path, 20.0, z, bp, (FD_STEP_EY, FD_STEP_EPSI)).unwrap();
            rel = rel.max((a - n).abs() / n.abs().max(1.0));
            let approx = edge_lateral(&ctx, z).unwrap();
            let exact = edge_lateral_geometric(&path, 20.0, z, bp.lateral_offset, ctx.station_hat).unwrap();
            fid = fid.max((approx - exact).abs());
        }
    }
    (rel, fid)
}
