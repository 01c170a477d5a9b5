//! Random round-trip and closed-form checks of the road-aligned conversions.

#![allow(dead_code)]

use overhang_core::frenet::fixtures::{circle_arc, straight};
use overhang_core::frenet::{CartesianPoint, FrenetCoord, PathBuilder, ReferencePath};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn origin() -> CartesianPoint {
    CartesianPoint::new(0.0, 0.0)
}

pub fn spline_path() -> ReferencePath {
    let waypoints: Vec<CartesianPoint> = (0..=12)
        .map(|k| {
            let x = 5.0 * k as f64;
            CartesianPoint::new(x, 6.0 * (x / 18.0).sin())
        })
        .collect();
    PathBuilder::new(0.5).with_kappa_max(0.5).build(&waypoints).unwrap()
}

pub fn fixture_paths() -> Vec<(&'static str, ReferencePath)> {
    vec![
        (
            "straight",
            straight(CartesianPoint::new(1.0, -2.0), 0.7, 60.0, 0.5).unwrap(),
        ),
        (
            "circle",
            circle_arc(CartesianPoint::new(3.0, 4.0), 20.0, 0.2, 60.0, 0.5, true).unwrap(),
        ),
        ("circle_cw", circle_arc(origin(), 15.0, 1.0, 40.0, 0.5, false).unwrap()),
        ("spline", spline_path()),
    ]
}

pub fn lateral_limit(path: &ReferencePath) -> f64 {
    let k = path.curvatures().iter().fold(0.0f64, |m, k| m.max(k.abs()));
    if k > 0.0 {
        (0.5 / k).min(5.0)
    } else {
        5.0
    }
}

/// Worst round-trip error over `count` random points with `s` in
/// `[ds, length - ds]` and `|e_y|` up to [`lateral_limit`].
pub fn round_trip_error(path: &ReferencePath, seed: u64, count: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ds = path.delta_s();
    let lim = lateral_limit(path);
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let c = FrenetCoord::new(rng.gen_range(ds..path.length() - ds), rng.gen_range(-lim..lim));
        let p = path.to_cartesian(c).unwrap();
        let back = path.to_frenet(p).unwrap();
        worst = worst.max((back.s - c.s).abs()).max((back.e_y - c.e_y).abs());
    }
    worst
}

/// Worst deviation of both conversions from the circle closed form.
pub fn circle_error(seed: u64, count: usize, ccw: bool) -> f64 {
    let (center, radius, start) = (CartesianPoint::new(3.0, 4.0), 20.0, 0.2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let path = circle_arc(center, radius, start, 60.0, 0.5, ccw).unwrap();
    let dir = if ccw { 1.0 } else { -1.0 };
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let s = rng.gen_range(0.5..59.5);
        let e_y = rng.gen_range(-8.0..8.0);
        // Left of a counter-clockwise circle is toward the center.
        let r = radius - dir * e_y;
        let a = start + dir * s / radius;
        let expected = CartesianPoint::new(center.x + r * a.cos(), center.y + r * a.sin());
        let p = path.to_cartesian(FrenetCoord::new(s, e_y)).unwrap();
        worst = worst.max(p.distance(&expected));
        let f = path.to_frenet(expected).unwrap();
        worst = worst.max((f.s - s).abs()).max((f.e_y - e_y).abs());
    }
    worst
}
