//! Kinematic model Jacobians, linearization and rollout properties.

use overhang_core::frenet::fixtures::circle_arc;
use overhang_core::frenet::CartesianPoint;
use overhang_core::vehicle::{
    curvature_to_steering, dynamics_jacobians, dynamics_rhs, linearize, rollout, steering_to_curvature, step,
    ControlInput, VehicleStateZ,
};
use proptest::prelude::*;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

proptest! {
    #[test]
    fn jacobians_match_central_differences(
        e_psi in -1.0f64..1.0,
        kappa in -0.2f64..0.2,
        ke in -0.5f64..0.5,
        u in -0.2f64..0.2,
    ) {
        let e_y = if kappa.abs() > 1e-6 { ke / kappa } else { ke };
        let z = VehicleStateZ::new(e_y, e_psi);
        let c = ControlInput::new(u);
        let (dz, du) = dynamics_jacobians(z, c, kappa).unwrap();
        let h = 1e-6;
        let f = |dy: f64, dp: f64, dd: f64| {
            dynamics_rhs(VehicleStateZ::new(e_y + dy, e_psi + dp), ControlInput::new(u + dd), kappa).unwrap()
        };
        let (py, my) = (f(h, 0.0, 0.0), f(-h, 0.0, 0.0));
        let (pp, mp) = (f(0.0, h, 0.0), f(0.0, -h, 0.0));
        let (pu, mu) = (f(0.0, 0.0, h), f(0.0, 0.0, -h));
        for r in 0..2 {
            prop_assert!(rel(dz[r][0], (py[r] - my[r]) / (2.0 * h)) <= 1e-6);
            prop_assert!(rel(dz[r][1], (pp[r] - mp[r]) / (2.0 * h)) <= 1e-6);
            prop_assert!(rel(du[r], (pu[r] - mu[r]) / (2.0 * h)) <= 1e-6);
        }
    }

    #[test]
    fn linearization_is_exact_at_the_reference(
        e_y in -3.0f64..3.0,
        e_psi in -1.0f64..1.0,
        kappa in -0.1f64..0.1,
        u in -0.1f64..0.1,
        ds in 0.1f64..1.0,
    ) {
        let z = VehicleStateZ::new(e_y, e_psi);
        let c = ControlInput::new(u);
        let lin = linearize(z, c, kappa, ds).unwrap();
        let exact = step(z, c, kappa, ds).unwrap();
        let approx = lin.apply(z, u);
        prop_assert!((approx.e_y - exact.e_y).abs() <= 1e-12);
        prop_assert!((approx.e_psi - exact.e_psi).abs() <= 1e-12);
    }

    #[test]
    fn steering_round_trip(u in -1.0f64 / 12.0..1.0 / 12.0, wheelbase in 2.0f64..8.0) {
        let back = steering_to_curvature(curvature_to_steering(u, wheelbase), wheelbase);
        prop_assert!((back - u).abs() <= 1e-12);
    }
}

/// Nonlinear minus linearized rollout of a control perturbation.
fn linearization_error(scale: f64) -> f64 {
    let path = circle_arc(CartesianPoint::new(0.0, 0.0), 25.0, 0.0, 30.0, 0.5, true).unwrap();
    let n = path.len() - 1;
    let base: Vec<ControlInput> = vec![ControlInput::new(0.04); n];
    let z0 = VehicleStateZ::ZERO;
    let ref_states = rollout(&path, z0, &base).unwrap();
    let du: Vec<f64> = (0..n).map(|i| scale * (0.3 * i as f64).sin()).collect();
    let perturbed: Vec<ControlInput> = base.iter().zip(&du).map(|(c, d)| ControlInput::new(c.u + d)).collect();
    let nonlinear = rollout(&path, z0, &perturbed).unwrap();
    let mut z = z0;
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let lin = linearize(ref_states[i], base[i], path.curvatures()[i], path.delta_s()).unwrap();
        z = lin.apply(z, perturbed[i].u);
        worst = worst.max((z.e_y - nonlinear[i + 1].e_y).abs());
    }
    worst
}

#[test]
fn linearized_rollout_error_is_second_order() {
    let coarse = linearization_error(0.01);
    let fine = linearization_error(0.005);
    let ratio = coarse / fine;
    println!("error {coarse:.3e} -> {fine:.3e}, ratio {ratio:.3}");
    assert!((ratio - 4.0).abs() < 0.4, "{ratio}");
}

#[test]
fn tracking_the_path_curvature_holds_zero_error() {
    let path = circle_arc(CartesianPoint::new(1.0, 1.0), 20.0, 0.5, 30.0, 0.5, false).unwrap();
    let controls: Vec<ControlInput> = path.curvatures()[..path.len() - 1]
        .iter()
        .map(|k| ControlInput::new(*k))
        .collect();
    for z in rollout(&path, VehicleStateZ::ZERO, &controls).unwrap() {
        assert!(z.e_y.abs() <= 1e-9 && z.e_psi.abs() <= 1e-9);
    }
}
