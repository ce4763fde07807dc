//! Cross-checks against independently derived reference solutions.

use ductfan::actuation::{allocate, DesiredWrench};
use ductfan::dynamics::rk4_step;
use ductfan::ladrc::{eso_step, EsoGains, EsoState};
use ductfan::params::{ActuatorCommand, RigidBodyState, VehicleParams, Wrench};
use ductfan::payload::{max_unilateral_load, trim_deflection, AttachGeometry};
use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

#[test]
fn hover_speeds_match_hand_solution() {
    let p = VehicleParams::default();
    let a = allocate(&DesiredWrench::new(15.60, Vector3::zeros()), &p).unwrap();
    // equal coefficients: Ω² = T / (c_tz1 + c_tz2)
    let omega = (15.60f64 / 4e-6).sqrt();
    assert!(close(a.command.omega1, omega, 1e-9));
    assert!(close(a.command.omega2, omega, 1e-9));
    assert!(close(omega, 1974.8, 0.05));
}

#[test]
fn motor_split_matches_matrix_inverse() {
    let p = VehicleParams::default();
    let m = Matrix2::new(p.c_tz1, p.c_tz2, p.c_mz1, p.c_mz2);
    let lu = m.lu();
    for (t, tz) in [(15.6, 0.01), (12.0, -0.02), (20.0, 0.0), (8.0, 0.005)] {
        let s = lu.solve(&Vector2::new(t, tz)).unwrap();
        let a = allocate(&DesiredWrench::new(t, Vector3::new(0.0, 0.0, tz)), &p).unwrap();
        assert!(close(a.command.omega1.powi(2), s.x, 1e-6 * s.x));
        assert!(close(a.command.omega2.powi(2), s.y, 1e-6 * s.y));
    }
    let a = allocate(&DesiredWrench::new(15.6, Vector3::new(0.0, 0.0, 0.01)), &p).unwrap();
    assert!(close(a.command.omega1.powi(2), 4.025e6, 1e-3));
    assert!(close(a.command.omega2.powi(2), 3.775e6, 1e-3));
}

/// Same observer written as a linear state-space recursion
/// `z⁺ = (I + dt·A_L)·z + dt·B·[u, y]`.
fn eso_matrix_form(omega: f64, b0: f64, dt: f64) -> (Matrix3<f64>, Matrix3<f64>) {
    let (l1, l2, l3) = (3.0 * omega, 3.0 * omega * omega, omega.powi(3));
    let a = Matrix3::new(-l1, 1.0, 0.0, -l2, 0.0, 1.0, -l3, 0.0, 0.0);
    // columns: u, y, unused
    let b = Matrix3::new(0.0, l1, 0.0, b0, l2, 0.0, 0.0, l3, 0.0);
    (Matrix3::identity() + dt * a, dt * b)
}

#[test]
fn observer_matches_state_space_form() {
    let (omega, b0, dt) = (50.0, 1.0 / 0.02, 0.005);
    let gains = EsoGains::from_bandwidth(omega, b0).unwrap();
    let (phi, gam) = eso_matrix_form(omega, b0, dt);
    let mut z = EsoState::default();
    let mut zm = Vector3::zeros();
    for k in 0..400 {
        let t = k as f64 * dt;
        let y = 0.1 * (3.0 * t).sin();
        let u = 0.05 * (1.3 * t).cos();
        z = eso_step(&z, y, u, &gains, dt, 1e6).unwrap();
        zm = phi * zm + gam * Vector3::new(u, y, 0.0);
        assert!(close(z.z1, zm.x, 1e-12));
        assert!(close(z.z2, zm.y, 1e-10));
        assert!(close(z.z3, zm.z, 1e-8));
    }
}

#[test]
fn observer_poles_lie_inside_unit_circle() {
    let (phi, _) = eso_matrix_form(50.0, 50.0, 0.005);
    let eig = phi.complex_eigenvalues();
    for e in eig.iter() {
        // triple pole at 1 - ω·dt
        assert!(close(e.norm(), 0.75, 1e-4), "{e}");
    }
}

/// Double integrator with a constant disturbance, exact zero-order-hold
/// discretization, driven by a PD + disturbance-cancelling law.
#[test]
fn observer_tracks_step_disturbance_in_closed_loop() {
    let (dt, b0, f) = (0.005, 50.0, 1.0);
    let gains = EsoGains::from_bandwidth(50.0, b0).unwrap();
    let (mut x, mut v) = (0.0f64, 0.0f64);
    let mut z = EsoState::default();
    let mut u = 0.0;
    for _ in 0..200 {
        z = eso_step(&z, x, u, &gains, dt, 1e6).unwrap();
        u = (100.0 * (0.0 - z.z1) - 20.0 * z.z2 - z.z3) / b0;
        let acc = b0 * u + f;
        x += v * dt + 0.5 * acc * dt * dt;
        v += acc * dt;
    }
    assert!((z.z3 - f).abs() < 0.05 * f, "z3 = {}", z.z3);
    assert!(x.abs() < 1e-3);
}

/// Torque-free axisymmetric rigid body: with `Ix = Iy`, `r` is constant and
/// `(p, q)` rotates at `λ = (Iz - Ix)/Ix · r`.
#[test]
fn torque_free_spin_matches_closed_form() {
    let p = VehicleParams::default();
    let weightless = VehicleParams { gravity: 0.0, ..p };
    let (w0, r0) = (0.4, 2.0);
    let lambda = (p.inertia_diag.z - p.inertia_diag.x) / p.inertia_diag.x * r0;
    let mut s = RigidBodyState {
        body_rates: Vector3::new(w0, 0.0, r0),
        ..Default::default()
    };
    let dt = 0.005;
    for k in 1..=400 {
        s = rk4_step(&s, &ActuatorCommand::default(), &Wrench::zero(), &weightless, dt).unwrap();
        let t = k as f64 * dt;
        let (sl, cl) = (lambda * t).sin_cos();
        assert!(close(s.body_rates.x, w0 * cl, 1e-9));
        assert!(close(s.body_rates.y, w0 * sl, 1e-9));
        assert!(close(s.body_rates.z, r0, 1e-12));
    }
}

#[test]
fn seventy_gram_numbers() {
    let g = 9.81;
    let m = max_unilateral_load(0.12, 0.175, g).unwrap();
    assert!(close(m * 1000.0, 69.9, 0.5));

    let params = VehicleParams::default();
    let mut load = AttachGeometry::default().attachment(2, 0.070);
    load.axis_offset = 0.16;
    let trim = trim_deflection(&load, &params);
    assert!(close(trim.deflection, 0.070 * g * 0.175 / 0.0014, 1e-9));
    assert!(close(trim.deflection, 85.8, 0.1));
    assert!(!trim.over_budget);
}
