//! Rigid-body equations of motion and the fixed-step RK4 integrator.
//!
//! Rotation is Newton-Euler in the body frame with a diagonal inertia,
//! attitude kinematics use the Z-Y-X Euler-rate map, and translation is
//! integrated in the inertial NED frame.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::actuation::actuator_wrench;
use crate::params::{ActuatorCommand, RigidBodyState, VehicleParams, Wrench};

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum DynamicsError {
    #[error("pitch {pitch:.4} rad reached the Euler singularity guard {guard:.4} rad")]
    Singularity { pitch: f64, guard: f64 },
    #[error("time step must be positive, got {0}")]
    BadStep(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StateDerivative {
    pub d_position: Vector3<f64>,
    pub d_velocity: Vector3<f64>,
    pub d_euler: Vector3<f64>,
    pub d_body_rates: Vector3<f64>,
}

/// Body-to-inertial rotation `R_z(ψ)·R_y(θ)·R_x(φ)`.
pub fn rotation_inertial_from_body(euler: &Vector3<f64>) -> Matrix3<f64> {
    let (sphi, cphi) = euler.x.sin_cos();
    let (sth, cth) = euler.y.sin_cos();
    let (spsi, cpsi) = euler.z.sin_cos();
    Matrix3::new(
        cth * cpsi,
        sphi * sth * cpsi - cphi * spsi,
        cphi * sth * cpsi + sphi * spsi,
        cth * spsi,
        sphi * sth * spsi + cphi * cpsi,
        cphi * sth * spsi - sphi * cpsi,
        -sth,
        sphi * cth,
        cphi * cth,
    )
}

/// Inertial-to-body rotation, the transpose of [`rotation_inertial_from_body`].
pub fn rotation_body_from_inertial(euler: &Vector3<f64>) -> Matrix3<f64> {
    rotation_inertial_from_body(euler).transpose()
}

/// Weight `m·g` expressed in the body frame.
pub fn gravity_body(euler: &Vector3<f64>, mass: f64, g: f64) -> Vector3<f64> {
    rotation_body_from_inertial(euler) * Vector3::new(0.0, 0.0, mass * g)
}

/// Map from body rates to Euler angle rates. Fails when `|θ|` reaches `guard`.
pub fn euler_rate_matrix(euler: &Vector3<f64>, guard: f64) -> Result<Matrix3<f64>, DynamicsError> {
    let pitch = euler.y;
    if !(pitch.abs() < guard) {
        return Err(DynamicsError::Singularity { pitch, guard });
    }
    let (sphi, cphi) = euler.x.sin_cos();
    let (tth, cth) = (pitch.tan(), pitch.cos());
    Ok(Matrix3::new(
        1.0,
        sphi * tth,
        cphi * tth,
        0.0,
        cphi,
        -sphi,
        0.0,
        sphi / cth,
        cphi / cth,
    ))
}

/// Time derivative of the full state under a held command and an external
/// body wrench.
pub fn state_derivative(
    state: &RigidBodyState,
    cmd: &ActuatorCommand,
    extra: &Wrench,
    params: &VehicleParams,
) -> Result<StateDerivative, DynamicsError> {
    let q = euler_rate_matrix(&state.euler, params.pitch_guard)?;
    let actuators = actuator_wrench(cmd, params);

    let force_body =
        gravity_body(&state.euler, params.mass_total, params.gravity) + actuators.force + extra.force;
    let d_velocity = rotation_inertial_from_body(&state.euler) * force_body / params.mass_total;

    let w = state.body_rates;
    let j = params.inertia_diag;
    let jw = j.component_mul(&w);
    let moment = actuators.moment + extra.moment - w.cross(&jw);
    let d_body_rates = moment.component_div(&j);

    Ok(StateDerivative {
        d_position: state.velocity_ned,
        d_velocity,
        d_euler: q * w,
        d_body_rates,
    })
}

fn advance(state: &RigidBodyState, d: &StateDerivative, h: f64) -> RigidBodyState {
    RigidBodyState {
        position_ned: state.position_ned + d.d_position * h,
        velocity_ned: state.velocity_ned + d.d_velocity * h,
        euler: state.euler + d.d_euler * h,
        body_rates: state.body_rates + d.d_body_rates * h,
    }
}

/// One classical Runge-Kutta step with the command and external wrench held
/// constant over the step.
pub fn rk4_step(
    state: &RigidBodyState,
    cmd: &ActuatorCommand,
    extra: &Wrench,
    params: &VehicleParams,
    dt: f64,
) -> Result<RigidBodyState, DynamicsError> {
    if !(dt > 0.0) {
        return Err(DynamicsError::BadStep(dt));
    }
    let f = |s: &RigidBodyState| state_derivative(s, cmd, extra, params);
    let k1 = f(state)?;
    let k2 = f(&advance(state, &k1, dt / 2.0))?;
    let k3 = f(&advance(state, &k2, dt / 2.0))?;
    let k4 = f(&advance(state, &k3, dt))?;
    let sum = StateDerivative {
        d_position: k1.d_position + 2.0 * k2.d_position + 2.0 * k3.d_position + k4.d_position,
        d_velocity: k1.d_velocity + 2.0 * k2.d_velocity + 2.0 * k3.d_velocity + k4.d_velocity,
        d_euler: k1.d_euler + 2.0 * k2.d_euler + 2.0 * k3.d_euler + k4.d_euler,
        d_body_rates: k1.d_body_rates + 2.0 * k2.d_body_rates + 2.0 * k3.d_body_rates + k4.d_body_rates,
    };
    Ok(advance(state, &sum, dt / 6.0))
}

/// `½ ωᵀJω` for a diagonal inertia.
pub fn rotational_energy(body_rates: &Vector3<f64>, inertia_diag: &Vector3<f64>) -> f64 {
    0.5 * body_rates.dot(&inertia_diag.component_mul(body_rates))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actuation::{allocate, DesiredWrench};
    use std::f64::consts::FRAC_PI_2;

    const TOL: f64 = 1e-12;

    fn close(a: &Vector3<f64>, b: &Vector3<f64>, tol: f64) -> bool {
        (a - b).amax() < tol
    }

    #[test]
    fn gravity_level() {
        let g = gravity_body(&Vector3::zeros(), 1.59, 9.81);
        assert!(close(&g, &Vector3::new(0.0, 0.0, 15.5979), 1e-9));
    }

    #[test]
    fn gravity_pitch_near_vertical() {
        let g = gravity_body(&Vector3::new(0.0, FRAC_PI_2 - 1e-9, 0.0), 1.59, 9.81);
        assert!(close(&g, &Vector3::new(-15.5979, 0.0, 0.0), 1e-6), "{g}");
    }

    #[test]
    fn gravity_roll_quarter_turn() {
        // R_gb = R_x(φ)ᵀ at θ = ψ = 0: (0, sinφ, cosφ)·mg
        let g = gravity_body(&Vector3::new(FRAC_PI_2, 0.0, 0.0), 1.59, 9.81);
        assert!(close(&g, &Vector3::new(0.0, 15.5979, 0.0), 1e-9), "{g}");
    }

    #[test]
    fn rotations_are_orthonormal() {
        let e = Vector3::new(0.3, -0.7, 2.1);
        let r = rotation_inertial_from_body(&e);
        assert!((r * r.transpose() - Matrix3::identity()).amax() < TOL);
        assert!((r.determinant() - 1.0).abs() < TOL);
    }

    #[test]
    fn rate_matrix_identity_at_level() {
        let q = euler_rate_matrix(&Vector3::zeros(), 1.396).unwrap();
        assert_eq!(q, Matrix3::identity());
    }

    #[test]
    fn rate_matrix_roll_quarter_turn() {
        let q = euler_rate_matrix(&Vector3::new(FRAC_PI_2, 0.0, 0.0), 1.396).unwrap();
        let want = Matrix3::new(1.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0);
        assert!((q - want).amax() < TOL, "{q}");
    }

    #[test]
    fn rate_matrix_guard() {
        let err = euler_rate_matrix(&Vector3::new(0.0, 85f64.to_radians(), 0.0), 1.396).unwrap_err();
        assert!(matches!(err, DynamicsError::Singularity { .. }));
        assert!(euler_rate_matrix(&Vector3::new(0.0, -85f64.to_radians(), 0.0), 1.396).is_err());
    }

    #[test]
    fn hover_trim_is_equilibrium() {
        let p = VehicleParams::default();
        let a = allocate(&DesiredWrench::new(p.weight(), Vector3::zeros()), &p).unwrap();
        let d = state_derivative(&RigidBodyState::default(), &a.command, &Wrench::zero(), &p).unwrap();
        for v in [d.d_position, d.d_velocity, d.d_euler, d.d_body_rates] {
            assert!(v.amax() < TOL, "{v}");
        }
        let next = rk4_step(&RigidBodyState::default(), &a.command, &Wrench::zero(), &p, 0.005).unwrap();
        assert!(next.velocity_ned.amax() < TOL && next.euler.amax() < TOL);
    }

    #[test]
    fn zero_command_free_fall() {
        let p = VehicleParams::default();
        let d = state_derivative(
            &RigidBodyState::default(),
            &ActuatorCommand::default(),
            &Wrench::zero(),
            &p,
        )
        .unwrap();
        assert!(close(&d.d_velocity, &Vector3::new(0.0, 0.0, 9.81), TOL));
    }

    #[test]
    fn extra_moment_roll_acceleration() {
        let p = VehicleParams::default();
        let a = allocate(&DesiredWrench::new(p.weight(), Vector3::zeros()), &p).unwrap();
        let extra = Wrench {
            force: Vector3::zeros(),
            moment: Vector3::new(0.1029, 0.0, 0.0),
        };
        let d = state_derivative(&RigidBodyState::default(), &a.command, &extra, &p).unwrap();
        assert!(close(&d.d_body_rates, &Vector3::new(5.145, 0.0, 0.0), 1e-12));
    }

    #[test]
    fn rejects_non_positive_step() {
        let p = VehicleParams::default();
        let s = RigidBodyState::default();
        assert!(rk4_step(&s, &ActuatorCommand::default(), &Wrench::zero(), &p, 0.0).is_err());
    }
}
