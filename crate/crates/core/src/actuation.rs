//! Rotor and vane actuator models and the inverse map from a desired
//! thrust/torque to motor speeds and vane angles.
//!
//! Roll and pitch come only from the vanes, yaw only from the rotor speed
//! differential. Opposite vanes always deflect by equal and opposite angles,
//! which removes the redundancy of the four-vane layout.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::params::{ActuatorCommand, VehicleParams, Wrench};

/// Below this normalized determinant the rotor 2×2 system is treated as
/// singular. The determinant is scaled by `|c_tz1·c_mz2| + |c_tz2·c_mz1|`
/// since raw rotor coefficient products are around 1e-13.
pub const SINGULAR_EPS: f64 = 1e-12;

/// Thrust magnitude along `-z_B` and body torque requested by the controller.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DesiredWrench {
    /// N, non-negative.
    pub thrust: f64,
    /// N·m
    pub torque: Vector3<f64>,
}

impl DesiredWrench {
    pub fn new(thrust: f64, torque: Vector3<f64>) -> Self {
        Self { thrust, torque }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum AllocationError {
    #[error("desired thrust must be non-negative, got {0}")]
    NegativeThrust(f64),
    #[error("rotor allocation matrix is singular (determinant {0:e})")]
    Singular(f64),
    #[error("infeasible allocation: motor {motor} needs squared speed {squared_speed:e} < 0")]
    Infeasible { motor: u8, squared_speed: f64 },
}

/// Which actuator channels were clipped while allocating.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SaturationFlags {
    pub vane_x: bool,
    pub vane_y: bool,
    pub motor1: bool,
    pub motor2: bool,
}

impl SaturationFlags {
    pub fn any(&self) -> bool {
        self.vane_x || self.vane_y || self.motor1 || self.motor2
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Allocation {
    pub command: ActuatorCommand,
    pub saturation: SaturationFlags,
    /// What the forward models produce for `command`.
    pub achieved: DesiredWrench,
    /// `achieved - desired` per channel (thrust, τx, τy, τz). Zero unless saturated.
    pub residual: [f64; 4],
}

/// Rotor force and yaw moment in the body frame.
pub fn propeller_wrench(omega1: f64, omega2: f64, params: &VehicleParams) -> Wrench {
    let (s1, s2) = (omega1 * omega1, omega2 * omega2);
    let thrust = params.c_tz1 * s1 + params.c_tz2 * s2;
    Wrench {
        force: Vector3::new(0.0, 0.0, -thrust),
        moment: Vector3::new(0.0, 0.0, params.c_mz1 * s1 + params.c_mz2 * s2),
    }
}

/// Vane moment for the four servo angles. The small axial vane force is
/// neglected.
pub fn vane_moment(delta: &[f64; 4], params: &VehicleParams) -> Wrench {
    let [d1, d2, d3, d4] = *delta;
    Wrench {
        force: Vector3::zeros(),
        moment: Vector3::new(
            params.c_m_delta * (d3 - d1),
            params.c_m_delta * (d4 - d2),
            params.c_mz_vane * (d1 + d2 + d3 + d4),
        ),
    }
}

/// Total actuator wrench for a command.
pub fn actuator_wrench(cmd: &ActuatorCommand, params: &VehicleParams) -> Wrench {
    propeller_wrench(cmd.omega1, cmd.omega2, params) + vane_moment(&cmd.delta, params)
}

/// Maps a desired thrust and body torque onto the actuators.
///
/// Vane pairs are clamped first; the rotor speeds then solve
/// `c_tz1·Ω1² + c_tz2·Ω2² = T` and `c_mz1·Ω1² + c_mz2·Ω2² = τz - vane yaw`.
/// Speeds above the limit are clamped and flagged; a negative squared speed
/// is an error since no clamp can recover the requested yaw sign.
pub fn allocate(desired: &DesiredWrench, params: &VehicleParams) -> Result<Allocation, AllocationError> {
    if !(desired.thrust >= 0.0) {
        return Err(AllocationError::NegativeThrust(desired.thrust));
    }
    let mut saturation = SaturationFlags::default();

    // each vane of a pair carries half of the differential δ3 - δ1
    let limit = params.vane_deflection_max;
    let dx = desired.torque.x / (2.0 * params.c_m_delta);
    let dy = desired.torque.y / (2.0 * params.c_m_delta);
    let dx_sat = dx.clamp(-limit, limit);
    let dy_sat = dy.clamp(-limit, limit);
    saturation.vane_x = dx_sat != dx;
    saturation.vane_y = dy_sat != dy;
    let delta = [-dx_sat, -dy_sat, dx_sat, dy_sat];

    // anti-symmetric pairs sum to zero, kept for non-default vane layouts
    let vane_yaw = params.c_mz_vane * delta.iter().sum::<f64>();
    let yaw = desired.torque.z - vane_yaw;

    let det = params.c_tz1 * params.c_mz2 - params.c_tz2 * params.c_mz1;
    let scale = (params.c_tz1 * params.c_mz2).abs() + (params.c_tz2 * params.c_mz1).abs();
    if !(det.abs() > SINGULAR_EPS * scale) {
        return Err(AllocationError::Singular(det));
    }
    let s1 = (desired.thrust * params.c_mz2 - params.c_tz2 * yaw) / det;
    let s2 = (params.c_tz1 * yaw - params.c_mz1 * desired.thrust) / det;
    // round-off around a zero request
    let tol = 1e-9 * (s1.abs() + s2.abs()).max(1.0);
    for (motor, s) in [(1u8, s1), (2u8, s2)] {
        if s < -tol {
            return Err(AllocationError::Infeasible {
                motor,
                squared_speed: s,
            });
        }
    }

    let max = params.motor_speed_max;
    let speed = |s: f64, flag: &mut bool| {
        let w = s.max(0.0).sqrt();
        if w > max {
            *flag = true;
            max
        } else {
            w
        }
    };
    let omega1 = speed(s1, &mut saturation.motor1);
    let omega2 = speed(s2, &mut saturation.motor2);

    let command = ActuatorCommand {
        omega1,
        omega2,
        delta,
    };
    let w = actuator_wrench(&command, params);
    let achieved = DesiredWrench::new(-w.force.z, w.moment);
    let residual = [
        achieved.thrust - desired.thrust,
        achieved.torque.x - desired.torque.x,
        achieved.torque.y - desired.torque.y,
        achieved.torque.z - desired.torque.z,
    ];
    Ok(Allocation {
        command,
        saturation,
        achieved,
        residual,
    })
}
