//! Airframe parameters and the shared value types passed between the
//! actuator models, the rigid-body model and the controller.
//!
//! Frames follow the NED convention: the inertial frame is North-East-Down
//! and the body z axis points down along the motor axis, so rotor thrust acts
//! along `-z_B`. Thrust coefficients are stored as positive magnitudes and the
//! direction is applied where forces are built.
//!
//! Vane angles are kept in an abstract "angle unit" that matches the
//! denominator of [`VehicleParams::c_m_delta`]. The default fixture uses
//! degrees.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Vehicle mass in kg, including the battery.
pub const VEHICLE_MASS_KG: f64 = 1.59;
/// Controller cycle time in seconds.
pub const CONTROL_PERIOD_S: f64 = 0.005;
/// Identified vane control effectiveness, N·m per degree of differential deflection.
pub const VANE_EFFECTIVENESS: f64 = 0.0014;
/// Measured peak vane moment near hover, N·m.
pub const MAX_VANE_MOMENT_NM: f64 = 0.12;
/// Pitch magnitude at which the Euler-rate map is treated as singular (about 80°).
pub const DEFAULT_PITCH_GUARD: f64 = 1.396;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VehicleParams {
    /// kg
    pub mass_total: f64,
    /// Diagonal of the body inertia matrix, kg·m².
    pub inertia_diag: Vector3<f64>,
    /// Upper rotor thrust coefficient, N/(rad/s)².
    pub c_tz1: f64,
    /// Lower rotor thrust coefficient, N/(rad/s)².
    pub c_tz2: f64,
    /// Upper rotor yaw torque coefficient, N·m/(rad/s)².
    pub c_mz1: f64,
    /// Lower rotor yaw torque coefficient, N·m/(rad/s)². Opposite sign to `c_mz1`.
    pub c_mz2: f64,
    /// Vane moment per angle unit of differential deflection, N·m.
    pub c_m_delta: f64,
    /// Yaw moment per angle unit of summed vane deflection. Zero disables vane yaw.
    pub c_mz_vane: f64,
    /// Vane aerodynamic centre distance to the body x axis, m. Lumped into `c_m_delta`.
    pub vane_arm_l1: f64,
    /// Vane aerodynamic centre distance to the body z axis, m. Lumped into `c_mz_vane`.
    pub vane_arm_l2: f64,
    /// m/s²
    pub gravity: f64,
    /// rad/s
    pub motor_speed_max: f64,
    /// Per-vane mechanical travel, angle units.
    pub vane_deflection_max: f64,
    /// s
    pub control_period: f64,
    /// rad
    pub pitch_guard: f64,
}

impl Default for VehicleParams {
    /// The reference airframe. Mass, control period and vane effectiveness
    /// are measured values; inertia, rotor coefficients and actuator limits
    /// are synthetic fixtures sized for a hover speed near 2000 rad/s.
    fn default() -> Self {
        Self {
            mass_total: VEHICLE_MASS_KG,
            inertia_diag: Vector3::new(0.02, 0.02, 0.03),
            c_tz1: 2.0e-6,
            c_tz2: 2.0e-6,
            c_mz1: 4.0e-8,
            c_mz2: -4.0e-8,
            c_m_delta: VANE_EFFECTIVENESS,
            c_mz_vane: 0.0,
            vane_arm_l1: 0.06,
            vane_arm_l2: 0.10,
            gravity: 9.81,
            motor_speed_max: 2800.0,
            vane_deflection_max: 43.0,
            control_period: CONTROL_PERIOD_S,
            pitch_guard: DEFAULT_PITCH_GUARD,
        }
    }
}

impl VehicleParams {
    pub fn weight(&self) -> f64 {
        self.mass_total * self.gravity
    }

    /// Largest roll or pitch moment the vanes can produce: both vanes of a
    /// pair at full opposite travel.
    pub fn max_vane_moment(&self) -> f64 {
        self.c_m_delta * 2.0 * self.vane_deflection_max
    }

    pub fn validate(self) -> Result<Self, ParamError> {
        validate_params(self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldViolation {
    pub field: &'static str,
    pub message: String,
}

impl std::fmt::Display for FieldViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid vehicle parameters: {}", display_list(.violations))]
pub struct ParamError {
    pub violations: Vec<FieldViolation>,
}

impl ParamError {
    pub fn has_field(&self, field: &str) -> bool {
        self.violations.iter().any(|v| v.field == field)
    }

    pub fn mentions(&self, text: &str) -> bool {
        self.violations.iter().any(|v| v.message.contains(text))
    }
}

fn display_list(v: &[FieldViolation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

/// Checks every parameter invariant and returns the set untouched when all
/// hold. All violations are reported together.
pub fn validate_params(raw: VehicleParams) -> Result<VehicleParams, ParamError> {
    let mut violations = Vec::new();
    let mut fail = |field: &'static str, message: &str| {
        violations.push(FieldViolation {
            field,
            message: message.to_string(),
        })
    };

    let scalars = [
        ("mass_total", raw.mass_total),
        ("c_tz1", raw.c_tz1),
        ("c_tz2", raw.c_tz2),
        ("c_mz1", raw.c_mz1),
        ("c_mz2", raw.c_mz2),
        ("c_m_delta", raw.c_m_delta),
        ("c_mz_vane", raw.c_mz_vane),
        ("vane_arm_l1", raw.vane_arm_l1),
        ("vane_arm_l2", raw.vane_arm_l2),
        ("gravity", raw.gravity),
        ("motor_speed_max", raw.motor_speed_max),
        ("vane_deflection_max", raw.vane_deflection_max),
        ("control_period", raw.control_period),
        ("pitch_guard", raw.pitch_guard),
    ];
    for (field, value) in scalars {
        if !value.is_finite() {
            fail(field, &format!("{field} must be finite"));
        }
    }

    if !(raw.mass_total > 0.0) {
        fail("mass_total", "mass_total must be positive");
    }
    if !raw.inertia_diag.iter().all(|&i| i > 0.0 && i.is_finite()) {
        fail("inertia_diag", "all inertia entries must be positive");
    }
    if !(raw.c_tz1 > 0.0) {
        fail("c_tz1", "c_tz1 must be positive");
    }
    if !(raw.c_tz2 > 0.0) {
        fail("c_tz2", "c_tz2 must be positive");
    }
    if !(raw.c_mz1 * raw.c_mz2 < 0.0) {
        fail("c_mz1", "yaw coefficients must have opposite signs");
    }
    if raw.c_m_delta == 0.0 {
        fail("c_m_delta", "c_m_delta must be non-zero");
    }
    if !(raw.vane_deflection_max > 0.0) {
        fail("vane_deflection_max", "vane_deflection_max must be positive");
    }
    if !(raw.motor_speed_max > 0.0) {
        fail("motor_speed_max", "motor_speed_max must be positive");
    }
    if !(raw.gravity > 0.0) {
        fail("gravity", "gravity must be positive");
    }
    if !(raw.control_period > 0.0) {
        fail("control_period", "control_period must be positive");
    }
    if !(raw.pitch_guard > 0.0 && raw.pitch_guard < std::f64::consts::FRAC_PI_2) {
        fail("pitch_guard", "pitch_guard must lie in (0, pi/2)");
    }
    if raw.vane_arm_l1 < 0.0 || raw.vane_arm_l2 < 0.0 {
        fail("vane_arm_l1", "vane arms must be non-negative");
    }

    if violations.is_empty() {
        Ok(raw)
    } else {
        Err(ParamError { violations })
    }
}

/// 12-component rigid-body state.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RigidBodyState {
    /// Inertial NED position, m.
    pub position_ned: Vector3<f64>,
    /// Inertial NED velocity, m/s.
    pub velocity_ned: Vector3<f64>,
    /// Roll, pitch, yaw (Z-Y-X), rad.
    pub euler: Vector3<f64>,
    /// Body rates p, q, r, rad/s.
    pub body_rates: Vector3<f64>,
}

impl RigidBodyState {
    pub fn is_finite(&self) -> bool {
        [self.position_ned, self.velocity_ned, self.euler, self.body_rates]
            .iter()
            .all(|v| v.iter().all(|x| x.is_finite()))
    }
}

/// Motor speeds and vane angles sent to the actuators.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ActuatorCommand {
    /// rad/s
    pub omega1: f64,
    /// rad/s
    pub omega2: f64,
    /// Vane angles in servo order, angle units.
    pub delta: [f64; 4],
}

impl ActuatorCommand {
    pub fn within_limits(&self, params: &VehicleParams) -> bool {
        let speed_ok = |w: f64| (0.0..=params.motor_speed_max).contains(&w);
        speed_ok(self.omega1)
            && speed_ok(self.omega2)
            && self.delta.iter().all(|d| d.abs() <= params.vane_deflection_max)
    }
}

/// Force and moment in the body frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Wrench {
    /// N
    pub force: Vector3<f64>,
    /// N·m
    pub moment: Vector3<f64>,
}

impl Wrench {
    pub fn zero() -> Self {
        Self::default()
    }
}

impl std::ops::Add for Wrench {
    type Output = Wrench;

    fn add(self, rhs: Wrench) -> Wrench {
        Wrench {
            force: self.force + rhs.force,
            moment: self.moment + rhs.moment,
        }
    }
}

impl std::iter::Sum for Wrench {
    fn sum<I: Iterator<Item = Wrench>>(iter: I) -> Wrench {
        iter.fold(Wrench::zero(), |a, b| a + b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_fixture_is_valid() {
        let p = VehicleParams::default();
        assert_eq!(validate_params(p), Ok(p));
    }

    #[test]
    fn measured_constants_are_embedded() {
        let p = VehicleParams::default();
        let table = [
            ("mass_total", p.mass_total, 1.59),
            ("control_period", p.control_period, 0.005),
            ("c_m_delta", p.c_m_delta, 0.0014),
        ];
        for (name, got, want) in table {
            assert_eq!(got, want, "{name}");
        }
        // 0.0014 * 86 = 0.1204
        assert!((p.max_vane_moment() - MAX_VANE_MOMENT_NM).abs() < 0.005);
    }

    #[test]
    fn zero_mass_rejected() {
        let p = VehicleParams {
            mass_total: 0.0,
            ..Default::default()
        };
        let err = validate_params(p).unwrap_err();
        assert!(err.has_field("mass_total"));
        assert!(err.mentions("mass_total must be positive"));
    }

    #[test]
    fn same_sign_yaw_coefficients_rejected() {
        let p = VehicleParams {
            c_mz1: 4e-8,
            c_mz2: 4e-8,
            ..Default::default()
        };
        let err = validate_params(p).unwrap_err();
        assert!(err.mentions("yaw coefficients must have opposite signs"));
    }

    #[test]
    fn reports_every_violation() {
        let p = VehicleParams {
            mass_total: -1.0,
            inertia_diag: Vector3::new(0.02, 0.0, 0.03),
            vane_deflection_max: 0.0,
            motor_speed_max: f64::NAN,
            ..Default::default()
        };
        let err = validate_params(p).unwrap_err();
        for field in [
            "mass_total",
            "inertia_diag",
            "vane_deflection_max",
            "motor_speed_max",
        ] {
            assert!(err.has_field(field), "{field} missing from {err}");
        }
    }

    #[test]
    fn params_toml_fills_defaults() {
        let p: VehicleParams = toml::from_str("mass_total = 1.7\ninertia_diag = [0.1, 0.2, 0.3]").unwrap();
        assert_eq!(p.mass_total, 1.7);
        assert_eq!(p.inertia_diag, Vector3::new(0.1, 0.2, 0.3));
        assert_eq!(p.c_m_delta, VANE_EFFECTIVENESS);
        assert!(toml::from_str::<VehicleParams>("mass = 1.0").is_err());
    }
}
