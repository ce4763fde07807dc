//! TOML scenario files.
//!
//! ```toml
//! [simulation]
//! duration = 20.0
//!
//! [controller]
//! kp = 100.0
//!
//! [[events]]
//! time = 5.0
//! attach = { point = 2, mass = 0.07 }
//! ```
//!
//! Every table rejects unknown keys. Omitted values take the reference
//! airframe and default controller tuning. Angles in the file are degrees.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::{EventKind, Scenario, ScenarioError, ScenarioEvent};
use crate::ladrc::{
    AxisConfig, AxisControlGains, ControllerConfig, EsoGains, DEFAULT_DIVERGENCE_BOUND, DEFAULT_KD,
    DEFAULT_KP, DEFAULT_OMEGA_OBS, DEFAULT_YAW_TORQUE_LIMIT, MAX_OBSERVER_STEP,
};
use crate::params::{validate_params, VehicleParams};
use crate::payload::{AttachGeometry, DEFAULT_LOAD_SHARE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThrustMode {
    /// Thrust tracks the current total weight, including payloads.
    #[default]
    Weight,
    /// Thrust holds `fixed_thrust`; extra payload weight makes the vehicle sink.
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSettings {
    /// s
    pub duration: f64,
    pub thrust_mode: ThrustMode,
    /// N, used in fixed mode.
    pub fixed_thrust: Option<f64>,
    /// Vertical friction share contact A must carry.
    pub load_share: f64,
    /// Standard deviation of the attitude measurement noise, degrees. 0 disables.
    pub measurement_noise_deg: f64,
    pub seed: u64,
    pub initial_euler_deg: [f64; 3],
    /// Defaults to the initial attitude.
    pub initial_setpoint_deg: Option<[f64; 3]>,
}

impl Default for SimulationSettings {
    fn default() -> Self {
        Self {
            duration: 10.0,
            thrust_mode: ThrustMode::Weight,
            fixed_thrust: None,
            load_share: DEFAULT_LOAD_SHARE,
            measurement_noise_deg: 0.0,
            seed: 0,
            initial_euler_deg: [0.0; 3],
            initial_setpoint_deg: None,
        }
    }
}

/// Per-axis overrides of the shared controller tuning.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AxisSpec {
    pub kp: Option<f64>,
    pub kd: Option<f64>,
    pub omega_obs: Option<f64>,
    /// Defaults to 1/inertia of the axis.
    pub b0: Option<f64>,
    /// N·m. Roll and pitch default to the vane budget.
    pub torque_limit: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerSpec {
    pub kp: f64,
    pub kd: f64,
    pub omega_obs: f64,
    pub yaw_torque_limit: f64,
    pub divergence_bound: f64,
    pub roll: AxisSpec,
    pub pitch: AxisSpec,
    pub yaw: AxisSpec,
}

impl Default for ControllerSpec {
    fn default() -> Self {
        Self {
            kp: DEFAULT_KP,
            kd: DEFAULT_KD,
            omega_obs: DEFAULT_OMEGA_OBS,
            yaw_torque_limit: DEFAULT_YAW_TORQUE_LIMIT,
            divergence_bound: DEFAULT_DIVERGENCE_BOUND,
            roll: AxisSpec::default(),
            pitch: AxisSpec::default(),
            yaw: AxisSpec::default(),
        }
    }
}

impl ControllerSpec {
    pub fn build(&self, params: &VehicleParams) -> Result<ControllerConfig, ScenarioError> {
        let j = params.inertia_diag;
        let vane = params.max_vane_moment();
        let mk = |name: &str, spec: &AxisSpec, inertia: f64, limit: f64| {
            let key = |k: &str| format!("controller.{name}.{k}");
            let kp = spec.kp.unwrap_or(self.kp);
            let kd = spec.kd.unwrap_or(self.kd);
            let omega = spec.omega_obs.unwrap_or(self.omega_obs);
            let b0 = spec.b0.unwrap_or(1.0 / inertia);
            let torque_limit = spec.torque_limit.unwrap_or(limit);
            if !(kp > 0.0 && kp.is_finite()) {
                return Err(ScenarioError::invalid(key("kp"), "must be positive"));
            }
            if !(kd > 0.0 && kd.is_finite()) {
                return Err(ScenarioError::invalid(key("kd"), "must be positive"));
            }
            if !(torque_limit > 0.0) {
                return Err(ScenarioError::invalid(key("torque_limit"), "must be positive"));
            }
            if !(omega * params.control_period < MAX_OBSERVER_STEP) {
                return Err(ScenarioError::invalid(
                    key("omega_obs"),
                    format!("omega_obs*control_period must stay below {MAX_OBSERVER_STEP}"),
                ));
            }
            let eso = EsoGains::from_bandwidth(omega, b0)
                .map_err(|e| ScenarioError::invalid(key("omega_obs"), e.to_string()))?;
            Ok(AxisConfig {
                gains: AxisControlGains { kp, kd },
                eso,
                torque_limit,
            })
        };
        if !(self.divergence_bound > 0.0) {
            return Err(ScenarioError::invalid(
                "controller.divergence_bound",
                "must be positive",
            ));
        }
        Ok(ControllerConfig {
            axes: [
                mk("roll", &self.roll, j.x, vane)?,
                mk("pitch", &self.pitch, j.y, vane)?,
                mk("yaw", &self.yaw, j.z, self.yaw_torque_limit)?,
            ],
            dt: params.control_period,
            divergence_bound: self.divergence_bound,
        })
    }
}

/// Payload attached at a numbered point. Contact properties default to the
/// attach-point geometry and the standard magnet fixture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttachSpec {
    pub point: usize,
    /// kg
    pub mass: f64,
    pub magnet_force_a: Option<f64>,
    pub magnet_force_b: Option<f64>,
    pub friction_coeff: Option<f64>,
    pub contact_span: Option<f64>,
    pub gravity_arm: Option<f64>,
    pub axis_offset: Option<f64>,
    /// Body-frame load position, m. Defaults to `gravity_arm` outboard of the point.
    pub position: Option<[f64; 3]>,
}

impl AttachSpec {
    pub fn to_attachment(&self, geometry: &AttachGeometry) -> crate::payload::PayloadAttachment {
        let mut p = geometry.attachment(self.point, self.mass);
        if let Some(v) = self.magnet_force_a {
            p.magnet_force_a = v;
        }
        if let Some(v) = self.magnet_force_b {
            p.magnet_force_b = v;
        }
        if let Some(v) = self.friction_coeff {
            p.friction_coeff = v;
        }
        if let Some(v) = self.contact_span {
            p.contact_span = v;
        }
        if let Some(v) = self.axis_offset {
            p.axis_offset = v;
        }
        if let Some(v) = self.gravity_arm {
            p.gravity_arm = v;
        }
        let dir = geometry.direction(self.point);
        let radial = p.axis_offset + p.gravity_arm;
        p.body_position = match self.position {
            Some(pos) => Vector3::from(pos),
            None => Vector3::new(dir.x * radial, dir.y * radial, geometry.depth),
        };
        p
    }
}

/// One `[[events]]` entry. Exactly one action key must be present.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventSpec {
    pub time: f64,
    pub set_attitude_deg: Option<[f64; 3]>,
    pub set_thrust: Option<f64>,
    pub attach: Option<AttachSpec>,
    pub detach: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioFile {
    pub simulation: SimulationSettings,
    pub vehicle: VehicleParams,
    pub controller: ControllerSpec,
    pub attach_points: AttachGeometry,
    pub events: Vec<EventSpec>,
}

/// Parses and validates a scenario file.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let file: ScenarioFile = toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
    file.validate()
}

impl ScenarioFile {
    pub fn validate(&self) -> Result<Scenario, ScenarioError> {
        let params = validate_params(self.vehicle)?;
        let controller = self.controller.build(&params)?;
        let sim = self.simulation;

        if !(sim.duration > 0.0 && sim.duration.is_finite()) {
            return Err(ScenarioError::invalid("simulation.duration", "must be positive"));
        }
        if !(sim.load_share > 0.0 && sim.load_share < 1.0) {
            return Err(ScenarioError::invalid(
                "simulation.load_share",
                "must lie in (0, 1)",
            ));
        }
        if !(sim.measurement_noise_deg >= 0.0 && sim.measurement_noise_deg.is_finite()) {
            return Err(ScenarioError::invalid(
                "simulation.measurement_noise_deg",
                "must be non-negative",
            ));
        }
        if sim.thrust_mode == ThrustMode::Fixed && sim.fixed_thrust.is_none() {
            return Err(ScenarioError::invalid(
                "simulation.fixed_thrust",
                "required when thrust_mode = \"fixed\"",
            ));
        }
        if let Some(t) = sim.fixed_thrust {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(ScenarioError::invalid(
                    "simulation.fixed_thrust",
                    "must be non-negative",
                ));
            }
        }
        let initial = sim.initial_euler_deg;
        if !initial.iter().all(|v| v.is_finite()) || initial[1].to_radians().abs() >= params.pitch_guard {
            return Err(ScenarioError::invalid(
                "simulation.initial_euler_deg",
                "must be finite with pitch inside the singularity guard",
            ));
        }

        let geometry = self.attach_points;
        if geometry.count == 0 || !(geometry.radius >= 0.0) || !geometry.depth.is_finite() {
            return Err(ScenarioError::invalid(
                "attach_points",
                "count must be positive and radius non-negative",
            ));
        }

        let mut events = Vec::with_capacity(self.events.len());
        for (i, spec) in self.events.iter().enumerate() {
            let key = |k: &str| format!("events[{i}].{k}");
            if !(spec.time >= 0.0 && spec.time.is_finite()) {
                return Err(ScenarioError::invalid(key("time"), "must be non-negative"));
            }
            let actions = spec.set_attitude_deg.is_some() as u8
                + spec.set_thrust.is_some() as u8
                + spec.attach.is_some() as u8
                + spec.detach.is_some() as u8;
            if actions != 1 {
                return Err(ScenarioError::invalid(
                    format!("events[{i}]"),
                    "exactly one of set_attitude_deg, set_thrust, attach, detach is required",
                ));
            }
            let kind = if let Some(deg) = spec.set_attitude_deg {
                if !deg.iter().all(|v| v.is_finite()) || deg[1].to_radians().abs() >= params.pitch_guard {
                    return Err(ScenarioError::invalid(
                        key("set_attitude_deg"),
                        "must be finite with pitch inside the singularity guard",
                    ));
                }
                EventKind::SetAttitude(Vector3::from(deg).map(f64::to_radians))
            } else if let Some(t) = spec.set_thrust {
                if !(t >= 0.0 && t.is_finite()) {
                    return Err(ScenarioError::invalid(key("set_thrust"), "must be non-negative"));
                }
                EventKind::SetThrust(t)
            } else if let Some(a) = spec.attach {
                if a.point >= geometry.count {
                    return Err(ScenarioError::invalid(
                        key("attach.point"),
                        format!("must be below attach_points.count = {}", geometry.count),
                    ));
                }
                let p = a
                    .to_attachment(&geometry)
                    .validate()
                    .map_err(|e| ScenarioError::invalid(key("attach"), e.to_string()))?;
                EventKind::AttachPayload(p)
            } else {
                let point = spec.detach.expect("one action present");
                if point >= geometry.count {
                    return Err(ScenarioError::invalid(
                        key("detach"),
                        format!("must be below attach_points.count = {}", geometry.count),
                    ));
                }
                EventKind::DetachPayload(point)
            };
            events.push((
                i,
                ScenarioEvent {
                    time: spec.time,
                    kind,
                },
            ));
        }
        events.sort_by(|a, b| a.1.time.total_cmp(&b.1.time));

        let mut occupied = vec![false; geometry.count];
        for (i, e) in &events {
            match e.kind {
                EventKind::AttachPayload(p) => {
                    if occupied[p.attach_point] {
                        return Err(ScenarioError::invalid(
                            format!("events[{i}].attach.point"),
                            format!("attach point {} already carries a payload", p.attach_point),
                        ));
                    }
                    occupied[p.attach_point] = true;
                }
                EventKind::DetachPayload(point) => {
                    if !occupied[point] {
                        return Err(ScenarioError::invalid(
                            format!("events[{i}].detach"),
                            format!("attach point {point} is empty"),
                        ));
                    }
                    occupied[point] = false;
                }
                _ => {}
            }
        }

        Ok(Scenario {
            params,
            controller,
            settings: sim,
            geometry,
            events: events.into_iter().map(|(_, e)| e).collect(),
        })
    }
}
