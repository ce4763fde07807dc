//! Linear active disturbance rejection attitude control.
//!
//! Each axis is treated as a double integrator `ÿ = b0·u + f` where `f`
//! lumps everything the model leaves out (Euler-rate coupling, gyroscopic
//! terms, payload moments, inertia errors). A third-order extended state
//! observer estimates `(y, ẏ, f)`, a PD law acts on the estimates, and the
//! disturbance estimate is subtracted before dividing by `b0`.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::actuation::DesiredWrench;
use crate::params::VehicleParams;

/// Forward-Euler observer stability gate on `ω_o·dt`.
pub const MAX_OBSERVER_STEP: f64 = 0.3;
pub const DEFAULT_DIVERGENCE_BOUND: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Roll,
    Pitch,
    Yaw,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::Roll, Axis::Pitch, Axis::Yaw];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Axis::Roll => "roll",
            Axis::Pitch => "pitch",
            Axis::Yaw => "yaw",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum ObserverError {
    #[error("observer step too coarse: omega_obs*dt = {0:.3} (limit {MAX_OBSERVER_STEP})")]
    StepTooLarge(f64),
    #[error("observer diverged: z{component} = {value:e} exceeds bound {bound:e}")]
    Divergence { component: u8, value: f64, bound: f64 },
    #[error("invalid observer gains: {0}")]
    BadGains(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("{axis} channel: {source}")]
pub struct ControllerError {
    pub axis: Axis,
    #[source]
    pub source: ObserverError,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EsoGains {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
    /// Input gain, 1/inertia of the axis.
    pub b0: f64,
    /// rad/s
    pub omega_obs: f64,
}

impl EsoGains {
    /// Places all three observer poles at `-omega_obs`.
    pub fn from_bandwidth(omega_obs: f64, b0: f64) -> Result<Self, ObserverError> {
        if !(omega_obs > 0.0) || !omega_obs.is_finite() {
            return Err(ObserverError::BadGains("omega_obs must be positive"));
        }
        if b0 == 0.0 || !b0.is_finite() {
            return Err(ObserverError::BadGains("b0 must be non-zero"));
        }
        Ok(Self {
            l1: 3.0 * omega_obs,
            l2: 3.0 * omega_obs * omega_obs,
            l3: omega_obs.powi(3),
            b0,
            omega_obs,
        })
    }
}

/// Observer estimate for one axis: angle, rate and total disturbance.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EsoState {
    pub z1: f64,
    pub z2: f64,
    pub z3: f64,
}

impl EsoState {
    pub fn new(z1: f64, z2: f64, z3: f64) -> Self {
        Self { z1, z2, z3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisControlGains {
    /// 1/s²
    pub kp: f64,
    /// 1/s
    pub kd: f64,
}

/// One observer update with the current measurement in the correction term.
pub fn eso_step(
    z: &EsoState,
    y_meas: f64,
    u: f64,
    gains: &EsoGains,
    dt: f64,
    bound: f64,
) -> Result<EsoState, ObserverError> {
    let ratio = gains.omega_obs * dt;
    if !(dt > 0.0) || !(ratio < MAX_OBSERVER_STEP) {
        return Err(ObserverError::StepTooLarge(ratio));
    }
    let e = y_meas - z.z1;
    let next = EsoState {
        z1: z.z1 + dt * (z.z2 + gains.l1 * e),
        z2: z.z2 + dt * (z.z3 + gains.b0 * u + gains.l2 * e),
        z3: z.z3 + dt * (gains.l3 * e),
    };
    for (component, value) in [(1u8, next.z1), (2, next.z2), (3, next.z3)] {
        if !(value.abs() <= bound) {
            return Err(ObserverError::Divergence {
                component,
                value,
                bound,
            });
        }
    }
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AxisOutput {
    /// PD reference acceleration before disturbance compensation.
    pub u0: f64,
    /// Torque after compensation and saturation, N·m.
    pub torque: f64,
    pub saturated: bool,
}

/// PD on the observer estimates with disturbance cancellation, clipped to
/// `±torque_limit`.
pub fn control_law(
    z: &EsoState,
    setpoint: f64,
    gains: &AxisControlGains,
    eso: &EsoGains,
    torque_limit: f64,
) -> AxisOutput {
    let u0 = gains.kp * (setpoint - z.z1) - gains.kd * z.z2;
    let raw = (u0 - z.z3) / eso.b0;
    let torque = raw.clamp(-torque_limit, torque_limit);
    AxisOutput {
        u0,
        torque,
        saturated: torque != raw,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisConfig {
    pub gains: AxisControlGains,
    pub eso: EsoGains,
    /// N·m
    pub torque_limit: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerConfig {
    /// Roll, pitch, yaw.
    pub axes: [AxisConfig; 3],
    pub dt: f64,
    pub divergence_bound: f64,
}

pub const DEFAULT_KP: f64 = 100.0;
pub const DEFAULT_KD: f64 = 20.0;
pub const DEFAULT_OMEGA_OBS: f64 = 50.0;
pub const DEFAULT_YAW_TORQUE_LIMIT: f64 = 0.05;

impl ControllerConfig {
    /// Default tuning: `kp = 100`, `kd = 20` put both closed-loop poles at
    /// -10 rad/s, the observer sits at 50 rad/s, and `b0 = 1/I` per axis.
    /// Roll and pitch are limited by the vane budget.
    pub fn default_for(params: &VehicleParams) -> Self {
        let axis = |inertia: f64, torque_limit: f64| AxisConfig {
            gains: AxisControlGains {
                kp: DEFAULT_KP,
                kd: DEFAULT_KD,
            },
            eso: EsoGains::from_bandwidth(DEFAULT_OMEGA_OBS, 1.0 / inertia).expect("validated inertia"),
            torque_limit,
        };
        let vane = params.max_vane_moment();
        let j = params.inertia_diag;
        Self {
            axes: [
                axis(j.x, vane),
                axis(j.y, vane),
                axis(j.z, DEFAULT_YAW_TORQUE_LIMIT),
            ],
            dt: params.control_period,
            divergence_bound: DEFAULT_DIVERGENCE_BOUND,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AxisTelemetry {
    pub z1: f64,
    pub z2: f64,
    pub z3: f64,
    pub u0: f64,
    pub u: f64,
    pub saturated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerStep {
    pub wrench: DesiredWrench,
    pub observers: [EsoState; 3],
    pub telemetry: [AxisTelemetry; 3],
}

/// One control cycle for all three axes. `applied_torque` is the torque that
/// actually acted during the previous cycle and drives the observers.
pub fn attitude_controller_step(
    meas_euler: &Vector3<f64>,
    setpoints: &Vector3<f64>,
    thrust_setpoint: f64,
    observers: &[EsoState; 3],
    applied_torque: &Vector3<f64>,
    config: &ControllerConfig,
) -> Result<ControllerStep, ControllerError> {
    let mut next = *observers;
    let mut telemetry = [AxisTelemetry::default(); 3];
    let mut torque = Vector3::zeros();
    for axis in Axis::ALL {
        let i = axis.index();
        let cfg = &config.axes[i];
        let z = eso_step(
            &observers[i],
            meas_euler[i],
            applied_torque[i],
            &cfg.eso,
            config.dt,
            config.divergence_bound,
        )
        .map_err(|source| ControllerError { axis, source })?;
        let out = control_law(&z, setpoints[i], &cfg.gains, &cfg.eso, cfg.torque_limit);
        next[i] = z;
        torque[i] = out.torque;
        telemetry[i] = AxisTelemetry {
            z1: z.z1,
            z2: z.z2,
            z3: z.z3,
            u0: out.u0,
            u: out.torque,
            saturated: out.saturated,
        };
    }
    Ok(ControllerStep {
        wrench: DesiredWrench::new(thrust_setpoint, torque),
        observers: next,
        telemetry,
    })
}

/// Stateful wrapper owning the observers of one vehicle.
#[derive(Debug, Clone)]
pub struct AttitudeController {
    config: ControllerConfig,
    observers: [EsoState; 3],
    applied: Vector3<f64>,
}

impl AttitudeController {
    pub fn new(config: ControllerConfig) -> Self {
        Self {
            config,
            observers: [EsoState::default(); 3],
            applied: Vector3::zeros(),
        }
    }

    /// Starts the observers converged on a known attitude at rest.
    pub fn converged_at(config: ControllerConfig, euler: &Vector3<f64>) -> Self {
        let mut c = Self::new(config);
        for i in 0..3 {
            c.observers[i].z1 = euler[i];
        }
        c
    }

    pub fn config(&self) -> &ControllerConfig {
        &self.config
    }

    pub fn observers(&self) -> &[EsoState; 3] {
        &self.observers
    }

    pub fn step(
        &mut self,
        meas_euler: &Vector3<f64>,
        setpoints: &Vector3<f64>,
        thrust_setpoint: f64,
    ) -> Result<ControllerStep, ControllerError> {
        let out = attitude_controller_step(
            meas_euler,
            setpoints,
            thrust_setpoint,
            &self.observers,
            &self.applied,
            &self.config,
        )?;
        self.observers = out.observers;
        self.applied = out.wrench.torque;
        Ok(out)
    }

    /// Overrides the torque fed to the observers on the next cycle, e.g. with
    /// what the allocator could actually deliver.
    pub fn set_applied_torque(&mut self, torque: Vector3<f64>) {
        self.applied = torque;
    }
}
