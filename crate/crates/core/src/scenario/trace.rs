//! Per-step trace records and their CSV form.
//!
//! One row per control period, header required, columns in
//! [`TRACE_COLUMNS`] order. Angles are radians, everything else SI. The
//! `events` column holds `;`-separated markers such as `attach:2:0.045`,
//! `detach:2`, `set_attitude:5:0:0` (degrees), `set_thrust:15.2` and, on the
//! final row of an aborted run, `fault:<kind>:<message>`.

use std::io::{Read, Write};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::actuation::SaturationFlags;
use crate::ladrc::AxisTelemetry;
use crate::params::{ActuatorCommand, RigidBodyState, Wrench};

use super::ScenarioError;

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub time: f64,
    pub state: RigidBodyState,
    /// rad
    pub setpoints: Vector3<f64>,
    /// N
    pub thrust_setpoint: f64,
    pub actuator: ActuatorCommand,
    pub allocation_saturation: SaturationFlags,
    /// Roll, pitch, yaw.
    pub observers: [AxisTelemetry; 3],
    /// Load wrench from carried payloads, body frame.
    pub extra_wrench: Wrench,
    /// Vehicle plus payload mass, kg.
    pub mass_total: f64,
    pub events: Vec<String>,
}

impl TraceRecord {
    /// Attitude error `setpoint - measured` with yaw wrapped to (-π, π].
    pub fn attitude_error(&self) -> Vector3<f64> {
        let mut e = self.setpoints - self.state.euler;
        e.z = wrap_angle(e.z);
        e
    }

    pub fn any_saturation(&self) -> bool {
        self.allocation_saturation.any() || self.observers.iter().any(|o| o.saturated)
    }
}

pub(crate) fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let w = a.rem_euclid(TAU);
    if w > PI {
        w - TAU
    } else {
        w
    }
}

pub const TRACE_COLUMNS: [&str; 53] = [
    "time",
    "pos_n",
    "pos_e",
    "pos_d",
    "vel_n",
    "vel_e",
    "vel_d",
    "roll",
    "pitch",
    "yaw",
    "p",
    "q",
    "r",
    "roll_sp",
    "pitch_sp",
    "yaw_sp",
    "thrust_sp",
    "omega1",
    "omega2",
    "delta1",
    "delta2",
    "delta3",
    "delta4",
    "sat_vane_x",
    "sat_vane_y",
    "sat_motor1",
    "sat_motor2",
    "roll_z1",
    "roll_z2",
    "roll_z3",
    "roll_u0",
    "roll_u",
    "roll_sat",
    "pitch_z1",
    "pitch_z2",
    "pitch_z3",
    "pitch_u0",
    "pitch_u",
    "pitch_sat",
    "yaw_z1",
    "yaw_z2",
    "yaw_z3",
    "yaw_u0",
    "yaw_u",
    "yaw_sat",
    "load_fx",
    "load_fy",
    "load_fz",
    "load_mx",
    "load_my",
    "load_mz",
    "mass_total",
    "events",
];

#[derive(Debug, Serialize, Deserialize)]
struct TraceRow {
    time: f64,
    pos_n: f64,
    pos_e: f64,
    pos_d: f64,
    vel_n: f64,
    vel_e: f64,
    vel_d: f64,
    roll: f64,
    pitch: f64,
    yaw: f64,
    p: f64,
    q: f64,
    r: f64,
    roll_sp: f64,
    pitch_sp: f64,
    yaw_sp: f64,
    thrust_sp: f64,
    omega1: f64,
    omega2: f64,
    delta1: f64,
    delta2: f64,
    delta3: f64,
    delta4: f64,
    sat_vane_x: bool,
    sat_vane_y: bool,
    sat_motor1: bool,
    sat_motor2: bool,
    roll_z1: f64,
    roll_z2: f64,
    roll_z3: f64,
    roll_u0: f64,
    roll_u: f64,
    roll_sat: bool,
    pitch_z1: f64,
    pitch_z2: f64,
    pitch_z3: f64,
    pitch_u0: f64,
    pitch_u: f64,
    pitch_sat: bool,
    yaw_z1: f64,
    yaw_z2: f64,
    yaw_z3: f64,
    yaw_u0: f64,
    yaw_u: f64,
    yaw_sat: bool,
    load_fx: f64,
    load_fy: f64,
    load_fz: f64,
    load_mx: f64,
    load_my: f64,
    load_mz: f64,
    mass_total: f64,
    events: String,
}

fn axis_row(t: &AxisTelemetry) -> (f64, f64, f64, f64, f64, bool) {
    (t.z1, t.z2, t.z3, t.u0, t.u, t.saturated)
}

impl From<&TraceRecord> for TraceRow {
    fn from(r: &TraceRecord) -> Self {
        let s = &r.state;
        let [d1, d2, d3, d4] = r.actuator.delta;
        let (roll_z1, roll_z2, roll_z3, roll_u0, roll_u, roll_sat) = axis_row(&r.observers[0]);
        let (pitch_z1, pitch_z2, pitch_z3, pitch_u0, pitch_u, pitch_sat) = axis_row(&r.observers[1]);
        let (yaw_z1, yaw_z2, yaw_z3, yaw_u0, yaw_u, yaw_sat) = axis_row(&r.observers[2]);
        TraceRow {
            time: r.time,
            pos_n: s.position_ned.x,
            pos_e: s.position_ned.y,
            pos_d: s.position_ned.z,
            vel_n: s.velocity_ned.x,
            vel_e: s.velocity_ned.y,
            vel_d: s.velocity_ned.z,
            roll: s.euler.x,
            pitch: s.euler.y,
            yaw: s.euler.z,
            p: s.body_rates.x,
            q: s.body_rates.y,
            r: s.body_rates.z,
            roll_sp: r.setpoints.x,
            pitch_sp: r.setpoints.y,
            yaw_sp: r.setpoints.z,
            thrust_sp: r.thrust_setpoint,
            omega1: r.actuator.omega1,
            omega2: r.actuator.omega2,
            delta1: d1,
            delta2: d2,
            delta3: d3,
            delta4: d4,
            sat_vane_x: r.allocation_saturation.vane_x,
            sat_vane_y: r.allocation_saturation.vane_y,
            sat_motor1: r.allocation_saturation.motor1,
            sat_motor2: r.allocation_saturation.motor2,
            roll_z1,
            roll_z2,
            roll_z3,
            roll_u0,
            roll_u,
            roll_sat,
            pitch_z1,
            pitch_z2,
            pitch_z3,
            pitch_u0,
            pitch_u,
            pitch_sat,
            yaw_z1,
            yaw_z2,
            yaw_z3,
            yaw_u0,
            yaw_u,
            yaw_sat,
            load_fx: r.extra_wrench.force.x,
            load_fy: r.extra_wrench.force.y,
            load_fz: r.extra_wrench.force.z,
            load_mx: r.extra_wrench.moment.x,
            load_my: r.extra_wrench.moment.y,
            load_mz: r.extra_wrench.moment.z,
            mass_total: r.mass_total,
            events: r.events.join(";"),
        }
    }
}

impl From<TraceRow> for TraceRecord {
    fn from(w: TraceRow) -> Self {
        let axis = |z1, z2, z3, u0, u, saturated| AxisTelemetry {
            z1,
            z2,
            z3,
            u0,
            u,
            saturated,
        };
        TraceRecord {
            time: w.time,
            state: RigidBodyState {
                position_ned: Vector3::new(w.pos_n, w.pos_e, w.pos_d),
                velocity_ned: Vector3::new(w.vel_n, w.vel_e, w.vel_d),
                euler: Vector3::new(w.roll, w.pitch, w.yaw),
                body_rates: Vector3::new(w.p, w.q, w.r),
            },
            setpoints: Vector3::new(w.roll_sp, w.pitch_sp, w.yaw_sp),
            thrust_setpoint: w.thrust_sp,
            actuator: ActuatorCommand {
                omega1: w.omega1,
                omega2: w.omega2,
                delta: [w.delta1, w.delta2, w.delta3, w.delta4],
            },
            allocation_saturation: SaturationFlags {
                vane_x: w.sat_vane_x,
                vane_y: w.sat_vane_y,
                motor1: w.sat_motor1,
                motor2: w.sat_motor2,
            },
            observers: [
                axis(w.roll_z1, w.roll_z2, w.roll_z3, w.roll_u0, w.roll_u, w.roll_sat),
                axis(
                    w.pitch_z1,
                    w.pitch_z2,
                    w.pitch_z3,
                    w.pitch_u0,
                    w.pitch_u,
                    w.pitch_sat,
                ),
                axis(w.yaw_z1, w.yaw_z2, w.yaw_z3, w.yaw_u0, w.yaw_u, w.yaw_sat),
            ],
            extra_wrench: Wrench {
                force: Vector3::new(w.load_fx, w.load_fy, w.load_fz),
                moment: Vector3::new(w.load_mx, w.load_my, w.load_mz),
            },
            mass_total: w.mass_total,
            events: if w.events.is_empty() {
                Vec::new()
            } else {
                w.events.split(';').map(str::to_string).collect()
            },
        }
    }
}

pub fn write_trace_csv<W: Write>(writer: W, trace: &[TraceRecord]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    if trace.is_empty() {
        w.write_record(TRACE_COLUMNS)?;
    }
    for r in trace {
        w.serialize(TraceRow::from(r))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace_csv<R: Read>(reader: R) -> Result<Vec<TraceRecord>, ScenarioError> {
    let mut r = csv::Reader::from_reader(reader);
    let header = r
        .headers()
        .map_err(|e| ScenarioError::Parse(e.to_string()))?
        .clone();
    if header.iter().ne(TRACE_COLUMNS.iter().copied()) {
        return Err(ScenarioError::Parse(format!(
            "trace header must be: {}",
            TRACE_COLUMNS.join(",")
        )));
    }
    r.deserialize::<TraceRow>()
        .map(|row| {
            row.map(TraceRecord::from)
                .map_err(|e| ScenarioError::Parse(e.to_string()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_matches_row_layout() {
        let mut buf = Vec::new();
        write_trace_csv(&mut buf, &[]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.trim_end(), TRACE_COLUMNS.join(","));

        let rec = TraceRecord {
            time: 0.0,
            state: RigidBodyState::default(),
            setpoints: Vector3::zeros(),
            thrust_setpoint: 0.0,
            actuator: ActuatorCommand::default(),
            allocation_saturation: SaturationFlags::default(),
            observers: [AxisTelemetry::default(); 3],
            extra_wrench: Wrench::zero(),
            mass_total: 1.59,
            events: vec![],
        };
        let mut buf = Vec::new();
        write_trace_csv(&mut buf, &[rec]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), TRACE_COLUMNS.join(","));
    }

    #[test]
    fn wrap() {
        use std::f64::consts::PI;
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
        assert!((wrap_angle(-3.0 * PI / 2.0) - PI / 2.0).abs() < 1e-12);
        assert_eq!(wrap_angle(0.25), 0.25);
    }

    #[test]
    fn wrong_header_rejected() {
        assert!(read_trace_csv("time,x\n0,1\n".as_bytes()).is_err());
    }
}
