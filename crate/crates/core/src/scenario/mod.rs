//! Scripted closed-loop flights: configuration, the fixed-step runner, CSV
//! traces and per-stage summaries.

mod config;
mod runner;
mod summary;
mod trace;

pub use config::{
    parse_scenario, AttachSpec, AxisSpec, ControllerSpec, EventSpec, ScenarioFile, SimulationSettings,
    ThrustMode,
};
pub use runner::{run_scenario, AttachmentReport, FaultKind, FaultRecord, ScenarioRun};
pub use summary::{summarize_trace, StageSummary, Summary, RECOVERY_BAND_DEG, SUMMARY_SCHEMA_VERSION};
pub use trace::{read_trace_csv, write_trace_csv, TraceRecord, TRACE_COLUMNS};

use nalgebra::Vector3;
use thiserror::Error;

use crate::ladrc::ControllerConfig;
use crate::params::{ParamError, VehicleParams};
use crate::payload::{AttachGeometry, PayloadAttachment};

#[derive(Debug, Clone, PartialEq)]
pub enum EventKind {
    /// Roll, pitch, yaw setpoints in rad.
    SetAttitude(Vector3<f64>),
    /// Switches to fixed thrust at this value, N.
    SetThrust(f64),
    AttachPayload(PayloadAttachment),
    DetachPayload(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioEvent {
    /// s
    pub time: f64,
    pub kind: EventKind,
}

impl ScenarioEvent {
    /// Marker written to the trace `events` column.
    pub fn marker(&self) -> String {
        match &self.kind {
            EventKind::SetAttitude(e) => format!(
                "set_attitude:{}:{}:{}",
                e.x.to_degrees(),
                e.y.to_degrees(),
                e.z.to_degrees()
            ),
            EventKind::SetThrust(t) => format!("set_thrust:{t}"),
            EventKind::AttachPayload(p) => format!("attach:{}:{}", p.attach_point, p.mass),
            EventKind::DetachPayload(i) => format!("detach:{i}"),
        }
    }
}

/// A fully validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub params: VehicleParams,
    pub controller: ControllerConfig,
    pub settings: SimulationSettings,
    pub geometry: AttachGeometry,
    /// Sorted by time; ties keep file order.
    pub events: Vec<ScenarioEvent>,
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("scenario parse error: {0}")]
    Parse(String),
    #[error("{0}")]
    Params(#[from] ParamError),
    #[error("invalid `{key}`: {message}")]
    Validation { key: String, message: String },
}

impl ScenarioError {
    pub(crate) fn invalid(key: impl Into<String>, message: impl Into<String>) -> Self {
        ScenarioError::Validation {
            key: key.into(),
            message: message.into(),
        }
    }
}
