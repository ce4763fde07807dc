//! Per-stage tracking statistics.
//!
//! A new stage starts at every payload attach or detach marker, so a flight
//! with four attachments has stages I to V. The summary is serialized as
//! JSON; `schema_version` changes whenever a field changes meaning.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::runner::AttachmentReport;
use super::trace::TraceRecord;

pub const SUMMARY_SCHEMA_VERSION: u32 = 1;
/// Attitude band, degrees, that defines recovery after an event.
pub const RECOVERY_BAND_DEG: f64 = 2.0;
/// Length of the end-of-stage window used for the steady-state error, s.
pub const STEADY_WINDOW_S: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageSummary {
    /// Roman numeral, starting at I.
    pub label: String,
    /// Marker that opened the stage, or `start`.
    pub trigger: String,
    pub start_index: usize,
    /// Exclusive.
    pub end_index: usize,
    pub start_time: f64,
    pub end_time: f64,
    pub rms_error_deg: [f64; 3],
    pub max_error_deg: [f64; 3],
    /// Max absolute error over the last second of the stage.
    pub steady_state_error_deg: [f64; 3],
    /// Time after the stage start until the attitude stays inside the
    /// recovery band. Measured up to the first setpoint change or the stage
    /// end; `None` if the band is not regained in that window.
    pub recovery_time_s: Option<f64>,
    /// Fraction of steps with any controller or allocator saturation.
    pub saturation_duty: f64,
    /// Observer total-disturbance estimates at the end of the stage, rad/s².
    pub final_disturbance_estimate: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultSummary {
    pub time: f64,
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: u32,
    pub steps: usize,
    pub start_time: f64,
    pub end_time: f64,
    pub fault: Option<FaultSummary>,
    /// No fault, every stage recovered, and the final steady-state error is
    /// inside the recovery band.
    pub stable: bool,
    pub stages_completed: usize,
    pub stages: Vec<StageSummary>,
    /// Static attachment checks; only filled by a simulation run.
    #[serde(default)]
    pub attachments: Vec<AttachmentReport>,
}

fn roman(mut n: usize) -> String {
    const TABLE: [(usize, &str); 9] = [
        (100, "C"),
        (90, "XC"),
        (50, "L"),
        (40, "XL"),
        (10, "X"),
        (9, "IX"),
        (5, "V"),
        (4, "IV"),
        (1, "I"),
    ];
    let mut out = String::new();
    for (value, sym) in TABLE {
        while n >= value {
            out.push_str(sym);
            n -= value;
        }
    }
    out
}

fn is_stage_marker(m: &str) -> bool {
    m.starts_with("attach:") || m.starts_with("detach:")
}

fn stage_bounds(trace: &[TraceRecord]) -> Vec<(usize, usize, String)> {
    let mut starts = vec![(0usize, "start".to_string())];
    for (i, r) in trace.iter().enumerate() {
        let markers: Vec<&String> = r.events.iter().filter(|m| is_stage_marker(m)).collect();
        if markers.is_empty() {
            continue;
        }
        let trigger = markers.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(";");
        if i == 0 {
            starts[0].1 = trigger;
        } else {
            starts.push((i, trigger));
        }
    }
    let mut out = Vec::with_capacity(starts.len());
    for (j, (start, trigger)) in starts.iter().enumerate() {
        let end = starts.get(j + 1).map(|s| s.0).unwrap_or(trace.len());
        out.push((*start, end, trigger.clone()));
    }
    out
}

fn parse_fault(trace: &[TraceRecord]) -> Option<FaultSummary> {
    let last = trace.last()?;
    last.events.iter().find_map(|m| {
        let rest = m.strip_prefix("fault:")?;
        let (kind, message) = rest.split_once(':').unwrap_or((rest, ""));
        Some(FaultSummary {
            time: last.time,
            kind: kind.to_string(),
            message: message.to_string(),
        })
    })
}

fn summarize_stage(
    trace: &[TraceRecord],
    start: usize,
    end: usize,
    label: String,
    trigger: String,
) -> StageSummary {
    let stage = &trace[start..end];
    let errors: Vec<Vector3<f64>> = stage
        .iter()
        .map(|r| r.attitude_error().map(f64::to_degrees))
        .collect();
    let n = stage.len() as f64;

    let mut rms = [0.0; 3];
    let mut max = [0.0f64; 3];
    for e in &errors {
        for i in 0..3 {
            rms[i] += e[i] * e[i];
            max[i] = max[i].max(e[i].abs());
        }
    }
    for v in &mut rms {
        *v = (*v / n).sqrt();
    }

    let end_time = stage.last().map(|r| r.time).unwrap_or(0.0);
    let start_time = stage[0].time;
    let mut steady = [0.0f64; 3];
    for (r, e) in stage.iter().zip(&errors) {
        if r.time >= end_time - STEADY_WINDOW_S - 1e-9 {
            for i in 0..3 {
                steady[i] = steady[i].max(e[i].abs());
            }
        }
    }

    // recovery window ends at the first setpoint change after the stage opens
    let window_end = stage
        .iter()
        .enumerate()
        .skip(1)
        .find(|(_, r)| r.events.iter().any(|m| m.starts_with("set_attitude:")))
        .map(|(i, _)| i)
        .unwrap_or(stage.len());
    let outside = |e: &Vector3<f64>| e.amax() > RECOVERY_BAND_DEG;
    let last_out = errors[..window_end].iter().rposition(outside);
    let recovery_time_s = match last_out {
        None => Some(0.0),
        Some(i) if i + 1 < window_end => Some(stage[i + 1].time - start_time),
        Some(_) => None,
    };

    let saturated = stage.iter().filter(|r| r.any_saturation()).count();
    let last = stage.last().expect("non-empty stage");

    StageSummary {
        label,
        trigger,
        start_index: start,
        end_index: end,
        start_time,
        end_time,
        rms_error_deg: rms,
        max_error_deg: max,
        steady_state_error_deg: steady,
        recovery_time_s,
        saturation_duty: saturated as f64 / n,
        final_disturbance_estimate: [last.observers[0].z3, last.observers[1].z3, last.observers[2].z3],
    }
}

/// Splits a trace into stages at payload events and reports tracking
/// statistics for each. A trailing `fault:` marker is surfaced as the fault.
pub fn summarize_trace(trace: &[TraceRecord]) -> Summary {
    let fault = parse_fault(trace);
    if trace.is_empty() {
        return Summary {
            schema_version: SUMMARY_SCHEMA_VERSION,
            steps: 0,
            start_time: 0.0,
            end_time: 0.0,
            fault,
            stable: false,
            stages_completed: 0,
            stages: Vec::new(),
            attachments: Vec::new(),
        };
    }
    let stages: Vec<StageSummary> = stage_bounds(trace)
        .into_iter()
        .enumerate()
        .map(|(j, (start, end, trigger))| summarize_stage(trace, start, end, roman(j + 1), trigger))
        .collect();

    let stages_completed = if fault.is_some() {
        stages.len() - 1
    } else {
        stages.len()
    };
    let final_ok = stages
        .last()
        .map(|s| s.steady_state_error_deg.iter().all(|&e| e < RECOVERY_BAND_DEG))
        .unwrap_or(false);
    let stable = fault.is_none() && final_ok && stages.iter().all(|s| s.recovery_time_s.is_some());

    Summary {
        schema_version: SUMMARY_SCHEMA_VERSION,
        steps: trace.len(),
        start_time: trace[0].time,
        end_time: trace[trace.len() - 1].time,
        fault,
        stable,
        stages_completed,
        stages,
        attachments: Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actuation::SaturationFlags;
    use crate::ladrc::AxisTelemetry;
    use crate::params::{ActuatorCommand, RigidBodyState, Wrench};

    fn record(k: usize, roll_deg: f64, events: &[&str]) -> TraceRecord {
        TraceRecord {
            time: k as f64 * 0.005,
            state: RigidBodyState {
                euler: Vector3::new(roll_deg.to_radians(), 0.0, 0.0),
                ..Default::default()
            },
            setpoints: Vector3::zeros(),
            thrust_setpoint: 15.6,
            actuator: ActuatorCommand::default(),
            allocation_saturation: SaturationFlags::default(),
            observers: [AxisTelemetry::default(); 3],
            extra_wrench: Wrench::zero(),
            mass_total: 1.59,
            events: events.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn perfect_tracking_is_zero() {
        let trace: Vec<_> = (0..400).map(|k| record(k, 0.0, &[])).collect();
        let s = summarize_trace(&trace);
        assert_eq!(s.stages.len(), 1);
        assert_eq!(s.stages[0].rms_error_deg, [0.0; 3]);
        assert_eq!(s.stages[0].recovery_time_s, Some(0.0));
        assert!(s.stable);
        assert!(s.fault.is_none());
    }

    #[test]
    fn stages_tile_the_trace() {
        let trace: Vec<_> = (0..1000)
            .map(|k| match k {
                200 => record(k, 0.0, &["attach:0:0.025"]),
                500 => record(k, 0.0, &["set_attitude:5:0:0"]),
                700 => record(k, 0.0, &["detach:0"]),
                _ => record(k, 0.0, &[]),
            })
            .collect();
        let s = summarize_trace(&trace);
        let labels: Vec<_> = s.stages.iter().map(|s| s.label.as_str()).collect();
        assert_eq!(labels, ["I", "II", "III"]);
        assert_eq!(s.stages[0].start_index, 0);
        for w in s.stages.windows(2) {
            assert_eq!(w[0].end_index, w[1].start_index);
        }
        assert_eq!(s.stages.last().unwrap().end_index, trace.len());
        assert_eq!(s.stages[1].trigger, "attach:0:0.025");
    }

    #[test]
    fn recovery_time_measures_return_to_band() {
        // 3° error for 100 steps after the attach, then back on setpoint
        let trace: Vec<_> = (0..600)
            .map(|k| {
                let ev: &[&str] = if k == 100 { &["attach:1:0.05"] } else { &[] };
                let roll = if (100..200).contains(&k) { 3.0 } else { 0.0 };
                record(k, roll, ev)
            })
            .collect();
        let s = summarize_trace(&trace);
        let rec = s.stages[1].recovery_time_s.unwrap();
        assert!((rec - 0.5).abs() < 1e-12, "{rec}");
        assert!((s.stages[1].max_error_deg[0] - 3.0).abs() < 1e-12);
        assert!(s.stable);
    }

    #[test]
    fn unrecovered_stage_is_unstable() {
        let trace: Vec<_> = (0..400)
            .map(|k| {
                record(
                    k,
                    if k > 100 { 5.0 } else { 0.0 },
                    if k == 50 { &["attach:0:0.2"] } else { &[] },
                )
            })
            .collect();
        let s = summarize_trace(&trace);
        assert_eq!(s.stages[1].recovery_time_s, None);
        assert!(!s.stable);
    }

    #[test]
    fn fault_is_flagged() {
        let mut trace: Vec<_> = (0..300)
            .map(|k| record(k, 0.0, if k == 100 { &["attach:0:0.02"] } else { &[] }))
            .collect();
        trace.push(record(300, 0.0, &["fault:singularity:pitch at guard"]));
        let s = summarize_trace(&trace);
        let f = s.fault.unwrap();
        assert_eq!(f.kind, "singularity");
        assert_eq!(f.message, "pitch at guard");
        assert!(!s.stable);
        assert_eq!(s.stages_completed, 1);
    }

    #[test]
    fn roman_numerals() {
        assert_eq!(roman(1), "I");
        assert_eq!(roman(4), "IV");
        assert_eq!(roman(5), "V");
        assert_eq!(roman(14), "XIV");
    }
}
