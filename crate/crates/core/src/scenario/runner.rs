use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::config::ThrustMode;
use super::trace::TraceRecord;
use super::{EventKind, Scenario};
use crate::actuation::allocate;
use crate::dynamics::rk4_step;
use crate::ladrc::AttitudeController;
use crate::params::{RigidBodyState, VehicleParams, Wrench};
use crate::payload::{
    attachment_stability, load_disturbance_wrench, trim_deflection, PayloadAttachment, StabilityVerdict,
    TrimDeflection,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaultKind {
    Singularity,
    ObserverDivergence,
    AllocationInfeasible,
    NonFinite,
}

impl FaultKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FaultKind::Singularity => "singularity",
            FaultKind::ObserverDivergence => "observer_divergence",
            FaultKind::AllocationInfeasible => "allocation_infeasible",
            FaultKind::NonFinite => "non_finite",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultRecord {
    pub time: f64,
    pub kind: FaultKind,
    pub message: String,
}

impl FaultRecord {
    pub fn marker(&self) -> String {
        format!("fault:{}:{}", self.kind.as_str(), self.message.replace(';', ","))
    }
}

/// Static check of a payload at the moment it is attached.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttachmentReport {
    pub time: f64,
    pub attach_point: usize,
    pub mass: f64,
    pub verdict: StabilityVerdict,
    pub trim: TrimDeflection,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioRun {
    pub trace: Vec<TraceRecord>,
    /// At most one entry; a fault ends the run.
    pub faults: Vec<FaultRecord>,
    pub attachments: Vec<AttachmentReport>,
}

/// Airframe as seen by the dynamics with payloads on board: summed mass and
/// point-mass contributions to the inertia diagonal.
fn loaded_params(base: &VehicleParams, payloads: &[PayloadAttachment]) -> VehicleParams {
    let mut p = *base;
    p.mass_total = base.mass_total + payloads.iter().map(|a| a.mass).sum::<f64>();
    for a in payloads {
        let r = a.body_position;
        p.inertia_diag += a.mass
            * Vector3::new(
                r.y * r.y + r.z * r.z,
                r.x * r.x + r.z * r.z,
                r.x * r.x + r.y * r.y,
            );
    }
    p
}

/// Runs the closed loop at the control period until the configured end time
/// or the first fault.
///
/// Each cycle applies due events, measures the attitude, runs the attitude
/// controller, allocates, evaluates the payload load and advances the rigid
/// body one RK4 step with the command held. Payload weight acts through the
/// loaded mass, so only the load moment is passed to the dynamics as an
/// external wrench; the trace records the full load wrench.
pub fn run_scenario(scenario: &Scenario) -> ScenarioRun {
    let base = scenario.params;
    let settings = &scenario.settings;
    let dt = base.control_period;
    let steps = (settings.duration / dt).round() as usize;

    let initial_euler = Vector3::from(settings.initial_euler_deg).map(f64::to_radians);
    let mut setpoints = settings
        .initial_setpoint_deg
        .map(|d| Vector3::from(d).map(f64::to_radians))
        .unwrap_or(initial_euler);
    let mut thrust_mode = settings.thrust_mode;
    let mut fixed_thrust = settings.fixed_thrust.unwrap_or(0.0);

    let mut state = RigidBodyState {
        euler: initial_euler,
        ..Default::default()
    };
    let mut controller = AttitudeController::converged_at(scenario.controller, &initial_euler);
    let mut payloads: Vec<PayloadAttachment> = Vec::new();

    let noise_std = settings.measurement_noise_deg.to_radians();
    let noise = (noise_std > 0.0).then(|| Normal::new(0.0, noise_std).expect("validated noise"));
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);

    let mut run = ScenarioRun {
        trace: Vec::with_capacity(steps + 1),
        faults: Vec::new(),
        attachments: Vec::new(),
    };
    let mut next_event = 0;

    for k in 0..=steps {
        let time = k as f64 * dt;
        let mut markers = Vec::new();
        while next_event < scenario.events.len() && scenario.events[next_event].time <= time + 1e-9 {
            let event = &scenario.events[next_event];
            markers.push(event.marker());
            match event.kind {
                EventKind::SetAttitude(sp) => setpoints = sp,
                EventKind::SetThrust(t) => {
                    thrust_mode = ThrustMode::Fixed;
                    fixed_thrust = t;
                }
                EventKind::AttachPayload(p) => {
                    let verdict = attachment_stability(&p, settings.load_share, base.gravity)
                        .expect("validated attachment");
                    run.attachments.push(AttachmentReport {
                        time,
                        attach_point: p.attach_point,
                        mass: p.mass,
                        verdict,
                        trim: trim_deflection(&p, &base),
                    });
                    payloads.push(p);
                }
                EventKind::DetachPayload(point) => payloads.retain(|p| p.attach_point != point),
            }
            next_event += 1;
        }

        let params = loaded_params(&base, &payloads);
        let mut measured = state.euler;
        if let Some(n) = &noise {
            for i in 0..3 {
                measured[i] += n.sample(&mut rng);
            }
        }
        let thrust = match thrust_mode {
            ThrustMode::Weight => params.weight(),
            ThrustMode::Fixed => fixed_thrust,
        };

        let fault = |kind, message: String| FaultRecord { time, kind, message };

        let control = match controller.step(&measured, &setpoints, thrust) {
            Ok(c) => c,
            Err(e) => {
                finish(
                    &mut run,
                    fault(FaultKind::ObserverDivergence, e.to_string()),
                    markers,
                );
                break;
            }
        };
        let allocation = match allocate(&control.wrench, &params) {
            Ok(a) => a,
            Err(e) => {
                finish(
                    &mut run,
                    fault(FaultKind::AllocationInfeasible, e.to_string()),
                    markers,
                );
                break;
            }
        };
        controller.set_applied_torque(allocation.achieved.torque);

        let load = load_disturbance_wrench(&payloads, &state.euler, base.gravity);
        run.trace.push(TraceRecord {
            time,
            state,
            setpoints,
            thrust_setpoint: thrust,
            actuator: allocation.command,
            allocation_saturation: allocation.saturation,
            observers: control.telemetry,
            extra_wrench: load,
            mass_total: params.mass_total,
            events: markers,
        });
        if k == steps {
            break;
        }

        let extra = Wrench {
            force: Vector3::zeros(),
            moment: load.moment,
        };
        match rk4_step(&state, &allocation.command, &extra, &params, dt) {
            Ok(next) if next.is_finite() => state = next,
            Ok(_) => {
                finish(
                    &mut run,
                    fault(FaultKind::NonFinite, "state became non-finite".into()),
                    vec![],
                );
                break;
            }
            Err(e) => {
                finish(&mut run, fault(FaultKind::Singularity, e.to_string()), vec![]);
                break;
            }
        }
    }
    run
}

fn finish(run: &mut ScenarioRun, fault: FaultRecord, pending: Vec<String>) {
    let marker = fault.marker();
    if let Some(last) = run.trace.last_mut() {
        last.events.extend(pending);
        last.events.push(marker);
    }
    run.faults.push(fault);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::parse_scenario;

    #[test]
    fn trace_time_is_exact_multiple_of_period() {
        let s = parse_scenario("[simulation]\nduration = 0.5\n").unwrap();
        let run = run_scenario(&s);
        assert_eq!(run.trace.len(), 101);
        for (k, r) in run.trace.iter().enumerate() {
            assert_eq!(r.time, k as f64 * 0.005);
        }
    }

    #[test]
    fn loaded_mass_tracks_payloads() {
        let base = VehicleParams::default();
        let g = crate::payload::AttachGeometry::default();
        let loads = [g.attachment(0, 0.025), g.attachment(2, 0.035)];
        let p = loaded_params(&base, &loads);
        assert_eq!(p.mass_total, base.mass_total + [0.025, 0.035].iter().sum::<f64>());
        assert!(p.inertia_diag.x > base.inertia_diag.x);
        assert_eq!(loaded_params(&base, &[]), base);
    }
}
