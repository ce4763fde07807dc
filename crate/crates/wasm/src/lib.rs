//! Browser bindings for the interactive demo page in `www/`.
//!
//! Every exported function takes plain numbers or TOML text and returns a
//! JSON string; errors come back as JS exceptions carrying the message.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use ductfan::ladrc::{eso_step, EsoGains, EsoState, DEFAULT_DIVERGENCE_BOUND};
use ductfan::params::VehicleParams;
use ductfan::payload::{attachment_stability, AttachGeometry, StabilityOutcome};
use ductfan::scenario::{parse_scenario, run_scenario, summarize_trace, Summary};

/// Upper bound on rows returned to the page by `simulate`.
const MAX_PLOT_POINTS: usize = 2000;

#[derive(Serialize)]
struct StabilityMap {
    magnet_forces: Vec<f64>,
    masses: Vec<f64>,
    /// Row per mass, column per magnet force: 0 stable, 1 separation at A,
    /// 2 vertical slip.
    outcomes: Vec<Vec<u8>>,
}

pub fn stability_map_json(
    friction_coeff: f64,
    max_magnet_force: f64,
    max_mass: f64,
    resolution: usize,
) -> Result<String, String> {
    if !(2..=200).contains(&resolution) {
        return Err("resolution must be between 2 and 200".into());
    }
    let axis = |max: f64| -> Vec<f64> {
        (0..resolution)
            .map(|i| max * i as f64 / (resolution - 1) as f64)
            .collect()
    };
    let magnet_forces = axis(max_magnet_force);
    let masses = axis(max_mass);
    let template = AttachGeometry::default().attachment(0, 0.0);
    let g = VehicleParams::default().gravity;

    let mut outcomes = Vec::with_capacity(resolution);
    for &mass in &masses {
        let mut row = Vec::with_capacity(resolution);
        for &force in &magnet_forces {
            let p = ductfan::PayloadAttachment {
                mass,
                magnet_force_a: force,
                magnet_force_b: force,
                friction_coeff,
                ..template
            };
            let v = attachment_stability(&p, 0.5, g).map_err(|e| e.to_string())?;
            row.push(match v.outcome {
                StabilityOutcome::Stable => 0,
                StabilityOutcome::SeparationAtA => 1,
                StabilityOutcome::VerticalSlip => 2,
            });
        }
        outcomes.push(row);
    }
    serde_json::to_string(&StabilityMap {
        magnet_forces,
        masses,
        outcomes,
    })
    .map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct SimulationSeries {
    time: Vec<f64>,
    /// Degrees.
    roll: Vec<f64>,
    pitch: Vec<f64>,
    yaw: Vec<f64>,
    roll_sp: Vec<f64>,
    pitch_sp: Vec<f64>,
    yaw_sp: Vec<f64>,
    /// Differential vane deflections `δ3 - δ1` and `δ4 - δ2`.
    vane_x: Vec<f64>,
    vane_y: Vec<f64>,
    events: Vec<(f64, String)>,
    summary: Summary,
}

pub fn simulate_json(scenario_toml: &str) -> Result<String, String> {
    let scenario = parse_scenario(scenario_toml).map_err(|e| e.to_string())?;
    let run = run_scenario(&scenario);
    let summary = Summary {
        attachments: run.attachments.clone(),
        ..summarize_trace(&run.trace)
    };
    let stride = run.trace.len().div_ceil(MAX_PLOT_POINTS).max(1);

    let mut s = SimulationSeries {
        time: Vec::new(),
        roll: Vec::new(),
        pitch: Vec::new(),
        yaw: Vec::new(),
        roll_sp: Vec::new(),
        pitch_sp: Vec::new(),
        yaw_sp: Vec::new(),
        vane_x: Vec::new(),
        vane_y: Vec::new(),
        events: Vec::new(),
        summary,
    };
    for (i, r) in run.trace.iter().enumerate() {
        for m in &r.events {
            s.events.push((r.time, m.clone()));
        }
        if i % stride != 0 && i + 1 != run.trace.len() {
            continue;
        }
        let e = r.state.euler.map(f64::to_degrees);
        let sp = r.setpoints.map(f64::to_degrees);
        s.time.push(r.time);
        s.roll.push(e.x);
        s.pitch.push(e.y);
        s.yaw.push(e.z);
        s.roll_sp.push(sp.x);
        s.pitch_sp.push(sp.y);
        s.yaw_sp.push(sp.z);
        s.vane_x.push(r.actuator.delta[2] - r.actuator.delta[0]);
        s.vane_y.push(r.actuator.delta[3] - r.actuator.delta[1]);
    }
    serde_json::to_string(&s).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct EsoResponse {
    time: Vec<f64>,
    disturbance: Vec<f64>,
    estimate: Vec<f64>,
    angle: Vec<f64>,
}

/// Closed-loop double integrator hit by a disturbance step at 0.1 s, with
/// the default PD gains and the observer at `omega_obs`.
pub fn eso_response_json(omega_obs: f64, disturbance: f64, duration: f64) -> Result<String, String> {
    let dt = VehicleParams::default().control_period;
    let b0 = 1.0 / VehicleParams::default().inertia_diag.x;
    let gains = EsoGains::from_bandwidth(omega_obs, b0).map_err(|e| e.to_string())?;
    if !(duration > 0.0 && duration <= 60.0) {
        return Err("duration must be in (0, 60] s".into());
    }
    let steps = (duration / dt).round() as usize;
    let (mut x, mut v, mut u) = (0.0f64, 0.0f64, 0.0f64);
    let mut z = EsoState::default();
    let mut out = EsoResponse {
        time: Vec::with_capacity(steps),
        disturbance: Vec::with_capacity(steps),
        estimate: Vec::with_capacity(steps),
        angle: Vec::with_capacity(steps),
    };
    for k in 0..steps {
        let t = k as f64 * dt;
        let f = if t >= 0.1 { disturbance } else { 0.0 };
        z = eso_step(&z, x, u, &gains, dt, DEFAULT_DIVERGENCE_BOUND).map_err(|e| e.to_string())?;
        u = (100.0 * -z.z1 - 20.0 * z.z2 - z.z3) / b0;
        let acc = b0 * u + f;
        x += v * dt + 0.5 * acc * dt * dt;
        v += acc * dt;
        out.time.push(t);
        out.disturbance.push(f);
        out.estimate.push(z.z3);
        out.angle.push(x.to_degrees());
    }
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn stability_map(
    friction_coeff: f64,
    max_magnet_force: f64,
    max_mass: f64,
    resolution: usize,
) -> Result<String, JsError> {
    stability_map_json(friction_coeff, max_magnet_force, max_mass, resolution).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn simulate(scenario_toml: &str) -> Result<String, JsError> {
    simulate_json(scenario_toml).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn eso_response(omega_obs: f64, disturbance: f64, duration: f64) -> Result<String, JsError> {
    eso_response_json(omega_obs, disturbance, duration).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    #[test]
    fn map_has_requested_shape() {
        let v: Value = serde_json::from_str(&stability_map_json(0.4, 3.0, 0.2, 11).unwrap()).unwrap();
        let rows = v["outcomes"].as_array().unwrap();
        assert_eq!(rows.len(), 11);
        assert!(rows.iter().all(|r| r.as_array().unwrap().len() == 11));
        // zero mass with any magnet pull holds
        assert_eq!(rows[0][10], 0);
        // heavy load on no magnets does not
        assert_ne!(rows[10][0], 0);
    }

    #[test]
    fn map_rejects_bad_resolution() {
        assert!(stability_map_json(0.4, 3.0, 0.2, 1).is_err());
    }

    #[test]
    fn simulate_returns_series_and_summary() {
        let text =
            "[simulation]\nduration = 2.0\n[[events]]\ntime = 0.5\nset_attitude_deg = [5.0, 0.0, 0.0]\n";
        let v: Value = serde_json::from_str(&simulate_json(text).unwrap()).unwrap();
        let n = v["time"].as_array().unwrap().len();
        assert_eq!(n, 401);
        assert_eq!(v["roll"].as_array().unwrap().len(), n);
        assert_eq!(v["events"][0][1], "set_attitude:5:0:0");
        assert_eq!(v["summary"]["stable"], true);
    }

    #[test]
    fn long_runs_are_decimated() {
        let v: Value =
            serde_json::from_str(&simulate_json("[simulation]\nduration = 30.0\n").unwrap()).unwrap();
        assert!(v["time"].as_array().unwrap().len() <= MAX_PLOT_POINTS + 1);
        assert_eq!(
            v["time"].as_array().unwrap().last().unwrap().as_f64().unwrap(),
            30.0
        );
    }

    #[test]
    fn simulate_reports_parse_errors() {
        let err = simulate_json("[simulation]\nbogus = 1\n").unwrap_err();
        assert!(err.contains("bogus"), "{err}");
    }

    #[test]
    fn eso_estimate_converges() {
        let v: Value = serde_json::from_str(&eso_response_json(50.0, 1.0, 1.5).unwrap()).unwrap();
        let est = v["estimate"]
            .as_array()
            .unwrap()
            .last()
            .unwrap()
            .as_f64()
            .unwrap();
        assert!((est - 1.0).abs() < 0.05);
        assert!(eso_response_json(100.0, 1.0, 1.0).is_err());
    }
}
