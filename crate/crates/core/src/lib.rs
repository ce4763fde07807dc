//! Simulation and attitude-control stack for a coaxial ducted-fan UAV that
//! carries payloads on externally mounted electromagnets.
//!
//! - [`params`]: airframe constants and shared value types
//! - [`actuation`]: rotor and vane models, control allocation
//! - [`dynamics`]: 6-DOF rigid body and RK4 integration
//! - [`ladrc`]: extended state observer and attitude controller
//! - [`payload`]: attachment statics and load wrench
//! - [`sysid`]: bench data generation and coefficient fitting
//! - [`scenario`]: scripted closed-loop runs, traces and summaries

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod actuation;
pub mod dynamics;
pub mod ladrc;
pub mod params;
pub mod payload;
pub mod scenario;
pub mod sysid;

pub use actuation::{allocate, propeller_wrench, vane_moment, Allocation, AllocationError, DesiredWrench};
pub use dynamics::{rk4_step, state_derivative, DynamicsError, StateDerivative};
pub use ladrc::{AttitudeController, ControllerConfig, EsoGains, EsoState};
pub use params::{validate_params, ActuatorCommand, ParamError, RigidBodyState, VehicleParams, Wrench};
pub use payload::{PayloadAttachment, StabilityOutcome, StabilityVerdict};
pub use scenario::{parse_scenario, run_scenario, summarize_trace, Scenario, ScenarioError, TraceRecord};
