//! Electromagnet payload attachment: two-contact statics, the vane trim a
//! hanging load consumes, and the wrench a carried load applies to the
//! airframe.
//!
//! Contact A is the one that loosens first. With B as the pivot, the load's
//! gravity moment `G_p·l_p` unloads A and presses B, so the normal support
//! forces are `F_s_a = F_e_a - G_p·l_p/l_e` and `F_s_b = F_e_b + G_p·l_p/l_e`.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::gravity_body;
use crate::params::{VehicleParams, Wrench};

pub const DEFAULT_LOAD_SHARE: f64 = 0.5;
pub const DEFAULT_MAGNET_FORCE: f64 = 1.0;
pub const DEFAULT_FRICTION: f64 = 0.4;
pub const DEFAULT_CONTACT_SPAN: f64 = 0.03;
pub const DEFAULT_GRAVITY_ARM: f64 = 0.015;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum PayloadError {
    #[error("load share must lie strictly between 0 and 1, got {0}")]
    LoadShare(f64),
    #[error("moment arm must be positive, got {0}")]
    Arm(f64),
    #[error("invalid attachment: {0}")]
    Invalid(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PayloadAttachment {
    /// kg
    pub mass: f64,
    pub attach_point: usize,
    /// Effective magnet pull at contact A, N.
    pub magnet_force_a: f64,
    /// Effective magnet pull at contact B, N.
    pub magnet_force_b: f64,
    /// Static friction coefficient of the contact surface.
    pub friction_coeff: f64,
    /// Distance between contacts A and B (`l_e`), m.
    pub contact_span: f64,
    /// Arm of the load's weight about contact B (`l_p`), m.
    pub gravity_arm: f64,
    /// Distance from the contacts to the body z axis (`l_3`), m.
    pub axis_offset: f64,
    /// Load centre of mass in the body frame, m.
    pub body_position: Vector3<f64>,
}

impl PayloadAttachment {
    pub fn validate(self) -> Result<Self, PayloadError> {
        if !(self.mass >= 0.0) {
            return Err(PayloadError::Invalid("mass must be non-negative"));
        }
        if !(self.friction_coeff > 0.0) {
            return Err(PayloadError::Invalid("friction_coeff must be positive"));
        }
        if !(self.contact_span > 0.0) {
            return Err(PayloadError::Invalid("contact_span must be positive"));
        }
        if !(self.magnet_force_a >= 0.0 && self.magnet_force_b >= 0.0) {
            return Err(PayloadError::Invalid("magnet forces must be non-negative"));
        }
        if !self.body_position.iter().all(|x| x.is_finite()) {
            return Err(PayloadError::Invalid("body_position must be finite"));
        }
        Ok(self)
    }

    /// Moment arm of the load about the body z axis, `l_p + l_3`.
    pub fn trim_arm(&self) -> f64 {
        self.gravity_arm + self.axis_offset
    }
}

/// Evenly spaced attachment points around the duct.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttachGeometry {
    pub count: usize,
    /// Contact radius from the body z axis, m.
    pub radius: f64,
    /// Contact height below the centre of gravity (body +z), m.
    pub depth: f64,
}

impl Default for AttachGeometry {
    fn default() -> Self {
        Self {
            count: 8,
            radius: 0.13,
            depth: 0.05,
        }
    }
}

impl AttachGeometry {
    /// Unit radial direction of point `index`; point 0 is on +x and the
    /// index increases from +x toward +y.
    pub fn direction(&self, index: usize) -> Vector3<f64> {
        let angle = std::f64::consts::TAU * index as f64 / self.count as f64;
        Vector3::new(angle.cos(), angle.sin(), 0.0)
    }

    /// Attachment at `index` with default contact properties. The load hangs
    /// `gravity_arm` outboard of the contacts.
    pub fn attachment(&self, index: usize, mass: f64) -> PayloadAttachment {
        let dir = self.direction(index);
        let arm = self.radius + DEFAULT_GRAVITY_ARM;
        PayloadAttachment {
            mass,
            attach_point: index,
            magnet_force_a: DEFAULT_MAGNET_FORCE,
            magnet_force_b: DEFAULT_MAGNET_FORCE,
            friction_coeff: DEFAULT_FRICTION,
            contact_span: DEFAULT_CONTACT_SPAN,
            gravity_arm: DEFAULT_GRAVITY_ARM,
            axis_offset: self.radius,
            body_position: Vector3::new(dir.x * arm, dir.y * arm, self.depth),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StabilityOutcome {
    Stable,
    SeparationAtA,
    VerticalSlip,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityVerdict {
    pub outcome: StabilityOutcome,
    /// (F_s_a, F_s_b), N.
    pub support_forces: (f64, f64),
    /// (f_a_max, f_b_max), N.
    pub friction_capacity: (f64, f64),
    /// Load weight, N.
    pub load_weight: f64,
    pub load_share: f64,
}

impl StabilityVerdict {
    /// Re-derives the outcome from the reported forces.
    pub fn derived_outcome(&self) -> StabilityOutcome {
        classify(
            self.support_forces.0,
            self.friction_capacity,
            self.load_weight,
            self.load_share,
        )
    }
}

fn classify(support_a: f64, friction: (f64, f64), weight: f64, share: f64) -> StabilityOutcome {
    if support_a <= 0.0 {
        StabilityOutcome::SeparationAtA
    } else if friction.0 < share * weight || friction.0 + friction.1 < weight {
        StabilityOutcome::VerticalSlip
    } else {
        StabilityOutcome::Stable
    }
}

/// Decides whether a two-contact magnetic attachment holds its load.
///
/// Contact A must keep a positive support force, must carry at least
/// `load_share` of the weight in friction, and both contacts together must
/// carry all of it.
pub fn attachment_stability(
    p: &PayloadAttachment,
    load_share: f64,
    gravity: f64,
) -> Result<StabilityVerdict, PayloadError> {
    if !(load_share > 0.0 && load_share < 1.0) {
        return Err(PayloadError::LoadShare(load_share));
    }
    let p = p.validate()?;
    let weight = p.mass * gravity;
    let lever = weight * p.gravity_arm / p.contact_span;
    let support = (p.magnet_force_a - lever, p.magnet_force_b + lever);
    let friction = (p.friction_coeff * support.0, p.friction_coeff * support.1);
    Ok(StabilityVerdict {
        outcome: classify(support.0, friction, weight, load_share),
        support_forces: support,
        friction_capacity: friction,
        load_weight: weight,
        load_share,
    })
}

/// Heaviest one-sided load, kg, whose gravity moment at `arm` the vanes can
/// still balance with `tau_max`.
pub fn max_unilateral_load(tau_max: f64, arm: f64, gravity: f64) -> Result<f64, PayloadError> {
    if !(arm > 0.0) {
        return Err(PayloadError::Arm(arm));
    }
    Ok(tau_max / (gravity * arm))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrimDeflection {
    /// Differential vane deflection `Δδ`, angle units.
    pub deflection: f64,
    /// Load moment being balanced, N·m.
    pub moment: f64,
    /// Set when `Δδ` exceeds the full differential travel `2·δ_max`.
    pub over_budget: bool,
}

/// Steady differential vane deflection needed to hold a load at level attitude.
pub fn trim_deflection(p: &PayloadAttachment, params: &VehicleParams) -> TrimDeflection {
    let moment = p.mass * params.gravity * p.trim_arm();
    let deflection = moment / params.c_m_delta;
    TrimDeflection {
        deflection,
        moment,
        over_budget: deflection.abs() > 2.0 * params.vane_deflection_max,
    }
}

/// Body wrench from the weight of every carried load.
pub fn load_disturbance_wrench(
    attachments: &[PayloadAttachment],
    euler: &Vector3<f64>,
    gravity: f64,
) -> Wrench {
    attachments
        .iter()
        .map(|p| {
            let force = gravity_body(euler, p.mass, gravity);
            Wrench {
                force,
                moment: p.body_position.cross(&force),
            }
        })
        .sum()
}
