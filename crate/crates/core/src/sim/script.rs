use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::SimError;
use crate::dynamics::SpatialWrench;
use crate::model::RobotModel;

/// Timed scenario events, read from TOML.
///
/// ```toml
/// duration = 30.0
/// initial_contacts = ["l_foot", "r_foot"]
///
/// [[push]]
/// frame = "torso"
/// force = [5.0, 0.0, 0.0]
/// start = 2.0
/// duration = 0.1
/// ```
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Script {
    /// s
    pub duration: f64,
    pub initial_contacts: Vec<String>,
    pub push: Vec<PushEvent>,
    pub reference: Vec<ReferenceEvent>,
    pub contact: Vec<ContactEvent>,
}

/// Wrench applied at a frame origin, world axes, over `[start, start + duration)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PushEvent {
    pub frame: String,
    /// N
    pub force: [f64; 3],
    /// N·m
    #[serde(default)]
    pub torque: [f64; 3],
    /// s
    pub start: f64,
    /// s
    pub duration: f64,
}

impl PushEvent {
    pub fn wrench(&self) -> SpatialWrench {
        SpatialWrench::mixed(
            self.frame.clone(),
            Vector3::from(self.force),
            Vector3::from(self.torque),
        )
    }
}

/// Shift of the CoM reference, cumulative.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceEvent {
    pub time: f64,
    /// m
    pub com_offset: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContactEvent {
    pub time: f64,
    /// Contact frame name.
    pub name: String,
    pub active: bool,
}

impl Script {
    pub fn from_toml(text: &str) -> Result<Self, SimError> {
        toml::from_str(text).map_err(|e| SimError::Script(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("script serializes")
    }

    /// Times are finite and non-negative, and every named frame exists.
    pub fn check(&self, model: &RobotModel) -> Result<(), SimError> {
        let bad = |what: &str| Err(SimError::Script(what.to_string()));
        if !(self.duration.is_finite() && self.duration >= 0.0) {
            return bad("duration must be finite and non-negative");
        }
        let contact_known = |name: &str| model.contacts().iter().any(|c| c.name == name);
        for name in &self.initial_contacts {
            if !contact_known(name) {
                return Err(SimError::Script(format!("unknown contact frame '{name}'")));
            }
        }
        for ev in &self.contact {
            if !contact_known(&ev.name) {
                return Err(SimError::Script(format!("unknown contact frame '{}'", ev.name)));
            }
            if !(ev.time.is_finite() && ev.time >= 0.0) {
                return bad("contact event time must be finite and non-negative");
            }
        }
        for ev in &self.push {
            if model.frame(&ev.frame).is_err() {
                return Err(SimError::Script(format!("unknown frame '{}'", ev.frame)));
            }
            if !(ev.start >= 0.0 && ev.duration >= 0.0) || ev.force.iter().chain(&ev.torque).any(|v| !v.is_finite()) {
                return Err(SimError::Script(format!(
                    "push on '{}' has invalid timing or wrench",
                    ev.frame
                )));
            }
        }
        for ev in &self.reference {
            if !(ev.time.is_finite() && ev.time >= 0.0) || ev.com_offset.iter().any(|v| !v.is_finite()) {
                return bad("reference event must have finite time and offset");
            }
        }
        Ok(())
    }
}
