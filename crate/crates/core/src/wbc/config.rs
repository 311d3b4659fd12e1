use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::qp::{DEFAULT_MAX_ITERATIONS, DEFAULT_TOLERANCE};
use super::WbcError;
use crate::dynamics::default_gravity;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentumGains {
    /// 1/s²
    pub kp: f64,
    /// 1/s
    pub kd: f64,
    /// Angular-momentum damping, 1/s.
    pub k_omega: f64,
    /// CoM target offset per unit centroidal angular momentum per kilogram, s/m. Used
    /// by the balance controller to steer the pitch about the support line
    /// of point feet, which contact forces alone cannot reach.
    #[serde(default = "default_com_shift")]
    pub com_shift: f64,
}

fn default_com_shift() -> f64 {
    0.2
}

impl Default for MomentumGains {
    fn default() -> Self {
        Self {
            kp: 40.0,
            kd: 12.0,
            k_omega: 5.0,
            com_shift: default_com_shift(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PostureGains {
    /// N·m/rad
    pub kp: f64,
    /// N·m·s/rad
    pub kd: f64,
}

impl Default for PostureGains {
    fn default() -> Self {
        Self { kp: 50.0, kd: 5.0 }
    }
}

/// What the controller returns when a stage fails.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fallback {
    /// Static torques holding the current configuration, no feedback.
    #[default]
    GravityCompensation,
    Zero,
}

/// Controller configuration, loadable from TOML. Every field has a default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerConfig {
    pub momentum: MomentumGains,
    pub posture: PostureGains,
    /// Weight on `‖f‖²` in the contact-force objective.
    pub lambda: f64,
    /// Overrides the per-contact facet count when set.
    pub cone_facets: Option<usize>,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub fallback: Fallback,
    /// m/s²
    pub gravity: [f64; 3],
}

impl Default for ControllerConfig {
    fn default() -> Self {
        let g = default_gravity();
        Self {
            momentum: MomentumGains::default(),
            posture: PostureGains::default(),
            lambda: 1e-6,
            cone_facets: None,
            tolerance: DEFAULT_TOLERANCE,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            fallback: Fallback::default(),
            gravity: [g.x, g.y, g.z],
        }
    }
}

impl ControllerConfig {
    pub fn from_toml(text: &str) -> Result<Self, WbcError> {
        let cfg: Self = toml::from_str(text).map_err(|e| WbcError::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn check(&self) -> Result<(), WbcError> {
        let m = &self.momentum;
        if [m.kp, m.kd, m.k_omega, m.com_shift, self.posture.kp, self.posture.kd]
            .iter()
            .any(|g| !(*g >= 0.0))
        {
            return Err(WbcError::Config("gains must be non-negative".into()));
        }
        if !(self.lambda >= 0.0) {
            return Err(WbcError::Config("lambda must be non-negative".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(WbcError::Config("tolerance must be positive".into()));
        }
        if let Some(f) = self.cone_facets {
            if f < 4 {
                return Err(WbcError::Config("cone_facets must be at least 4".into()));
            }
        }
        Ok(())
    }

    pub fn gravity_vector(&self) -> Vector3<f64> {
        Vector3::from(self.gravity)
    }
}
