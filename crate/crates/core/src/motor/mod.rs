//! Inner joint-torque loop.
//!
//! The transmission model maps a joint torque and motor velocity to the
//! voltage that produces it, with direction-dependent viscous and Coulomb
//! friction. The loop controller adds PI feedback on the torque error to that
//! model as feedforward, replacing the Coulomb sign by a `tanh` so the command
//! stays continuous through zero velocity. [`identify`] fits the model
//! coefficients by linear least squares.

mod identify;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use identify::{
    identify, read_dataset_csv, synthetic_dataset, write_dataset_csv, write_fit_report, FitReport, MotorSample,
    PARAM_NAMES,
};

/// Default `tanh` sharpness, s/rad: `tanh(50 * 0.04) ≈ 0.96`.
pub const DEFAULT_TANH_SHARPNESS: f64 = 50.0;

#[derive(Debug, Error)]
pub enum MotorError {
    #[error("{0} unexcited")]
    Unexcited(String),
    #[error("identification needs at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("dataset row {row}: {message}")]
    Csv { row: usize, message: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Transmission coefficients. `k_t` in V/(N·m), viscous terms in V·s/rad,
/// Coulomb terms in V; `p`/`n` suffixes select positive/negative rotation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MotorModelParams {
    pub k_t: f64,
    pub k_vp: f64,
    pub k_vn: f64,
    pub k_cp: f64,
    pub k_cn: f64,
}

impl MotorModelParams {
    pub fn check(&self) -> Result<(), String> {
        if !(self.k_t > 0.0) {
            return Err("k_t must be positive".into());
        }
        for (name, v) in [
            ("k_vp", self.k_vp),
            ("k_vn", self.k_vn),
            ("k_cp", self.k_cp),
            ("k_cn", self.k_cn),
        ] {
            if !(v >= 0.0) {
                return Err(format!("{name} must be non-negative"));
            }
        }
        Ok(())
    }

    pub fn as_array(&self) -> [f64; 5] {
        [self.k_t, self.k_vp, self.k_vn, self.k_cp, self.k_cn]
    }

    pub fn from_array(v: [f64; 5]) -> Self {
        Self {
            k_t: v[0],
            k_vp: v[1],
            k_vn: v[2],
            k_cp: v[3],
            k_cn: v[4],
        }
    }

    /// Viscous coefficient on the active rotation branch.
    fn viscous(&self, thetadot: f64) -> f64 {
        self.k_vp * step(thetadot) + self.k_vn * step(-thetadot)
    }

    /// Coulomb coefficient on the active rotation branch.
    fn coulomb(&self, thetadot: f64) -> f64 {
        self.k_cp * step(thetadot) + self.k_cn * step(-thetadot)
    }

    /// Friction voltage `V - k_t τ` of the transmission model.
    pub fn friction_voltage(&self, thetadot: f64) -> f64 {
        self.viscous(thetadot) * thetadot + self.coulomb(thetadot) * sign(thetadot)
    }
}

/// Unit step: 1 for `x > 0`, else 0.
pub fn step(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Sign with `sign(0) = 0`.
pub fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Voltage that produces joint torque `tau` at motor velocity `thetadot`.
pub fn model_voltage(params: &MotorModelParams, tau: f64, thetadot: f64) -> f64 {
    params.k_t * tau + params.friction_voltage(thetadot)
}

/// Torque delivered by the transmission when driven at voltage `v`; the
/// inverse of [`model_voltage`] in `tau`.
pub fn delivered_torque(params: &MotorModelParams, v: f64, thetadot: f64) -> f64 {
    (v - params.friction_voltage(thetadot)) / params.k_t
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TorqueLoopGains {
    /// Proportional gain on the torque error (dimensionless).
    pub k_p: f64,
    /// Integral gain, 1/s.
    pub k_i: f64,
    /// `tanh` sharpness, s/rad.
    pub k_s: f64,
    /// Clamp on the error integral, N·m·s.
    pub integral_limit: f64,
    /// Voltage saturation, V.
    pub v_max: f64,
}

impl Default for TorqueLoopGains {
    fn default() -> Self {
        Self {
            k_p: 0.5,
            k_i: 20.0,
            k_s: DEFAULT_TANH_SHARPNESS,
            integral_limit: 1.0,
            v_max: 24.0,
        }
    }
}

impl TorqueLoopGains {
    pub fn check(&self) -> Result<(), String> {
        if !(self.k_p >= 0.0 && self.k_i >= 0.0) {
            return Err("k_p and k_i must be non-negative".into());
        }
        if !(self.k_s > 0.0) {
            return Err("k_s must be positive".into());
        }
        if !(self.integral_limit > 0.0) {
            return Err("integral_limit must be positive".into());
        }
        if !(self.v_max > 0.0) {
            return Err("v_max must be positive".into());
        }
        Ok(())
    }
}

/// Loop memory, owned by exactly one controller.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TorqueLoopState {
    /// ∫ (τ_measured − τ_desired) dt, N·m·s.
    pub integral: f64,
    /// Last commanded voltage, V.
    pub last_voltage: f64,
    /// Whether the last command hit the voltage limit.
    pub saturated: bool,
}

/// One update of the torque loop.
///
/// The error integral advances only when the resulting command is not
/// saturated, and is always kept inside `±integral_limit`.
pub fn control_voltage(
    params: &MotorModelParams,
    gains: &TorqueLoopGains,
    state: &TorqueLoopState,
    tau_desired: f64,
    tau_measured: f64,
    thetadot: f64,
    dt: f64,
) -> (f64, TorqueLoopState) {
    debug_assert!(dt > 0.0);
    let err = tau_measured - tau_desired;
    let lim = gains.integral_limit;
    let friction = params.viscous(thetadot) * thetadot + params.coulomb(thetadot) * (gains.k_s * thetadot).tanh();
    let command = |integral: f64| params.k_t * (tau_desired - gains.k_p * err - gains.k_i * integral) + friction;

    let candidate = (state.integral + err * dt).clamp(-lim, lim);
    let v = command(candidate);
    let (integral, v) = if v.abs() > gains.v_max {
        // Freeze the integrator while saturated.
        let frozen = state.integral.clamp(-lim, lim);
        (frozen, command(frozen).clamp(-gains.v_max, gains.v_max))
    } else {
        (candidate, v)
    };
    let saturated = v.abs() >= gains.v_max;
    (
        v,
        TorqueLoopState {
            integral,
            last_voltage: v,
            saturated,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> MotorModelParams {
        MotorModelParams {
            k_t: 1.0,
            k_vp: 0.5,
            k_vn: 0.8,
            k_cp: 0.1,
            k_cn: 0.3,
        }
    }

    #[test]
    fn model_voltage_hand_values() {
        let p = params();
        assert_eq!(model_voltage(&p, 0.0, 0.0), 0.0);
        assert!((model_voltage(&p, 2.0, 1.0) - 2.6).abs() < 1e-15);
        assert!((model_voltage(&p, 0.0, -2.0) - (-1.9)).abs() < 1e-15);
    }

    #[test]
    fn zero_velocity_is_pure_torque_term() {
        let p = params();
        assert_eq!(model_voltage(&p, 3.0, 0.0), 3.0);
    }

    #[test]
    fn delivered_torque_inverts_model() {
        let p = MotorModelParams { k_t: 1.3, ..params() };
        for &(tau, w) in &[(0.4, 1.2), (-2.0, -0.3), (1.0, 0.0)] {
            let v = model_voltage(&p, tau, w);
            assert!((delivered_torque(&p, v, w) - tau).abs() < 1e-14);
        }
    }

    #[test]
    fn pure_feedforward_when_error_free() {
        let p = MotorModelParams { k_t: 1.7, ..params() };
        let g = TorqueLoopGains::default();
        let (v, _) = control_voltage(&p, &g, &TorqueLoopState::default(), 2.0, 2.0, 0.0, 1e-3);
        assert_eq!(v, 1.7 * 2.0);
    }

    #[test]
    fn tanh_friction_approaches_sign() {
        let p = params();
        let g = TorqueLoopGains {
            v_max: 1e6,
            ..Default::default()
        };
        for &w in &[0.01, 0.05, 0.2, 1.0, -0.01, -0.3, -2.0] {
            let (v, _) = control_voltage(&p, &g, &TorqueLoopState::default(), 1.0, 1.0, w, 1e-3);
            let gap = (v - model_voltage(&p, 1.0, w)).abs();
            let kc = if w > 0.0 { p.k_cp } else { p.k_cn };
            assert!(gap <= kc * (1.0 - (g.k_s * w).abs().tanh()) + 1e-15);
        }
    }

    #[test]
    fn control_voltage_continuous_in_velocity() {
        let p = params();
        let g = TorqueLoopGains::default();
        let s = TorqueLoopState::default();
        let (a, _) = control_voltage(&p, &g, &s, 1.0, 0.9, -1e-9, 1e-3);
        let (b, _) = control_voltage(&p, &g, &s, 1.0, 0.9, 1e-9, 1e-3);
        assert!((a - b).abs() < 1e-6);
    }

    #[test]
    fn integral_frozen_under_saturation() {
        let p = params();
        let g = TorqueLoopGains {
            v_max: 2.0,
            ..Default::default()
        };
        let mut s = TorqueLoopState::default();
        for _ in 0..1000 {
            let (v, next) = control_voltage(&p, &g, &s, 4.0, 0.0, 0.0, 1e-3);
            assert!(v.abs() <= g.v_max);
            s = next;
        }
        assert!(s.saturated);
        assert_eq!(s.integral, 0.0);
    }

    #[test]
    fn integral_clamped() {
        let p = params();
        let g = TorqueLoopGains {
            v_max: 1e9,
            integral_limit: 0.01,
            ..Default::default()
        };
        let mut s = TorqueLoopState::default();
        for _ in 0..1000 {
            s = control_voltage(&p, &g, &s, 1.0, 0.0, 0.0, 1e-3).1;
            assert!(s.integral.abs() <= g.integral_limit);
        }
        assert_eq!(s.integral, -0.01);
    }
}
