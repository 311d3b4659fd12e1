use crate::model::SeaSpec;
use crate::motor::{control_voltage, delivered_torque, MotorModelParams, TorqueLoopGains, TorqueLoopState};

/// Series elastic joint with its output locked, driven through the motor
/// transmission: `J_m θ̈ = τ_m(V, θ̇) − k θ − d θ̇`. The measured torque is
/// the spring torque `k θ + d θ̇`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LockedSeaBench {
    pub sea: SeaSpec,
    /// Transmission actually driving the motor.
    pub plant: MotorModelParams,
    /// When set, the plant's Coulomb term is `k_c tanh(s θ̇)` with this `s`
    /// (s/rad) instead of `k_c sign(θ̇)`. A fixed-step integrator cannot
    /// resolve the sign jump at rest and chatters around it.
    pub coulomb_sharpness: Option<f64>,
    /// s
    pub dt: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LockedSeaState {
    /// Motor position, joint side, rad.
    pub theta: f64,
    /// rad/s
    pub theta_dot: f64,
}

impl LockedSeaBench {
    pub fn measured_torque(&self, s: &LockedSeaState) -> f64 {
        self.sea.stiffness * s.theta + self.sea.damping * s.theta_dot
    }

    /// Semi-implicit Euler step at constant voltage `v`.
    pub fn step(&self, s: &LockedSeaState, v: f64) -> LockedSeaState {
        let motor = match self.coulomb_sharpness {
            None => delivered_torque(&self.plant, v, s.theta_dot),
            Some(sharp) => {
                let w = s.theta_dot;
                let smooth = MotorModelParams {
                    k_cp: 0.0,
                    k_cn: 0.0,
                    ..self.plant
                };
                let coulomb = if w >= 0.0 { self.plant.k_cp } else { self.plant.k_cn };
                delivered_torque(&smooth, v - coulomb * (sharp * w).tanh(), w)
            }
        };
        let acc = (motor - self.measured_torque(s)) / self.sea.motor_inertia;
        let theta_dot = s.theta_dot + self.dt * acc;
        LockedSeaState {
            theta: s.theta + self.dt * theta_dot,
            theta_dot,
        }
    }
}

/// One control period of [`LockedSeaBench::track`], recorded before the
/// voltage is applied.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BenchSample {
    pub time: f64,
    pub tau_desired: f64,
    pub tau_measured: f64,
    pub voltage: f64,
    /// Loop state after this period's update.
    pub loop_state: TorqueLoopState,
}

impl LockedSeaBench {
    /// Close the torque loop around the bench, one control update per
    /// step, starting at rest.
    pub fn track(
        &self,
        model: &MotorModelParams,
        gains: &TorqueLoopGains,
        duration: f64,
        tau_desired: impl Fn(f64) -> f64,
    ) -> Vec<BenchSample> {
        let steps = (duration / self.dt).round() as usize;
        let mut s = LockedSeaState::default();
        let mut loop_state = TorqueLoopState::default();
        let mut out = Vec::with_capacity(steps);
        for k in 0..steps {
            let time = k as f64 * self.dt;
            let desired = tau_desired(time);
            let measured = self.measured_torque(&s);
            let (v, next) = control_voltage(model, gains, &loop_state, desired, measured, s.theta_dot, self.dt);
            loop_state = next;
            out.push(BenchSample {
                time,
                tau_desired: desired,
                tau_measured: measured,
                voltage: v,
                loop_state,
            });
            s = self.step(&s, v);
        }
        out
    }
}
