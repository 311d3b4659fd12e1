use nalgebra::{DVector, UnitQuaternion, Vector3};

use super::{ControlContext, Controller, SimError};
use crate::dynamics::{center_of_mass, centroidal_momentum, ContactSet, FloatingBaseState};
use crate::model::RobotModel;
use crate::motor::{control_voltage, delivered_torque, MotorModelParams, TorqueLoopGains, TorqueLoopState};
use crate::wbc::{control_step, ComReference, ControllerConfig, PosturalTask, StepDiagnostics};

/// Base pose that puts the CoM straight above the centroid of the named
/// contacts, which is placed at the world origin. Only pitch about the
/// world y axis is used, so a laterally symmetric robot ends up level.
pub fn balanced_stance(model: &RobotModel, q: DVector<f64>, contacts: &[&str]) -> Result<FloatingBaseState, SimError> {
    let mut state = FloatingBaseState::at_rest(q);
    let set = ContactSet::from_names(model, contacts)?;
    let feet = set.positions(model, &state)?;
    if feet.is_empty() {
        return Err(SimError::Script("balanced stance needs at least one contact".into()));
    }
    let centroid = feet.iter().sum::<Vector3<f64>>() / feet.len() as f64;
    let d = center_of_mass(model, &state)? - centroid;
    let rot = UnitQuaternion::from_axis_angle(&Vector3::y_axis(), (-d.x).atan2(d.z));
    state.base_orientation = rot;
    state.base_position = -(rot * centroid);
    Ok(state)
}

/// Whole-body balance controller: holds the CoM at its initial position
/// (plus script offsets) and the joints at their initial angles.
///
/// The CoM target is offset by `com_shift · (up × L) / m`, where `L` is the
/// centroidal angular momentum. With two point feet the pitch about the
/// foot line is unactuated and the torque stage has no postural freedom;
/// without this offset the loop has an unstable pole.
pub struct BalanceController {
    pub config: ControllerConfig,
    pub com_nominal: Vector3<f64>,
    pub posture: PosturalTask,
    /// Diagnostics of every step, with its time.
    pub log: Vec<(f64, StepDiagnostics)>,
}

impl BalanceController {
    pub fn new(model: &RobotModel, initial: &FloatingBaseState, config: ControllerConfig) -> Result<Self, SimError> {
        config.check()?;
        Ok(Self {
            com_nominal: center_of_mass(model, initial)?,
            posture: PosturalTask::uniform(initial.q.clone(), config.posture.kp, config.posture.kd),
            config,
            log: Vec::new(),
        })
    }

    pub fn failures(&self) -> usize {
        self.log.iter().filter(|(_, d)| !d.ok()).count()
    }
}

impl Controller for BalanceController {
    fn torques(&mut self, ctx: &ControlContext) -> Result<DVector<f64>, SimError> {
        // Leaning the CoM target against the centroidal angular momentum
        // is what stabilizes rotation about a line of point contacts.
        let l = centroidal_momentum(ctx.model, ctx.state)?.angular;
        let up = -self.config.gravity_vector().normalize();
        let shift = up.cross(&l) * (self.config.momentum.com_shift / ctx.model.total_mass());
        let reference = ComReference::at(self.com_nominal + ctx.com_offset + shift);
        let (tau, diag) = control_step(
            ctx.model,
            ctx.state,
            ctx.contacts,
            &reference,
            &self.posture,
            &self.config,
        )?;
        self.log.push((ctx.time, diag));
        Ok(tau)
    }
}

/// Routes another controller's torques through the per-joint voltage loop
/// of every motorized joint. The loop uses the model's identified
/// parameters; the delivered torque comes from `plant`, which may differ.
pub struct MotorLoopController<C> {
    pub inner: C,
    pub gains: TorqueLoopGains,
    /// Parameters of the transmission actually delivering torque, per joint.
    pub plant: Vec<Option<MotorModelParams>>,
    pub loops: Vec<TorqueLoopState>,
    measured: DVector<f64>,
}

impl<C: Controller> MotorLoopController<C> {
    /// Plant equal to the model's motor parameters.
    pub fn new(model: &RobotModel, inner: C, gains: TorqueLoopGains) -> Self {
        let plant = (0..model.n())
            .map(|i| model.dof_joint(i).motor.map(|m| m.params))
            .collect();
        Self::with_plant(model, inner, gains, plant)
    }

    pub fn with_plant(
        model: &RobotModel,
        inner: C,
        gains: TorqueLoopGains,
        plant: Vec<Option<MotorModelParams>>,
    ) -> Self {
        Self {
            inner,
            gains,
            plant,
            loops: vec![TorqueLoopState::default(); model.n()],
            measured: DVector::zeros(model.n()),
        }
    }
}

impl<C: Controller> Controller for MotorLoopController<C> {
    fn torques(&mut self, ctx: &ControlContext) -> Result<DVector<f64>, SimError> {
        let mut tau = self.inner.torques(ctx)?;
        for i in 0..ctx.model.n() {
            let (Some(motor), Some(plant)) = (ctx.model.dof_joint(i).motor, self.plant[i]) else {
                continue;
            };
            let qd = ctx.state.nu[6 + i];
            let (v, next) = control_voltage(
                &motor.params,
                &self.gains,
                &self.loops[i],
                tau[i],
                self.measured[i],
                qd,
                ctx.dt,
            );
            self.loops[i] = next;
            tau[i] = delivered_torque(&plant, v, qd);
            self.measured[i] = tau[i];
        }
        Ok(tau)
    }
}
