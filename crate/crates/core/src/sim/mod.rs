//! Contact-constrained forward dynamics and a fixed-step scenario runner.
//!
//! Contacts are rigid and bilateral while active: each contact point is held
//! at the anchor captured when it became active, and a fixed base is welded
//! to its initial pose. Constraint drift is corrected with Baumgarte terms.
//! Integration is semi-implicit Euler.

mod balance;
mod bench;
mod script;

use std::io::Write;

use nalgebra::{DMatrix, DVector, Isometry3, Vector3, Vector6};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{
    centroidal_momentum, default_gravity, forward_kinematics, kinetic_energy, mass_matrix, potential_energy, rnea,
    ContactSet, DynamicsError, FloatingBaseState, SpatialWrench,
};
use crate::model::RobotModel;
use crate::wbc::WbcError;

pub use balance::{balanced_stance, BalanceController, MotorLoopController};
pub use bench::{BenchSample, LockedSeaBench, LockedSeaState};
pub use script::{ContactEvent, PushEvent, ReferenceEvent, Script};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Controller(#[from] WbcError),
    #[error("non-finite state at t = {time}")]
    NonFinite { time: f64 },
    #[error("config: {0}")]
    Config(String),
    #[error("script: {0}")]
    Script(String),
    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// s
    pub dt: f64,
    /// m/s²
    pub gravity: [f64; 3],
    /// Velocity-drift gain, 1/s.
    pub alpha: f64,
    /// Position-drift gain, 1/s.
    pub beta: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        let g = default_gravity();
        Self {
            dt: 1e-3,
            gravity: [g.x, g.y, g.z],
            alpha: 10.0,
            beta: 10.0,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn gravity_vector(&self) -> Vector3<f64> {
        Vector3::from(self.gravity)
    }

    pub fn check(&self) -> Result<(), SimError> {
        if !(self.dt > 0.0) {
            return Err(SimError::Config("dt must be positive".into()));
        }
        if !(self.alpha >= 0.0 && self.beta >= 0.0) {
            return Err(SimError::Config("alpha and beta must be non-negative".into()));
        }
        Ok(())
    }
}

/// Active contacts with the world points they are held at, plus the weld
/// pose of a fixed base.
#[derive(Clone, Debug, PartialEq)]
pub struct Stance {
    pub contacts: ContactSet,
    /// One anchor per active contact point, in [`ContactSet::points`] order.
    pub anchors: Vec<Vector3<f64>>,
    pub base_anchor: Option<Isometry3<f64>>,
}

impl Stance {
    /// Hold the given contacts (and a fixed base) where they are now.
    pub fn capture(model: &RobotModel, state: &FloatingBaseState, contacts: ContactSet) -> Result<Self, SimError> {
        let anchors = contacts.positions(model, state)?;
        Ok(Self {
            contacts,
            anchors,
            base_anchor: model.is_fixed_base().then(|| state.base_pose()),
        })
    }

    pub fn free(model: &RobotModel, state: &FloatingBaseState) -> Self {
        Self {
            contacts: ContactSet::none(model),
            anchors: Vec::new(),
            base_anchor: model.is_fixed_base().then(|| state.base_pose()),
        }
    }

    /// Activate or release a contact frame; newly active points are
    /// anchored at their current positions, others keep their anchors.
    pub fn set_active(
        &mut self,
        model: &RobotModel,
        state: &FloatingBaseState,
        name: &str,
        on: bool,
    ) -> Result<(), SimError> {
        let before: Vec<(String, Vector3<f64>)> = self
            .contacts
            .points(model)
            .iter()
            .map(|p| p.name.clone())
            .zip(self.anchors.iter().copied())
            .collect();
        self.contacts.set_active(model, name, on)?;
        let now = self.contacts.positions(model, state)?;
        self.anchors = self
            .contacts
            .points(model)
            .iter()
            .zip(now)
            .map(|(p, here)| before.iter().find(|(n, _)| *n == p.name).map_or(here, |(_, a)| *a))
            .collect();
        Ok(())
    }
}

/// Result of one constrained forward-dynamics solve.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstrainedAcceleration {
    pub nudot: DVector<f64>,
    /// Stacked contact-point forces on the robot, world axes.
    pub forces: DVector<f64>,
    /// Weld wrench `[F; n_B]` on a fixed base, world axes.
    pub weld: Option<Vector6<f64>>,
    /// True when `J M⁻¹ Jᵀ` was rank deficient and the minimum-norm force
    /// was used.
    pub redundant: bool,
}

/// Constraint rows `J`, the right-hand side `−J̇ν − 2αJν − β²e`, and the
/// number of weld rows at the end.
fn constraints(
    model: &RobotModel,
    state: &FloatingBaseState,
    stance: &Stance,
    config: &SimConfig,
) -> Result<(DMatrix<f64>, DVector<f64>, usize), SimError> {
    let nv = model.nv();
    let jc = stance.contacts.jacobian(model, state)?;
    let bc = stance.contacts.bias(model, state)?;
    let pc = stance.contacts.positions(model, state)?;
    if pc.len() != stance.anchors.len() {
        return Err(SimError::Dimension {
            what: "contact anchors",
            expected: pc.len(),
            got: stance.anchors.len(),
        });
    }
    let kc = jc.nrows();
    let weld = usize::from(stance.base_anchor.is_some()) * 6;
    let mut j = DMatrix::zeros(kc + weld, nv);
    let mut rhs = DVector::zeros(kc + weld);
    j.rows_mut(0, kc).copy_from(&jc);
    let (a2, b2) = (2.0 * config.alpha, config.beta * config.beta);
    let vel = &jc * &state.nu;
    for k in 0..pc.len() {
        let e = pc[k] - stance.anchors[k];
        for i in 0..3 {
            rhs[3 * k + i] = -bc[3 * k + i] - a2 * vel[3 * k + i] - b2 * e[i];
        }
    }
    if let Some(anchor) = &stance.base_anchor {
        j.view_mut((kc, 0), (6, 6)).fill_with_identity();
        let dp = state.base_position - anchor.translation.vector;
        let dr = (state.base_orientation * anchor.rotation.inverse()).scaled_axis();
        let e = [dp.x, dp.y, dp.z, dr.x, dr.y, dr.z];
        for i in 0..6 {
            rhs[kc + i] = -a2 * state.nu[i] - b2 * e[i];
        }
    }
    Ok((j, rhs, weld))
}

/// Solve `M ν̇ − Jᵀ f = Bτ − h` with `J ν̇ = −J̇ν − 2αJν − β²(p − p_anchor)`
/// through the Schur complement `J M⁻¹ Jᵀ`. External wrenches enter `h`.
pub fn constrained_forward_dynamics(
    model: &RobotModel,
    state: &FloatingBaseState,
    tau: &DVector<f64>,
    stance: &Stance,
    external: &[SpatialWrench],
    config: &SimConfig,
) -> Result<ConstrainedAcceleration, SimError> {
    let n = model.n();
    if tau.len() != n {
        return Err(SimError::Dimension {
            what: "tau",
            expected: n,
            got: tau.len(),
        });
    }
    let nv = model.nv();
    let m = mass_matrix(model, state)?;
    let h = rnea(model, state, &DVector::zeros(nv), external, &config.gravity_vector())?;
    let mut rhs_dyn = -h;
    for i in 0..n {
        rhs_dyn[6 + i] += tau[i];
    }
    let chol = m
        .cholesky()
        .ok_or(SimError::Config("mass matrix not positive definite".into()))?;
    let free = chol.solve(&rhs_dyn);
    let (j, rhs, weld) = constraints(model, state, stance, config)?;
    if j.nrows() == 0 {
        return Ok(ConstrainedAcceleration {
            nudot: free,
            forces: DVector::zeros(0),
            weld: None,
            redundant: false,
        });
    }
    let minv_jt = chol.solve(&j.transpose());
    let schur = &j * &minv_jt;
    let svd = schur.svd(true, true);
    let smax = svd.singular_values.max();
    let tol = 1e-12 * smax.max(1e-300);
    let redundant = svd.singular_values.iter().any(|&s| s <= tol);
    let lambda = svd
        .solve(&(rhs - &j * &free), tol)
        .map_err(|e| SimError::Config(e.to_string()))?;
    let nudot = free + minv_jt * &lambda;
    let kc = j.nrows() - weld;
    Ok(ConstrainedAcceleration {
        nudot,
        forces: lambda.rows(0, kc).into_owned(),
        weld: (weld > 0).then(|| Vector6::from_column_slice(lambda.rows(kc, 6).as_slice())),
        redundant,
    })
}

/// Motor side of the series elastic joints.
#[derive(Clone, Debug, PartialEq)]
pub struct SeaState {
    /// Generalized-coordinate index of each elastic joint.
    pub dofs: Vec<usize>,
    /// Motor position reflected to the joint side, rad.
    pub theta: DVector<f64>,
    /// rad/s
    pub theta_dot: DVector<f64>,
}

impl SeaState {
    /// Motors aligned with the joints, springs relaxed.
    pub fn relaxed(model: &RobotModel, state: &FloatingBaseState) -> Self {
        let dofs: Vec<usize> = (0..model.n()).filter(|&i| model.dof_joint(i).sea.is_some()).collect();
        let theta = DVector::from_iterator(dofs.len(), dofs.iter().map(|&i| state.q[i]));
        let theta_dot = DVector::from_iterator(dofs.len(), dofs.iter().map(|&i| state.nu[6 + i]));
        Self { dofs, theta, theta_dot }
    }

    /// Spring-plus-damper torque on each elastic joint.
    pub fn joint_torques(&self, model: &RobotModel, state: &FloatingBaseState) -> DVector<f64> {
        DVector::from_iterator(
            self.dofs.len(),
            self.dofs.iter().enumerate().map(|(k, &i)| {
                let sea = model.dof_joint(i).sea.expect("elastic joint");
                sea.stiffness * (self.theta[k] - state.q[i]) + sea.damping * (self.theta_dot[k] - state.nu[6 + i])
            }),
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepOutput {
    pub state: FloatingBaseState,
    pub sea: Option<SeaState>,
    pub forces: DVector<f64>,
    pub nudot: DVector<f64>,
    /// Torque acting on each joint during the step (spring torque on
    /// elastic joints).
    pub joint_torques: DVector<f64>,
}

/// One semi-implicit Euler step. With `sea`, entries of `tau` on elastic
/// joints are motor torques; elsewhere they act on the joint directly.
pub fn step(
    model: &RobotModel,
    state: &FloatingBaseState,
    tau: &DVector<f64>,
    stance: &Stance,
    external: &[SpatialWrench],
    config: &SimConfig,
    sea: Option<&SeaState>,
) -> Result<StepOutput, SimError> {
    let dt = config.dt;
    let mut joint = tau.clone();
    let mut sea_next = None;
    if let Some(s) = sea {
        let spring = s.joint_torques(model, state);
        let mut next = s.clone();
        for (k, &i) in s.dofs.iter().enumerate() {
            joint[i] = spring[k];
            let jm = model.dof_joint(i).sea.expect("elastic joint").motor_inertia;
            next.theta_dot[k] += dt * (tau[i] - spring[k]) / jm;
            next.theta[k] += dt * next.theta_dot[k];
        }
        sea_next = Some(next);
    }
    let acc = constrained_forward_dynamics(model, state, &joint, stance, external, config)?;
    let nu = &state.nu + &acc.nudot * dt;
    let mut next = state.integrate_positions(&nu, dt);
    next.nu = nu;
    if !next.is_finite()
        || sea_next
            .as_ref()
            .is_some_and(|s| !s.theta.iter().chain(s.theta_dot.iter()).all(|v| v.is_finite()))
    {
        return Err(SimError::NonFinite { time: f64::NAN });
    }
    Ok(StepOutput {
        state: next,
        sea: sea_next,
        forces: acc.forces,
        nudot: acc.nudot,
        joint_torques: joint,
    })
}

/// What a controller sees at each step.
pub struct ControlContext<'a> {
    pub time: f64,
    pub model: &'a RobotModel,
    pub state: &'a FloatingBaseState,
    pub contacts: &'a ContactSet,
    /// Sum of reference offsets applied by the script so far.
    pub com_offset: Vector3<f64>,
    pub sea: Option<&'a SeaState>,
    pub dt: f64,
}

pub trait Controller {
    /// Torque command for the current step, one entry per joint.
    fn torques(&mut self, ctx: &ControlContext) -> Result<DVector<f64>, SimError>;
}

impl<C: Controller + ?Sized> Controller for &mut C {
    fn torques(&mut self, ctx: &ControlContext) -> Result<DVector<f64>, SimError> {
        (**self).torques(ctx)
    }
}

/// Zero torque on every joint.
pub struct Passive;

impl Controller for Passive {
    fn torques(&mut self, ctx: &ControlContext) -> Result<DVector<f64>, SimError> {
        Ok(DVector::zeros(ctx.model.n()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub time: f64,
    pub state: FloatingBaseState,
    /// Joint torques applied over the step.
    pub tau: DVector<f64>,
    /// Acceleration the step integrated.
    pub nudot: DVector<f64>,
    /// Scripted wrenches acting during the step.
    pub external: Vec<SpatialWrench>,
    /// Forces at every model contact point (zero when inactive), 3 per point.
    pub forces: DVector<f64>,
    /// Centroidal momentum `[P; L]`.
    pub momentum: Vector6<f64>,
    pub kinetic: f64,
    pub potential: f64,
    /// `min(−A f)` over the linearized cones of the active points at their
    /// declared facet counts; non-negative inside, infinite without contacts.
    pub cone_margin: f64,
}

impl Sample {
    pub fn energy(&self) -> f64 {
        self.kinetic + self.potential
    }
}

/// Samples at uniform spacing `dt`, each holding the state at the start of
/// a step and what acted during it.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    pub contact_points: Vec<String>,
    pub samples: Vec<Sample>,
    /// Final state after the last step.
    pub final_state: Option<FloatingBaseState>,
}

impl Trajectory {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let Some(first) = self.samples.first() else {
            return writeln!(w, "time");
        };
        let n = first.state.n();
        let nv = first.state.nu.len();
        let mut header = vec!["time".to_string()];
        header.extend((0..n).map(|i| format!("q{i}")));
        header.extend(["quat_w", "quat_x", "quat_y", "quat_z", "pos_x", "pos_y", "pos_z"].map(String::from));
        header.extend((0..nv).map(|i| format!("nu{i}")));
        header.extend((0..n).map(|i| format!("tau{i}")));
        for p in &self.contact_points {
            header.extend(["x", "y", "z"].map(|a| format!("f_{p}_{a}")));
        }
        header.extend((0..6).map(|i| format!("H{i}")));
        header.extend(["E_kin", "E_pot"].map(String::from));
        writeln!(w, "{}", header.join(","))?;
        for s in &self.samples {
            let q = s.state.base_orientation.quaternion();
            let mut cells: Vec<String> = vec![s.time.to_string()];
            cells.extend(s.state.q.iter().map(|v| v.to_string()));
            cells.extend([q.w, q.i, q.j, q.k].map(|v| v.to_string()));
            cells.extend(s.state.base_position.iter().map(|v| v.to_string()));
            cells.extend(s.state.nu.iter().map(|v| v.to_string()));
            cells.extend(s.tau.iter().map(|v| v.to_string()));
            cells.extend(s.forces.iter().map(|v| v.to_string()));
            cells.extend(s.momentum.iter().map(|v| v.to_string()));
            cells.push(s.kinetic.to_string());
            cells.push(s.potential.to_string());
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.time)
    }
}

/// Scatter active-point forces into a vector over all model contact points.
fn scatter_forces(model: &RobotModel, contacts: &ContactSet, forces: &DVector<f64>) -> DVector<f64> {
    let all = model.contact_points();
    let mut out = DVector::zeros(3 * all.len());
    let mut k = 0;
    for (i, p) in all.iter().enumerate() {
        if contacts.is_active(p.contact) {
            out.rows_mut(3 * i, 3).copy_from(&forces.rows(3 * k, 3));
            k += 1;
        }
    }
    out
}

/// Run `script` from `initial` with a fixed step: controller, then
/// [`step`], recording every step. Identical inputs give identical output.
pub fn run_scenario(
    model: &RobotModel,
    controller: &mut dyn Controller,
    script: &Script,
    config: &SimConfig,
    initial: &FloatingBaseState,
    initial_sea: Option<SeaState>,
) -> Result<Trajectory, SimError> {
    config.check()?;
    script.check(model)?;
    let gravity = config.gravity_vector();
    let dt = config.dt;
    let steps = (script.duration / dt).round() as usize;
    let mut state = initial.clone();
    let mut sea = initial_sea;
    let mut stance = Stance::free(model, &state);
    for name in &script.initial_contacts {
        stance.set_active(model, &state, name, true)?;
    }
    let mut traj = Trajectory {
        dt,
        contact_points: model.contact_points().iter().map(|p| p.name.clone()).collect(),
        samples: Vec::with_capacity(steps),
        final_state: None,
    };
    let mut com_offset = Vector3::zeros();
    // Events at time t fire at the first step whose start time reaches t.
    let fires = |at: f64, k: usize| ((at / dt).round() as usize) == k;
    for k in 0..steps {
        let time = k as f64 * dt;
        for ev in &script.contact {
            if fires(ev.time, k) {
                stance.set_active(model, &state, &ev.name, ev.active)?;
            }
        }
        for ev in &script.reference {
            if fires(ev.time, k) {
                com_offset += Vector3::from(ev.com_offset);
            }
        }
        let external: Vec<SpatialWrench> = script
            .push
            .iter()
            .filter(|p| {
                let start = (p.start / dt).round() as usize;
                let len = (p.duration / dt).round() as usize;
                k >= start && k < start + len
            })
            .map(|p| p.wrench())
            .collect();

        let ctx = ControlContext {
            time,
            model,
            state: &state,
            contacts: &stance.contacts,
            com_offset,
            sea: sea.as_ref(),
            dt,
        };
        let tau = controller.torques(&ctx)?;
        let out = step(model, &state, &tau, &stance, &external, config, sea.as_ref()).map_err(|e| match e {
            SimError::NonFinite { .. } => SimError::NonFinite { time },
            other => other,
        })?;
        let h = centroidal_momentum(model, &state)?;
        let cone_margin = if stance.contacts.is_empty() {
            f64::INFINITY
        } else {
            (-(stance.contacts.friction_cones(model, &state, None)? * &out.forces)).min()
        };
        traj.samples.push(Sample {
            cone_margin,
            time,
            tau: out.joint_torques.clone(),
            nudot: out.nudot.clone(),
            external,
            forces: scatter_forces(model, &stance.contacts, &out.forces),
            momentum: h.to_vector(),
            kinetic: kinetic_energy(model, &state)?,
            potential: potential_energy(model, &state, &gravity)?,
            state,
        });
        state = out.state;
        sea = out.sea;
    }
    traj.final_state = Some(state);
    Ok(traj)
}

/// World position of a frame, for scenario checks.
pub fn frame_position(model: &RobotModel, state: &FloatingBaseState, frame: &str) -> Result<Vector3<f64>, SimError> {
    Ok(forward_kinematics(model, state, frame)?.translation.vector)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{gravity_forces, neutral_state, STANDARD_GRAVITY};
    use crate::fixtures;

    #[test]
    fn unconstrained_matches_mass_matrix_solve() {
        let model = fixtures::double_pendulum();
        let mut s = neutral_state(&model);
        s.q = DVector::from_vec(vec![0.4, -0.7]);
        s.nu = DVector::from_fn(model.nv(), |i, _| 0.2 * i as f64 - 0.5);
        let tau = DVector::from_vec(vec![0.3, -0.1]);
        let cfg = SimConfig::default();
        let acc = constrained_forward_dynamics(&model, &s, &tau, &Stance::free(&model, &s), &[], &cfg).unwrap();
        let m = mass_matrix(&model, &s).unwrap();
        let h = crate::dynamics::bias_forces(&model, &s, &cfg.gravity_vector()).unwrap();
        let mut btau = DVector::zeros(model.nv());
        btau.rows_mut(6, 2).copy_from(&tau);
        let expected = m.lu().solve(&(btau - h)).unwrap();
        assert!((acc.nudot - expected).amax() < 1e-10);
        assert_eq!(acc.forces.len(), 0);
    }

    #[test]
    fn box_on_two_points_is_static() {
        let model = fixtures::box_body();
        let mut s = neutral_state(&model);
        s.base_position.z = 0.1;
        let set = ContactSet::from_names(&model, &["left", "right"]).unwrap();
        let stance = Stance::capture(&model, &s, set).unwrap();
        let acc =
            constrained_forward_dynamics(&model, &s, &DVector::zeros(0), &stance, &[], &SimConfig::default()).unwrap();
        assert!(acc.nudot.amax() < 1e-9);
        let fz = acc.forces[2] + acc.forces[5];
        assert!((fz - 4.0 * STANDARD_GRAVITY).abs() < 1e-9);
    }

    #[test]
    fn redundant_surface_contact_uses_minimum_norm() {
        let model = fixtures::box_body();
        let s = neutral_state(&model);
        let set = ContactSet::from_names(&model, &["bottom", "left", "right"]).unwrap();
        let stance = Stance::capture(&model, &s, set).unwrap();
        let acc =
            constrained_forward_dynamics(&model, &s, &DVector::zeros(0), &stance, &[], &SimConfig::default()).unwrap();
        assert!(acc.redundant);
        assert!(acc.nudot.amax() < 1e-9);
        let total: f64 = (0..acc.forces.len() / 3).map(|k| acc.forces[3 * k + 2]).sum();
        assert!((total - 4.0 * STANDARD_GRAVITY).abs() < 1e-9);
    }

    #[test]
    fn hovering_is_a_fixed_point() {
        // Weightless: gravity compensation is zero torque and the state stays.
        let model = fixtures::double_pendulum();
        let s = neutral_state(&model);
        let cfg = SimConfig {
            gravity: [0.0; 3],
            ..Default::default()
        };
        let g = gravity_forces(&model, &s, &cfg.gravity_vector()).unwrap();
        let out = step(
            &model,
            &s,
            &g.rows(6, 2).into_owned(),
            &Stance::free(&model, &s),
            &[],
            &cfg,
            None,
        )
        .unwrap();
        assert_eq!(out.state, s);
    }

    #[test]
    fn fixed_base_weld_holds() {
        let model = fixtures::pendulum();
        let mut s = neutral_state(&model);
        s.q[0] = 0.5;
        let stance = Stance::free(&model, &s);
        let acc =
            constrained_forward_dynamics(&model, &s, &DVector::zeros(1), &stance, &[], &SimConfig::default()).unwrap();
        assert!(acc.nudot.rows(0, 6).amax() < 1e-12);
        let link = &model.links()[1];
        let i = link.inertia[(1, 1)] + link.mass;
        let expected = -link.mass * STANDARD_GRAVITY * 0.5f64.sin() / i;
        assert!((acc.nudot[6] - expected).abs() < 1e-9);
    }
}
