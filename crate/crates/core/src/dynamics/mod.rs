//! Floating-base rigid-body dynamics.
//!
//! Velocities use the mixed representation throughout the public API: the
//! base twist is `[v_B; ω]` with `v_B` the world-frame velocity of the base
//! origin and `ω` the angular velocity in world axes, so
//! `ν = [v_B; ω; q̇]`. Frame twists, Jacobian rows, wrenches and centroidal
//! momentum all put the linear part first.
//!
//! Every quantity is computed by propagation over the tree; results are pure
//! functions of `(model, state)`.

mod centroidal;
mod contacts;
pub(crate) mod inverse;
pub(crate) mod kinematics;
pub(crate) mod spatial;

use nalgebra::{DVector, Isometry3, UnitQuaternion, Vector3, Vector6};
use thiserror::Error;

use crate::model::{ModelError, RobotModel};

pub use centroidal::{
    center_of_mass, centroidal_momentum, com_velocity, kinetic_energy, potential_energy, CentroidalMomentum,
};
pub use contacts::{contact_map, friction_cone_rows, ContactSet};
pub use inverse::{bias_forces, gravity_forces, mass_matrix, rnea};
pub use kinematics::{bias_acceleration, forward_kinematics, frame_jacobian};
pub use spatial::skew;

/// Standard gravity, m/s², along world −z.
pub const STANDARD_GRAVITY: f64 = 9.80665;

pub fn default_gravity() -> Vector3<f64> {
    Vector3::new(0.0, 0.0, -STANDARD_GRAVITY)
}

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("unknown frame `{0}`")]
    UnknownFrame(String),
    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("empty contact set")]
    NoContacts,
}

impl From<ModelError> for DynamicsError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::UnknownFrame(f) => DynamicsError::UnknownFrame(f),
            other => DynamicsError::UnknownFrame(other.to_string()),
        }
    }
}

/// Configuration and generalized velocity of a floating-base robot.
#[derive(Clone, Debug, PartialEq)]
pub struct FloatingBaseState {
    /// Base-to-world rotation (Hamilton, scalar first in serialized form).
    pub base_orientation: UnitQuaternion<f64>,
    pub base_position: Vector3<f64>,
    /// Joint positions, rad.
    pub q: DVector<f64>,
    /// `[v_B; ω; q̇]`, length `6 + n`.
    pub nu: DVector<f64>,
}

impl FloatingBaseState {
    /// Identity base, zero velocity, the given joint positions.
    pub fn at_rest(q: DVector<f64>) -> Self {
        let nv = 6 + q.len();
        Self {
            base_orientation: UnitQuaternion::identity(),
            base_position: Vector3::zeros(),
            q,
            nu: DVector::zeros(nv),
        }
    }

    pub fn n(&self) -> usize {
        self.q.len()
    }

    pub fn base_pose(&self) -> Isometry3<f64> {
        Isometry3::from_parts(self.base_position.into(), self.base_orientation)
    }

    pub fn base_linear_velocity(&self) -> Vector3<f64> {
        self.nu.fixed_rows::<3>(0).into_owned()
    }

    pub fn base_angular_velocity(&self) -> Vector3<f64> {
        self.nu.fixed_rows::<3>(3).into_owned()
    }

    pub fn qdot(&self) -> DVector<f64> {
        self.nu.rows(6, self.n()).into_owned()
    }

    pub fn check(&self, model: &RobotModel) -> Result<(), DynamicsError> {
        if self.q.len() != model.n() {
            return Err(DynamicsError::Dimension {
                what: "q",
                expected: model.n(),
                got: self.q.len(),
            });
        }
        if self.nu.len() != model.nv() {
            return Err(DynamicsError::Dimension {
                what: "nu",
                expected: model.nv(),
                got: self.nu.len(),
            });
        }
        Ok(())
    }

    /// Advance the configuration along velocity `nu` for `dt` seconds. The
    /// base rotation is updated by the exponential map of `ω dt` (world
    /// axes) and renormalized. The stored velocity is left unchanged.
    pub fn integrate_positions(&self, nu: &DVector<f64>, dt: f64) -> Self {
        let v = nu.fixed_rows::<3>(0).into_owned();
        let w = nu.fixed_rows::<3>(3).into_owned();
        let rot = UnitQuaternion::from_scaled_axis(w * dt) * self.base_orientation;
        Self {
            base_orientation: UnitQuaternion::new_normalize(rot.into_inner()),
            base_position: self.base_position + v * dt,
            q: &self.q + nu.rows(6, self.n()) * dt,
            nu: self.nu.clone(),
        }
    }

    /// Configuration advanced along its own velocity.
    pub fn advanced(&self, dt: f64) -> Self {
        self.integrate_positions(&self.nu, dt)
    }

    pub fn is_finite(&self) -> bool {
        self.base_orientation.coords.iter().all(|v| v.is_finite())
            && self.base_position.iter().all(|v| v.is_finite())
            && self.q.iter().all(|v| v.is_finite())
            && self.nu.iter().all(|v| v.is_finite())
    }
}

/// Identity base at the origin, joints at the middle of their limits (0 when
/// unbounded), zero velocity.
pub fn neutral_state(model: &RobotModel) -> FloatingBaseState {
    let q = DVector::from_iterator(model.n(), (0..model.n()).map(|i| model.dof_joint(i).limits.midpoint()));
    FloatingBaseState::at_rest(q)
}

/// Axes in which a wrench's components are expressed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axes {
    World,
    Local,
}

/// Force and torque about the origin of `frame`, in `axes`.
///
/// The special frame name `"world"` denotes the world origin.
#[derive(Clone, Debug, PartialEq)]
pub struct SpatialWrench {
    /// N
    pub force: Vector3<f64>,
    /// N·m
    pub torque: Vector3<f64>,
    pub frame: String,
    pub axes: Axes,
}

pub const WORLD_FRAME: &str = "world";

impl SpatialWrench {
    pub fn new(frame: impl Into<String>, axes: Axes, force: Vector3<f64>, torque: Vector3<f64>) -> Self {
        Self {
            force,
            torque,
            frame: frame.into(),
            axes,
        }
    }

    /// Mixed-representation wrench (world axes) at a frame origin.
    pub fn mixed(frame: impl Into<String>, force: Vector3<f64>, torque: Vector3<f64>) -> Self {
        Self::new(frame, Axes::World, force, torque)
    }

    pub fn zero(frame: impl Into<String>, axes: Axes) -> Self {
        Self::new(frame, axes, Vector3::zeros(), Vector3::zeros())
    }

    /// `[force; torque]`.
    pub fn to_vector(&self) -> Vector6<f64> {
        Vector6::new(
            self.force.x,
            self.force.y,
            self.force.z,
            self.torque.x,
            self.torque.y,
            self.torque.z,
        )
    }

    /// World-axes force and torque about the world origin, given the world
    /// pose of `self.frame`.
    pub fn world_components(&self, frame_pose: &Isometry3<f64>) -> (Vector3<f64>, Vector3<f64>) {
        let r = frame_pose.rotation;
        let (f, n) = match self.axes {
            Axes::World => (self.force, self.torque),
            Axes::Local => (r * self.force, r * self.torque),
        };
        let p = frame_pose.translation.vector;
        (f, n + p.cross(&f))
    }

    /// Re-express the same physical wrench about the origin of another frame
    /// (adjoint-transpose map), given both world poses.
    pub fn transformed(
        &self,
        from_pose: &Isometry3<f64>,
        to_frame: impl Into<String>,
        to_pose: &Isometry3<f64>,
        axes: Axes,
    ) -> Self {
        let (f, n_o) = self.world_components(from_pose);
        let p = to_pose.translation.vector;
        let n = n_o - p.cross(&f);
        let (f, n) = match axes {
            Axes::World => (f, n),
            Axes::Local => {
                let rt = to_pose.rotation.inverse();
                (rt * f, rt * n)
            }
        };
        Self::new(to_frame, axes, f, n)
    }

    /// Re-express at a named model frame.
    pub fn expressed_in(
        &self,
        model: &RobotModel,
        state: &FloatingBaseState,
        frame: &str,
        axes: Axes,
    ) -> Result<Self, DynamicsError> {
        let from = frame_pose(model, state, &self.frame)?;
        let to = frame_pose(model, state, frame)?;
        Ok(self.transformed(&from, frame, &to, axes))
    }
}

fn frame_pose(model: &RobotModel, state: &FloatingBaseState, frame: &str) -> Result<Isometry3<f64>, DynamicsError> {
    if frame == WORLD_FRAME {
        Ok(Isometry3::identity())
    } else {
        forward_kinematics(model, state, frame)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrench_transform_round_trip() {
        let a = Isometry3::new(Vector3::new(0.1, 0.2, 0.3), Vector3::new(0.3, -0.2, 0.9));
        let b = Isometry3::new(Vector3::new(-1.0, 0.5, 0.0), Vector3::new(-0.4, 0.1, 0.2));
        let w = SpatialWrench::new(
            "a",
            Axes::Local,
            Vector3::new(1.0, -2.0, 3.0),
            Vector3::new(0.5, 0.1, -0.7),
        );
        let there = w.transformed(&a, "b", &b, Axes::Local);
        let back = there.transformed(&b, "a", &a, Axes::Local);
        assert!((back.to_vector() - w.to_vector()).norm() < 1e-13);
        // Power is frame independent.
        let (f0, n0) = w.world_components(&a);
        let (f1, n1) = there.world_components(&b);
        assert!((f0 - f1).norm() < 1e-13 && (n0 - n1).norm() < 1e-13);
    }

    #[test]
    fn quaternion_stays_unit_after_many_steps() {
        let mut s = FloatingBaseState::at_rest(DVector::zeros(0));
        s.nu = DVector::from_vec(vec![0.0, 0.0, 0.0, 0.7, -1.3, 2.1]);
        for _ in 0..100_000 {
            s = s.advanced(1e-3);
        }
        assert!((s.base_orientation.into_inner().norm() - 1.0).abs() < 1e-9);
    }
}
