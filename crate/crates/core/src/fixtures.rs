//! Bundled example models.
//!
//! The sources are the files under `fixtures/` in this crate; they are
//! embedded so examples and tests run from any working directory.

use nalgebra::DVector;

use crate::dynamics::FloatingBaseState;
use crate::model::{load_model, RobotModel};
use crate::sim::balanced_stance;

pub const PENDULUM: &str = include_str!("../fixtures/pendulum.urdf");
pub const FREE_ROD: &str = include_str!("../fixtures/free_rod.urdf");
pub const BOX: &str = include_str!("../fixtures/box.urdf");
pub const BIPED: &str = include_str!("../fixtures/biped.urdf");
pub const ARM: &str = include_str!("../fixtures/arm.urdf");
pub const DOUBLE_PENDULUM: &str = include_str!("../fixtures/double_pendulum.urdf");
pub const CYCLIC: &str = include_str!("../fixtures/cyclic.urdf");

fn load(src: &str) -> RobotModel {
    load_model(src).expect("bundled fixture is valid")
}

/// Fixed pivot, 2 kg bob 1 m below it on axis −y, with a `tip` frame.
pub fn pendulum() -> RobotModel {
    load(PENDULUM)
}

/// The pendulum's rod as a free body with a `pin` contact at its top.
pub fn free_rod() -> RobotModel {
    load(FREE_ROD)
}

/// Free box with a four-vertex `bottom` surface and `left`/`right` points.
pub fn box_body() -> RobotModel {
    load(BOX)
}

/// Torso, two thighs, two shanks, point feet `l_foot` and `r_foot`.
pub fn biped() -> RobotModel {
    load(BIPED)
}

/// Fixed-base 3-joint arm with an FT sensor joint `arm_ft` and a `hand`.
pub fn arm() -> RobotModel {
    load(ARM)
}

/// Two links hanging from a floating base.
pub fn double_pendulum() -> RobotModel {
    load(DOUBLE_PENDULUM)
}

/// Joint angles of the biped's standing posture: hips straight, knees bent.
pub fn biped_posture(model: &RobotModel) -> DVector<f64> {
    let mut q = DVector::zeros(model.n());
    for (joint, angle) in [("l_hip", 0.0), ("r_hip", 0.0), ("l_knee", 0.8), ("r_knee", 0.8)] {
        q[model.joint_dof(joint).expect("biped joint")] = angle;
    }
    q
}

/// The biped at rest in [`biped_posture`], CoM above the midpoint of its
/// feet, feet at the world origin plane.
pub fn biped_standing(model: &RobotModel) -> FloatingBaseState {
    balanced_stance(model, biped_posture(model), &["l_foot", "r_foot"]).expect("biped has both feet")
}
