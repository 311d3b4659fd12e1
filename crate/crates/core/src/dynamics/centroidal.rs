use nalgebra::{Point3, Vector3, Vector6};

use super::inverse::world_inertias;
use super::kinematics::Kinematics;
use super::spatial::{ang, lin};
use super::{DynamicsError, FloatingBaseState};
use crate::model::RobotModel;

/// Total momentum about the centre of mass, world axes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CentroidalMomentum {
    /// kg·m/s
    pub linear: Vector3<f64>,
    /// kg·m²/s
    pub angular: Vector3<f64>,
}

impl CentroidalMomentum {
    /// `[linear; angular]`.
    pub fn to_vector(&self) -> Vector6<f64> {
        let (l, a) = (self.linear, self.angular);
        Vector6::new(l.x, l.y, l.z, a.x, a.y, a.z)
    }
}

pub(crate) fn com_from(model: &RobotModel, kin: &Kinematics) -> Vector3<f64> {
    let weighted: Vector3<f64> = model
        .links()
        .iter()
        .zip(&kin.pose)
        .map(|(l, p)| (p * Point3::from(l.com)).coords * l.mass)
        .sum();
    weighted / model.total_mass()
}

pub(crate) fn momentum_from(model: &RobotModel, kin: &Kinematics) -> CentroidalMomentum {
    let inertias = world_inertias(model, kin);
    let h: Vector6<f64> = inertias.iter().zip(&kin.vel).map(|(i, v)| i * v).sum();
    let c = com_from(model, kin);
    let p = lin(&h);
    CentroidalMomentum {
        linear: p,
        angular: ang(&h) - c.cross(&p),
    }
}

pub fn center_of_mass(model: &RobotModel, state: &FloatingBaseState) -> Result<Vector3<f64>, DynamicsError> {
    state.check(model)?;
    Ok(com_from(model, &Kinematics::new(model, state)))
}

pub fn com_velocity(model: &RobotModel, state: &FloatingBaseState) -> Result<Vector3<f64>, DynamicsError> {
    Ok(centroidal_momentum(model, state)?.linear / model.total_mass())
}

pub fn centroidal_momentum(model: &RobotModel, state: &FloatingBaseState) -> Result<CentroidalMomentum, DynamicsError> {
    state.check(model)?;
    Ok(momentum_from(model, &Kinematics::new(model, state)))
}

/// `½ Σ vᵢᵀ Iᵢ vᵢ`, J.
pub fn kinetic_energy(model: &RobotModel, state: &FloatingBaseState) -> Result<f64, DynamicsError> {
    state.check(model)?;
    let kin = Kinematics::new(model, state);
    let inertias = world_inertias(model, &kin);
    Ok(0.5 * inertias.iter().zip(&kin.vel).map(|(i, v)| v.dot(&(i * v))).sum::<f64>())
}

/// `−m gᵀ c`, J, zero at the world origin.
pub fn potential_energy(
    model: &RobotModel,
    state: &FloatingBaseState,
    gravity: &Vector3<f64>,
) -> Result<f64, DynamicsError> {
    Ok(-model.total_mass() * gravity.dot(&center_of_mass(model, state)?))
}
