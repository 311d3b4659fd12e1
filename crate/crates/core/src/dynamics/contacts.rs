use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

use super::centroidal::com_from;
use super::kinematics::{point_bias, Kinematics};
use super::spatial::skew;
use super::{DynamicsError, FloatingBaseState};
use crate::model::{ContactPoint, FrameRef, RobotModel};

/// Activation flags over a model's contact frames. Each active frame
/// contributes its contact points, each carrying a 3-D force in world axes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContactSet {
    active: Vec<bool>,
}

impl ContactSet {
    pub fn all(model: &RobotModel) -> Self {
        Self {
            active: vec![true; model.contacts().len()],
        }
    }

    pub fn none(model: &RobotModel) -> Self {
        Self {
            active: vec![false; model.contacts().len()],
        }
    }

    pub fn from_names(model: &RobotModel, names: &[&str]) -> Result<Self, DynamicsError> {
        let mut set = Self::none(model);
        for name in names {
            set.set_active(model, name, true)?;
        }
        Ok(set)
    }

    pub fn set_active(&mut self, model: &RobotModel, name: &str, on: bool) -> Result<(), DynamicsError> {
        let idx = model
            .contacts()
            .iter()
            .position(|c| c.name == name)
            .ok_or_else(|| DynamicsError::UnknownFrame(name.to_string()))?;
        self.active[idx] = on;
        Ok(())
    }

    pub fn is_active(&self, contact: usize) -> bool {
        self.active[contact]
    }

    pub fn is_empty(&self) -> bool {
        !self.active.iter().any(|&a| a)
    }

    pub fn active_names<'m>(&self, model: &'m RobotModel) -> Vec<&'m str> {
        model
            .contacts()
            .iter()
            .zip(&self.active)
            .filter(|(_, &a)| a)
            .map(|(c, _)| c.name.as_str())
            .collect()
    }

    /// Active contact points in model order.
    pub fn points<'m>(&self, model: &'m RobotModel) -> Vec<&'m ContactPoint> {
        model
            .contact_points()
            .iter()
            .filter(|p| self.active[p.contact])
            .collect()
    }

    /// Number of force unknowns, `3 × points`.
    pub fn dim(&self, model: &RobotModel) -> usize {
        3 * self.points(model).len()
    }

    /// World positions of the active contact points.
    pub fn positions(&self, model: &RobotModel, state: &FloatingBaseState) -> Result<Vec<Vector3<f64>>, DynamicsError> {
        state.check(model)?;
        let kin = Kinematics::new(model, state);
        Ok(self
            .points(model)
            .iter()
            .map(|p| kin.frame_pose(&frame_of(p)).translation.vector)
            .collect())
    }

    /// Stacked linear-velocity Jacobian, `3k × (6+n)`.
    pub fn jacobian(&self, model: &RobotModel, state: &FloatingBaseState) -> Result<DMatrix<f64>, DynamicsError> {
        state.check(model)?;
        Ok(self.jacobian_from(model, &Kinematics::new(model, state)))
    }

    pub(crate) fn jacobian_from(&self, model: &RobotModel, kin: &Kinematics) -> DMatrix<f64> {
        let pts = self.points(model);
        let mut j = DMatrix::zeros(3 * pts.len(), model.nv());
        for (k, p) in pts.iter().enumerate() {
            let at = kin.frame_pose(&frame_of(p)).translation.vector;
            let jp = kin.point_jacobian(model, p.link, &at);
            j.rows_mut(3 * k, 3).copy_from(&jp.rows(0, 3));
        }
        j
    }

    /// Stacked `J̇ ν` of the contact points, length `3k`.
    pub fn bias(&self, model: &RobotModel, state: &FloatingBaseState) -> Result<DVector<f64>, DynamicsError> {
        state.check(model)?;
        Ok(self.bias_from(model, state, &Kinematics::new(model, state)))
    }

    pub(crate) fn bias_from(&self, model: &RobotModel, state: &FloatingBaseState, kin: &Kinematics) -> DVector<f64> {
        let pts = self.points(model);
        let acc = kin.accelerations(model, state, None, &Vector3::zeros());
        let mut b = DVector::zeros(3 * pts.len());
        for (k, p) in pts.iter().enumerate() {
            let a = point_bias(kin, &acc, &frame_of(p));
            b.rows_mut(3 * k, 3).copy_from(&a.fixed_rows::<3>(0));
        }
        b
    }

    /// Friction-cone inequalities `A f ≤ 0` over all active points,
    /// block-diagonal with one block per point. `facets` overrides each
    /// contact's declared facet count.
    pub fn friction_cones(
        &self,
        model: &RobotModel,
        state: &FloatingBaseState,
        facets: Option<usize>,
    ) -> Result<DMatrix<f64>, DynamicsError> {
        state.check(model)?;
        let kin = Kinematics::new(model, state);
        let pts = self.points(model);
        let rows: usize = pts.iter().map(|p| facets.unwrap_or(p.facets) + 1).sum();
        let mut a = DMatrix::zeros(rows, 3 * pts.len());
        let mut r = 0;
        for (k, p) in pts.iter().enumerate() {
            let rot = kin.frame_pose(&frame_of(p)).rotation.to_rotation_matrix();
            let block = friction_cone_rows(rot.matrix(), p.mu, facets.unwrap_or(p.facets));
            a.view_mut((r, 3 * k), (block.nrows(), 3)).copy_from(&block);
            r += block.nrows();
        }
        Ok(a)
    }
}

fn frame_of(p: &ContactPoint) -> FrameRef {
    FrameRef {
        link: p.link,
        local: p.local,
    }
}

/// Inner polyhedral approximation of a friction cone.
///
/// `rotation` is the contact frame in world axes (its z column is the
/// normal). Returns `facets + 1` rows `a` with `a · f ≤ 0`: one per polygon
/// edge, whose vertices lie on the true cone, then `−n · f ≤ 0`.
pub fn friction_cone_rows(rotation: &Matrix3<f64>, mu: f64, facets: usize) -> DMatrix<f64> {
    let n = rotation.column(2).into_owned();
    let inset = mu * (PI / facets as f64).cos();
    let mut out = DMatrix::zeros(facets + 1, 3);
    for k in 0..facets {
        let th = (2 * k + 1) as f64 * PI / facets as f64;
        let d = rotation * Vector3::new(th.cos(), th.sin(), 0.0);
        out.row_mut(k).copy_from(&(d - n * inset).transpose());
    }
    out.row_mut(facets).copy_from(&(-n).transpose());
    out
}

/// Map from stacked contact forces to the centroidal momentum rate:
/// `Ḣ = X f + [m g; 0]`, with block `[I₃; skew(p − c)]` per point.
pub fn contact_map(
    model: &RobotModel,
    state: &FloatingBaseState,
    contacts: &ContactSet,
) -> Result<DMatrix<f64>, DynamicsError> {
    if contacts.points(model).is_empty() {
        return Err(DynamicsError::NoContacts);
    }
    let positions = contacts.positions(model, state)?;
    let kin = Kinematics::new(model, state);
    let c = com_from(model, &kin);
    let mut x = DMatrix::zeros(6, 3 * positions.len());
    for (k, p) in positions.iter().enumerate() {
        x.view_mut((0, 3 * k), (3, 3)).copy_from(&Matrix3::identity());
        x.view_mut((3, 3 * k), (3, 3)).copy_from(&skew(&(p - c)));
    }
    Ok(x)
}
