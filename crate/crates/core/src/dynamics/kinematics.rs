use nalgebra::{DMatrix, DVector, Isometry3, Matrix6, Translation3, Unit, UnitQuaternion, Vector3, Vector6};

use super::spatial::{ang, base_map, cross_motion, join, lin, mixed_twist, V6};
use super::{DynamicsError, FloatingBaseState};
use crate::model::{FrameRef, RobotModel};

/// Per-call forward pass: link poses, joint motion subspaces and link
/// velocities, all in world-origin spatial coordinates.
pub(crate) struct Kinematics {
    pub pose: Vec<Isometry3<f64>>,
    /// Motion subspace of each link's parent joint; zero for the base and
    /// fixed joints.
    pub subspace: Vec<V6>,
    pub base_map: Matrix6<f64>,
    pub vel: Vec<V6>,
}

impl Kinematics {
    pub fn new(model: &RobotModel, state: &FloatingBaseState) -> Self {
        let nodes = model.nodes();
        let nl = nodes.len();
        let mut pose = Vec::with_capacity(nl);
        let mut subspace = Vec::with_capacity(nl);
        let mut vel = Vec::with_capacity(nl);

        let base_pose = state.base_pose();
        let bmap = base_map(&state.base_position);
        let nu_b = state.nu.fixed_rows::<6>(0).into_owned();
        pose.push(base_pose);
        subspace.push(V6::zeros());
        vel.push(bmap * nu_b);

        for node in &nodes[1..] {
            let parent = node.parent.expect("non-base link has a parent");
            let joint_frame = pose[parent] * node.origin;
            match node.dof {
                Some(dof) => {
                    let a = joint_frame.rotation * node.axis;
                    let o = joint_frame.translation.vector;
                    let s = join(a, o.cross(&a));
                    let rot = UnitQuaternion::from_axis_angle(&Unit::new_unchecked(node.axis), state.q[dof]);
                    pose.push(joint_frame * Isometry3::from_parts(Translation3::identity(), rot));
                    vel.push(vel[parent] + s * state.nu[6 + dof]);
                    subspace.push(s);
                }
                None => {
                    pose.push(joint_frame);
                    vel.push(vel[parent]);
                    subspace.push(V6::zeros());
                }
            }
        }

        Self {
            pose,
            subspace,
            base_map: bmap,
            vel,
        }
    }

    /// Spatial accelerations for joint/base accelerations `nudot` (zero when
    /// `None`) with a uniform field `gravity` folded in as a fictitious base
    /// acceleration of `−gravity`.
    pub fn accelerations(
        &self,
        model: &RobotModel,
        state: &FloatingBaseState,
        nudot: Option<&DVector<f64>>,
        gravity: &Vector3<f64>,
    ) -> Vec<V6> {
        let nodes = model.nodes();
        let mut acc = Vec::with_capacity(nodes.len());
        let vb = state.base_linear_velocity();
        let wb = state.base_angular_velocity();
        let mut a0 = join(Vector3::zeros(), vb.cross(&wb) - gravity);
        if let Some(nd) = nudot {
            a0 += self.base_map * nd.fixed_rows::<6>(0);
        }
        acc.push(a0);
        for (i, node) in nodes.iter().enumerate().skip(1) {
            let parent = node.parent.expect("non-base link has a parent");
            let mut a = acc[parent];
            if let Some(dof) = node.dof {
                let s = self.subspace[i];
                a += cross_motion(&self.vel[i], &(s * state.nu[6 + dof]));
                if let Some(nd) = nudot {
                    a += s * nd[6 + dof];
                }
            }
            acc.push(a);
        }
        acc
    }

    pub fn frame_pose(&self, frame: &FrameRef) -> Isometry3<f64> {
        self.pose[frame.link] * frame.local
    }

    /// World-origin spatial Jacobian (angular rows first) of a link.
    pub fn spatial_jacobian(&self, model: &RobotModel, link: usize) -> DMatrix<f64> {
        let nodes = model.nodes();
        let mut j = DMatrix::zeros(6, model.nv());
        j.fixed_view_mut::<6, 6>(0, 0).copy_from(&self.base_map);
        let mut cur = Some(link);
        while let Some(i) = cur {
            if let Some(dof) = nodes[i].dof {
                j.fixed_view_mut::<6, 1>(0, 6 + dof).copy_from(&self.subspace[i]);
            }
            cur = nodes[i].parent;
        }
        j
    }

    /// Mixed Jacobian `[linear; angular]` of a point `p` (world) rigidly
    /// attached to `link`.
    pub fn point_jacobian(&self, model: &RobotModel, link: usize, p: &Vector3<f64>) -> DMatrix<f64> {
        let js = self.spatial_jacobian(model, link);
        let mut out = DMatrix::zeros(6, model.nv());
        for c in 0..model.nv() {
            let col = V6::from_iterator(js.column(c).iter().copied());
            let m = mixed_twist(&col, p);
            out.column_mut(c).copy_from(&m);
        }
        out
    }
}

fn resolve(model: &RobotModel, frame: &str) -> Result<FrameRef, DynamicsError> {
    model
        .frame(frame)
        .map_err(|_| DynamicsError::UnknownFrame(frame.to_string()))
}

/// World pose of a link, contact frame or contact point.
pub fn forward_kinematics(
    model: &RobotModel,
    state: &FloatingBaseState,
    frame: &str,
) -> Result<Isometry3<f64>, DynamicsError> {
    let f = resolve(model, frame)?;
    state.check(model)?;
    Ok(Kinematics::new(model, state).frame_pose(&f))
}

/// Mixed Jacobian (6 × (6+n)): `J ν = [ṗ; ω]` of the frame.
pub fn frame_jacobian(
    model: &RobotModel,
    state: &FloatingBaseState,
    frame: &str,
) -> Result<DMatrix<f64>, DynamicsError> {
    let f = resolve(model, frame)?;
    state.check(model)?;
    let kin = Kinematics::new(model, state);
    let p = kin.frame_pose(&f).translation.vector;
    Ok(kin.point_jacobian(model, f.link, &p))
}

/// `J̇ ν`: the frame's mixed acceleration `[p̈; ω̇]` at zero `ν̇`.
pub fn bias_acceleration(
    model: &RobotModel,
    state: &FloatingBaseState,
    frame: &str,
) -> Result<Vector6<f64>, DynamicsError> {
    let f = resolve(model, frame)?;
    state.check(model)?;
    let kin = Kinematics::new(model, state);
    let acc = kin.accelerations(model, state, None, &Vector3::zeros());
    Ok(point_bias(&kin, &acc, &f))
}

pub(crate) fn point_bias(kin: &Kinematics, acc: &[V6], f: &FrameRef) -> Vector6<f64> {
    let p = kin.frame_pose(f).translation.vector;
    let a = acc[f.link];
    let v = kin.vel[f.link];
    let w = ang(&v);
    let vp = lin(&v) - p.cross(&w);
    let ap = lin(&a) - p.cross(&ang(&a)) + w.cross(&vp);
    let wd = ang(&a);
    Vector6::new(ap.x, ap.y, ap.z, wd.x, wd.y, wd.z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn pendulum_tip_at_quarter_turn() {
        let model = fixtures::pendulum();
        let mut s = FloatingBaseState::at_rest(DVector::from_vec(vec![0.0]));
        let tip0 = forward_kinematics(&model, &s, "tip").unwrap();
        assert!((tip0.translation.vector - Vector3::new(0.0, 0.0, -1.0)).norm() < 1e-15);
        s.q[0] = FRAC_PI_2;
        let tip = forward_kinematics(&model, &s, "tip").unwrap();
        assert!((tip.translation.vector - Vector3::new(1.0, 0.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn base_translation_shifts_every_frame() {
        let model = fixtures::biped();
        let s = crate::dynamics::neutral_state(&model);
        let mut moved = s.clone();
        let d = Vector3::new(0.3, -1.25, 2.0);
        moved.base_position += d;
        for name in model.topological_order() {
            let a = forward_kinematics(&model, &s, name).unwrap();
            let b = forward_kinematics(&model, &moved, name).unwrap();
            assert_eq!(b.translation.vector, a.translation.vector + d);
        }
    }

    #[test]
    fn base_columns_are_identity_on_linear_block() {
        let model = fixtures::biped();
        let mut s = crate::dynamics::neutral_state(&model);
        s.base_orientation = UnitQuaternion::from_euler_angles(0.2, -0.4, 1.0);
        for frame in ["torso", "l_foot", "r_shank"] {
            let j = frame_jacobian(&model, &s, frame).unwrap();
            let block = j.view((0, 0), (3, 3));
            assert!((block - nalgebra::Matrix3::identity()).norm() == 0.0);
        }
        let j = frame_jacobian(&model, &s, "torso").unwrap();
        assert!(j.columns(6, model.n()).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn unknown_frame_is_an_error() {
        let model = fixtures::pendulum();
        let s = crate::dynamics::neutral_state(&model);
        assert!(matches!(
            frame_jacobian(&model, &s, "nope"),
            Err(DynamicsError::UnknownFrame(_))
        ));
    }

    #[test]
    fn zero_velocity_has_zero_bias() {
        let model = fixtures::biped();
        let s = crate::dynamics::neutral_state(&model);
        assert_eq!(bias_acceleration(&model, &s, "l_foot").unwrap(), Vector6::zeros());
    }

    #[test]
    fn spinning_pendulum_centripetal() {
        let model = fixtures::pendulum();
        let mut s = FloatingBaseState::at_rest(DVector::from_vec(vec![0.0]));
        s.nu[6] = 1.0;
        let b = bias_acceleration(&model, &s, "tip").unwrap();
        // l q̇² toward the pivot (+z from a tip hanging at −z).
        assert!((b - Vector6::new(0.0, 0.0, 1.0, 0.0, 0.0, 0.0)).norm() < 1e-14);
    }
}
