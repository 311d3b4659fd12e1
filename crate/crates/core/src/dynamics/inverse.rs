use nalgebra::{DMatrix, DVector, Isometry3, Matrix6, Vector3};

use super::kinematics::Kinematics;
use super::spatial::{cross_force, force_at, spatial_inertia, V6};
use super::{DynamicsError, FloatingBaseState, SpatialWrench, WORLD_FRAME};
use crate::model::{LinkSpec, RobotModel};

/// Spatial inertia of a link about the world origin, world axes.
pub(crate) fn world_inertia(link: &LinkSpec, pose: &Isometry3<f64>) -> Matrix6<f64> {
    let r = pose.rotation.to_rotation_matrix();
    let c = pose * nalgebra::Point3::from(link.com);
    let ic = r.matrix() * link.inertia * r.matrix().transpose();
    spatial_inertia(link.mass, &c.coords, &ic)
}

pub(crate) fn world_inertias(model: &RobotModel, kin: &Kinematics) -> Vec<Matrix6<f64>> {
    model
        .links()
        .iter()
        .zip(&kin.pose)
        .map(|(l, p)| world_inertia(l, p))
        .collect()
}

/// External wrenches accumulated per link as world-origin spatial forces.
pub(crate) fn external_forces(
    model: &RobotModel,
    kin: &Kinematics,
    external: &[SpatialWrench],
) -> Result<Vec<V6>, DynamicsError> {
    let mut out = vec![V6::zeros(); model.links().len()];
    for w in external {
        if w.frame == WORLD_FRAME {
            return Err(DynamicsError::UnknownFrame(w.frame.clone()));
        }
        let f = model
            .frame(&w.frame)
            .map_err(|_| DynamicsError::UnknownFrame(w.frame.clone()))?;
        let (force, n_o) = w.world_components(&kin.frame_pose(&f));
        out[f.link] += force_at(&Vector3::zeros(), &force, &n_o);
    }
    Ok(out)
}

/// Net spatial force each link needs for the accelerations `acc`, minus the
/// external forces acting on it.
pub(crate) fn body_forces(inertias: &[Matrix6<f64>], kin: &Kinematics, acc: &[V6], ext: &[V6]) -> Vec<V6> {
    (0..inertias.len())
        .map(|i| {
            let iv = inertias[i] * kin.vel[i];
            inertias[i] * acc[i] + cross_force(&kin.vel[i], &iv) - ext[i]
        })
        .collect()
}

/// Sum body forces over subtrees: entry `i` becomes the force transmitted
/// from the parent of `i` across its joint.
pub(crate) fn accumulate(model: &RobotModel, mut f: Vec<V6>) -> Vec<V6> {
    for i in (1..f.len()).rev() {
        let p = model.parent_link(i).expect("non-base link has a parent");
        let fi = f[i];
        f[p] += fi;
    }
    f
}

pub(crate) fn project(model: &RobotModel, kin: &Kinematics, transmitted: &[V6]) -> DVector<f64> {
    let mut tau = DVector::zeros(model.nv());
    tau.fixed_rows_mut::<6>(0)
        .copy_from(&(kin.base_map.transpose() * transmitted[0]));
    for (i, node) in model.nodes().iter().enumerate().skip(1) {
        if let Some(dof) = node.dof {
            tau[6 + dof] = kin.subspace[i].dot(&transmitted[i]);
        }
    }
    tau
}

fn check_nudot(model: &RobotModel, nudot: &DVector<f64>) -> Result<(), DynamicsError> {
    if nudot.len() != model.nv() {
        return Err(DynamicsError::Dimension {
            what: "nudot",
            expected: model.nv(),
            got: nudot.len(),
        });
    }
    Ok(())
}

/// Floating-base inverse dynamics: `M ν̇ + C ν + g − Σ Jᵀ w` for the listed
/// external wrenches. The first six rows are the base force `[F; n_B]`
/// (torque about the base origin, world axes) that would be needed to
/// realize `ν̇`; a physically consistent motion makes them zero.
pub fn rnea(
    model: &RobotModel,
    state: &FloatingBaseState,
    nudot: &DVector<f64>,
    external: &[SpatialWrench],
    gravity: &Vector3<f64>,
) -> Result<DVector<f64>, DynamicsError> {
    state.check(model)?;
    check_nudot(model, nudot)?;
    let kin = Kinematics::new(model, state);
    let acc = kin.accelerations(model, state, Some(nudot), gravity);
    let ext = external_forces(model, &kin, external)?;
    let inertias = world_inertias(model, &kin);
    let f = accumulate(model, body_forces(&inertias, &kin, &acc, &ext));
    Ok(project(model, &kin, &f))
}

/// Composite-rigid-body mass matrix, `(6+n) × (6+n)`.
pub fn mass_matrix(model: &RobotModel, state: &FloatingBaseState) -> Result<DMatrix<f64>, DynamicsError> {
    state.check(model)?;
    let kin = Kinematics::new(model, state);
    Ok(mass_matrix_from(model, &kin))
}

pub(crate) fn mass_matrix_from(model: &RobotModel, kin: &Kinematics) -> DMatrix<f64> {
    let nodes = model.nodes();
    let mut ic = world_inertias(model, kin);
    for i in (1..ic.len()).rev() {
        let p = nodes[i].parent.expect("non-base link has a parent");
        let ci = ic[i];
        ic[p] += ci;
    }
    let nv = model.nv();
    let s0 = kin.base_map;
    let mut m = DMatrix::zeros(nv, nv);
    m.fixed_view_mut::<6, 6>(0, 0).copy_from(&(s0.transpose() * ic[0] * s0));
    for (i, node) in nodes.iter().enumerate().skip(1) {
        let Some(dof) = node.dof else { continue };
        let col = 6 + dof;
        let f = ic[i] * kin.subspace[i];
        m[(col, col)] = kin.subspace[i].dot(&f);
        let mut k = node.parent;
        while let Some(a) = k {
            if let Some(ad) = nodes[a].dof {
                let v = kin.subspace[a].dot(&f);
                m[(6 + ad, col)] = v;
                m[(col, 6 + ad)] = v;
            }
            k = nodes[a].parent;
        }
        let base = s0.transpose() * f;
        for r in 0..6 {
            m[(r, col)] = base[r];
            m[(col, r)] = base[r];
        }
    }
    m
}

/// `C(q, ν) ν + g(q)`, i.e. inverse dynamics at zero acceleration.
pub fn bias_forces(
    model: &RobotModel,
    state: &FloatingBaseState,
    gravity: &Vector3<f64>,
) -> Result<DVector<f64>, DynamicsError> {
    rnea(model, state, &DVector::zeros(model.nv()), &[], gravity)
}

/// `g(q)`: generalized force needed to hold the configuration against
/// gravity. Its linear base rows are `−m g_vec`, the total weight support.
pub fn gravity_forces(
    model: &RobotModel,
    state: &FloatingBaseState,
    gravity: &Vector3<f64>,
) -> Result<DVector<f64>, DynamicsError> {
    let still = FloatingBaseState {
        nu: DVector::zeros(state.nu.len()),
        ..state.clone()
    };
    bias_forces(model, &still, gravity)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{default_gravity, neutral_state, Axes, STANDARD_GRAVITY};
    use crate::fixtures;

    #[test]
    fn pendulum_gravity_torque() {
        let model = fixtures::pendulum();
        let link = &model.links()[1];
        let l = link.com.norm();
        for &q in &[0.0, 0.3, -1.1, 2.0] {
            let s = FloatingBaseState::at_rest(DVector::from_vec(vec![q]));
            let g = gravity_forces(&model, &s, &default_gravity()).unwrap();
            let expected = link.mass * STANDARD_GRAVITY * l * q.sin();
            assert!((g[6] - expected).abs() < 1e-12, "{} vs {expected}", g[6]);
        }
    }

    #[test]
    fn no_gravity_no_motion_is_zero() {
        let model = fixtures::biped();
        let s = neutral_state(&model);
        let r = rnea(&model, &s, &DVector::zeros(model.nv()), &[], &Vector3::zeros()).unwrap();
        assert_eq!(r, DVector::zeros(model.nv()));
    }

    #[test]
    fn gravity_base_rows_support_weight() {
        let model = fixtures::biped();
        let s = neutral_state(&model);
        let g = gravity_forces(&model, &s, &default_gravity()).unwrap();
        let w = model.total_mass() * STANDARD_GRAVITY;
        assert!((g.fixed_rows::<3>(0) - Vector3::new(0.0, 0.0, w)).norm() < 1e-12);
    }

    #[test]
    fn weight_cancelled_at_com_leaves_base_rows_zero() {
        let model = fixtures::biped();
        let s = neutral_state(&model);
        let c = crate::dynamics::center_of_mass(&model, &s).unwrap();
        let weight = model.total_mass() * STANDARD_GRAVITY;
        // Force through the CoM, written about the world origin.
        let w = SpatialWrench::new(
            WORLD_FRAME,
            Axes::World,
            Vector3::z() * weight,
            c.cross(&(Vector3::z() * weight)),
        );
        let at_torso = w.expressed_in(&model, &s, "torso", Axes::World).unwrap();
        let r = rnea(&model, &s, &DVector::zeros(model.nv()), &[at_torso], &default_gravity()).unwrap();
        assert!(r.rows(0, 6).amax() < 1e-10, "{}", r.rows(0, 6));
    }

    #[test]
    fn pendulum_inertia_parallel_axis() {
        let model = fixtures::pendulum();
        let link = &model.links()[1];
        let s = FloatingBaseState::at_rest(DVector::from_vec(vec![0.4]));
        let m = mass_matrix(&model, &s).unwrap();
        let axis_inertia = link.inertia[(1, 1)];
        let expected = axis_inertia + link.mass * link.com.norm_squared();
        assert!((m[(6, 6)] - expected).abs() < 1e-12);
        assert!((m.view((0, 0), (3, 3)) - nalgebra::Matrix3::identity() * model.total_mass()).amax() < 1e-12);
    }

    #[test]
    fn bias_forces_is_rnea_at_zero_acceleration() {
        let model = fixtures::biped();
        let mut s = neutral_state(&model);
        s.nu = DVector::from_fn(model.nv(), |i, _| 0.1 * (i as f64) - 0.3);
        let g = default_gravity();
        let a = bias_forces(&model, &s, &g).unwrap();
        let b = rnea(&model, &s, &DVector::zeros(model.nv()), &[], &g).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn dimension_mismatch_reported() {
        let model = fixtures::pendulum();
        let s = neutral_state(&model);
        let err = rnea(&model, &s, &DVector::zeros(3), &[], &default_gravity()).unwrap_err();
        assert!(matches!(err, DynamicsError::Dimension { what: "nudot", .. }));
    }
}
