mod common;

use common::{fd_jacobian, random_state, random_tree, rng, H};
use nalgebra::{DMatrix, DVector, Vector3};
use wholebody::dynamics::{
    bias_acceleration, center_of_mass, centroidal_momentum, default_gravity, forward_kinematics, frame_jacobian,
    mass_matrix, rnea, Axes, FloatingBaseState, SpatialWrench,
};
use wholebody::fixtures;

#[test]
fn jacobian_matches_finite_differences() {
    let model = fixtures::biped();
    let mut r = rng(7);
    for _ in 0..10 {
        let s = random_state(&mut r, &model);
        for frame in ["torso", "l_thigh", "r_foot", "l_foot"] {
            let j = frame_jacobian(&model, &s, frame).unwrap();
            let err = (j - fd_jacobian(&model, &s, frame)).amax();
            assert!(err < 1e-5, "{frame}: {err}");
        }
    }
}

#[test]
fn pendulum_tip_column_matches_finite_difference() {
    let model = fixtures::pendulum();
    let s = FloatingBaseState::at_rest(DVector::from_vec(vec![0.0]));
    let j = frame_jacobian(&model, &s, "tip").unwrap();
    let fd = fd_jacobian(&model, &s, "tip");
    assert!((j.column(6) - fd.column(6)).amax() < 1e-6);
}

#[test]
fn bias_acceleration_matches_finite_differences() {
    let model = fixtures::biped();
    let mut r = rng(8);
    for _ in 0..10 {
        let s = random_state(&mut r, &model);
        for frame in ["l_foot", "r_shank", "torso"] {
            let jp = frame_jacobian(&model, &s.advanced(H), frame).unwrap();
            let jm = frame_jacobian(&model, &s.advanced(-H), frame).unwrap();
            let fd = (jp - jm) * &s.nu / (2.0 * H);
            let b = bias_acceleration(&model, &s, frame).unwrap();
            let err = (DVector::from_column_slice(b.as_slice()) - fd).amax();
            assert!(err < 1e-5, "{frame}: {err}");
        }
    }
}

#[test]
fn crba_matches_rnea_columns_on_random_trees() {
    let mut r = rng(11);
    for _ in 0..20 {
        let links = 1 + (rand::Rng::random_range(&mut r, 0..10usize));
        let model = random_tree(&mut r, links);
        let mut s = random_state(&mut r, &model);
        let m = mass_matrix(&model, &s).unwrap();
        s.nu.fill(0.0);
        let mut cols = DMatrix::zeros(model.nv(), model.nv());
        for k in 0..model.nv() {
            let mut e = DVector::zeros(model.nv());
            e[k] = 1.0;
            cols.set_column(k, &rnea(&model, &s, &e, &[], &Vector3::zeros()).unwrap());
        }
        assert!((&m - &cols).norm() / m.norm() < 1e-12);
        assert!((&m - m.transpose()).amax() < 1e-12);
        assert!(m.clone().cholesky().is_some());
    }
}

#[test]
fn linear_momentum_is_mass_times_com_rate() {
    let model = fixtures::biped();
    let mut r = rng(3);
    for _ in 0..10 {
        let s = random_state(&mut r, &model);
        let dc = (center_of_mass(&model, &s.advanced(H)).unwrap() - center_of_mass(&model, &s.advanced(-H)).unwrap())
            / (2.0 * H);
        let h = centroidal_momentum(&model, &s).unwrap();
        assert!((h.linear - dc * model.total_mass()).amax() < 1e-6);
    }
}

#[test]
fn external_wrench_enters_through_jacobian_transpose() {
    let model = fixtures::biped();
    let mut r = rng(5);
    let s = random_state(&mut r, &model);
    let nudot = DVector::from_fn(model.nv(), |i, _| 0.1 * i as f64);
    let g = default_gravity();
    let w = SpatialWrench::new(
        "l_foot",
        Axes::World,
        Vector3::new(3.0, -1.0, 40.0),
        Vector3::new(0.2, 0.5, -0.1),
    );
    let j = frame_jacobian(&model, &s, "l_foot").unwrap();
    let with = rnea(&model, &s, &nudot, std::slice::from_ref(&w), &g).unwrap();
    let without = rnea(&model, &s, &nudot, &[], &g).unwrap();
    let expected = without - j.transpose() * DVector::from_column_slice(w.to_vector().as_slice());
    assert!((with - expected).amax() < 1e-10);
}

#[test]
fn joint_motion_moves_only_its_subtree() {
    let model = fixtures::biped();
    let s = wholebody::dynamics::neutral_state(&model);
    let mut moved = s.clone();
    moved.q[model.joint_dof("l_knee").unwrap()] += 0.3;
    for name in model.topological_order() {
        let a = forward_kinematics(&model, &s, name).unwrap();
        let b = forward_kinematics(&model, &moved, name).unwrap();
        let changed = (a.translation.vector - b.translation.vector).norm() > 0.0 || a.rotation != b.rotation;
        assert_eq!(changed, name == "l_shank", "{name}");
    }
}
