mod common;

use nalgebra::{DVector, UnitQuaternion, Vector3};
use wholebody::dynamics::{
    center_of_mass, kinetic_energy, mass_matrix, neutral_state, potential_energy, rnea, ContactSet, FloatingBaseState,
    STANDARD_GRAVITY,
};
use wholebody::fixtures;
use wholebody::model::RobotModel;
use wholebody::sim::{
    constrained_forward_dynamics, run_scenario, step, BalanceController, Passive, PushEvent, Script, SeaState,
    SimConfig, Stance,
};
use wholebody::wbc::ControllerConfig;

fn rod_state(theta: f64, theta_dot: f64) -> FloatingBaseState {
    let axis = -Vector3::y_axis();
    let mut s = FloatingBaseState::at_rest(DVector::zeros(0));
    s.base_orientation = UnitQuaternion::from_axis_angle(&axis, theta);
    s.nu.fixed_rows_mut::<3>(3).copy_from(&(axis.into_inner() * theta_dot));
    s
}

#[test]
fn pinned_rod_is_the_pendulum() {
    let rod = fixtures::free_rod();
    let pendulum = fixtures::pendulum();
    let cfg = SimConfig::default();
    // m g l / I about the pin, I = I_yy + m l².
    let k = 2.0 * STANDARD_GRAVITY * 1.0 / (0.02 + 2.0);
    for &(theta, rate) in &[(0.3, 0.0), (-1.1, 0.7), (2.5, -1.3)] {
        let s = rod_state(theta, rate);
        let stance = Stance::capture(&rod, &s, ContactSet::all(&rod)).unwrap();
        let acc = constrained_forward_dynamics(&rod, &s, &DVector::zeros(0), &stance, &[], &cfg).unwrap();
        let theta_ddot = -acc.nudot[4];
        let expected = -k * f64::sin(theta);
        assert!((theta_ddot - expected).abs() < 1e-9, "{theta_ddot} vs {expected}");

        let mut p = neutral_state(&pendulum);
        p.q[0] = theta;
        p.nu[6] = rate;
        let fixed = Stance::free(&pendulum, &p);
        let pacc = constrained_forward_dynamics(&pendulum, &p, &DVector::zeros(1), &fixed, &[], &cfg).unwrap();
        assert!((pacc.nudot[6] - expected).abs() < 1e-9);
    }
}

#[test]
fn free_fall_is_ballistic() {
    let model = fixtures::box_body();
    let cfg = SimConfig::default();
    let z0 = 1.0;
    let mut s = neutral_state(&model);
    s.base_position.z = z0;
    let stance = Stance::free(&model, &s);
    let steps = 1000;
    for _ in 0..steps {
        s = step(&model, &s, &DVector::zeros(0), &stance, &[], &cfg, None)
            .unwrap()
            .state;
    }
    let t = steps as f64 * cfg.dt;
    let closed = z0 - 0.5 * STANDARD_GRAVITY * t * t;
    // Semi-implicit Euler lands exactly ½ g dt t below the closed form.
    assert!((s.base_position.z - closed).abs() <= STANDARD_GRAVITY * cfg.dt * t);
    let discrete = z0 - STANDARD_GRAVITY * cfg.dt * cfg.dt * (steps * (steps + 1)) as f64 / 2.0;
    assert!((s.base_position.z - discrete).abs() < 1e-9);
}

fn energy(model: &RobotModel, s: &FloatingBaseState, g: &Vector3<f64>) -> f64 {
    kinetic_energy(model, s).unwrap() + potential_energy(model, s, g).unwrap()
}

fn swinging_pendulum(model: &RobotModel) -> FloatingBaseState {
    let mut s = neutral_state(model);
    s.q = DVector::from_vec(vec![0.6, -0.9]);
    s.nu = DVector::from_vec(vec![0.2, -0.1, 0.5, 0.8, -0.4, 0.3, 1.5, -2.0]);
    s
}

/// Largest |E(t) − E(0)| and the final state, unactuated and contact-free.
fn energy_run(cfg: &SimConfig, duration: f64) -> (f64, f64, FloatingBaseState) {
    let model = fixtures::double_pendulum();
    let g = cfg.gravity_vector();
    let mut s = swinging_pendulum(&model);
    let stance = Stance::free(&model, &s);
    let e0 = energy(&model, &s, &g);
    let mut worst: f64 = 0.0;
    for _ in 0..(duration / cfg.dt).round() as usize {
        s = step(&model, &s, &DVector::zeros(2), &stance, &[], cfg, None)
            .unwrap()
            .state;
        worst = worst.max((energy(&model, &s, &g) - e0).abs());
    }
    (worst, e0, s)
}

#[test]
fn energy_drift_shrinks_with_step() {
    let weightless = |dt| SimConfig {
        dt,
        gravity: [0.0; 3],
        ..Default::default()
    };
    let (coarse, e0, _) = energy_run(&weightless(1e-3), 1.0);
    let (fine, _, _) = energy_run(&weightless(1e-4), 1.0);
    assert!(fine / e0 < 1e-3, "drift {}", fine / e0);
    assert!(coarse / fine >= 5.0, "coarse {coarse}, fine {fine}");
}

#[test]
fn falling_energy_error_is_the_ballistic_term() {
    // In uniform gravity the CoM falls freely; semi-implicit Euler then
    // loses ½ g dt per unit of vertical momentum gained, on top of the
    // internal drift seen without gravity.
    let model = fixtures::double_pendulum();
    let cfg = SimConfig {
        dt: 1e-4,
        ..Default::default()
    };
    let g = cfg.gravity_vector();
    let (_, e0, last) = energy_run(&cfg, 1.0);
    let first = swinging_pendulum(&model);
    let m = model.total_mass();
    let pz = |s: &FloatingBaseState| m * wholebody::dynamics::com_velocity(&model, s).unwrap().z;
    let predicted = 0.5 * STANDARD_GRAVITY * cfg.dt * (pz(&last) - pz(&first));
    let actual = energy(&model, &last, &g) - e0;
    let (internal, _, _) = energy_run(
        &SimConfig {
            gravity: [0.0; 3],
            ..cfg.clone()
        },
        1.0,
    );
    assert!(
        (actual - predicted).abs() < 10.0 * internal + 1e-6,
        "{actual} vs {predicted}"
    );
}

#[test]
fn quaternion_stays_normalized() {
    let model = fixtures::box_body();
    let cfg = SimConfig {
        gravity: [0.0; 3],
        ..Default::default()
    };
    let mut s = neutral_state(&model);
    s.nu.fixed_rows_mut::<3>(3).copy_from(&Vector3::new(3.0, -5.0, 7.0));
    let stance = Stance::free(&model, &s);
    for _ in 0..1_000_000 {
        s = step(&model, &s, &DVector::zeros(0), &stance, &[], &cfg, None)
            .unwrap()
            .state;
    }
    assert!((s.base_orientation.coords.norm() - 1.0).abs() < 1e-9);
}

fn standing() -> (RobotModel, FloatingBaseState, Script) {
    let model = fixtures::biped();
    let s = fixtures::biped_standing(&model);
    let script = Script {
        duration: 10.0,
        initial_contacts: vec!["l_foot".into(), "r_foot".into()],
        ..Default::default()
    };
    (model, s, script)
}

#[test]
fn balance_holds_equilibrium() {
    let (model, s0, script) = standing();
    let c0 = center_of_mass(&model, &s0).unwrap();
    let mut ctl = BalanceController::new(&model, &s0, ControllerConfig::default()).unwrap();
    let traj = run_scenario(&model, &mut ctl, &script, &SimConfig::default(), &s0, None).unwrap();
    assert_eq!(ctl.failures(), 0);
    for sample in &traj.samples {
        assert!((center_of_mass(&model, &sample.state).unwrap() - c0).norm() < 1e-6);
    }
    // Stabilized constraints keep the feet still.
    let last = traj.final_state.unwrap();
    let jv = ContactSet::all(&model).jacobian(&model, &last).unwrap() * &last.nu;
    assert!(jv.amax() < 1e-6);
}

#[test]
fn push_changes_forces_from_its_start() {
    let (model, s0, mut script) = standing();
    script.duration = 2.0;
    script.push.push(PushEvent {
        frame: "torso".into(),
        force: [5.0, 0.0, 0.0],
        torque: [0.0; 3],
        start: 1.0,
        duration: 0.1,
    });
    let mut ctl = BalanceController::new(&model, &s0, ControllerConfig::default()).unwrap();
    let traj = run_scenario(&model, &mut ctl, &script, &SimConfig::default(), &s0, None).unwrap();
    let f0 = &traj.samples[0].forces;
    let before = traj.samples.iter().filter(|s| s.time < 1.0 - 1e-9);
    // The regularized optimum settles by a few 1e-5 N from the first plan.
    assert!(before.map(|s| (&s.forces - f0).amax()).fold(0.0, f64::max) < 1e-4);
    let during = traj
        .samples
        .iter()
        .filter(|s| s.time >= 1.0 - 1e-9 && s.time < 1.1 - 1e-9);
    assert!(during.map(|s| (&s.forces - f0).amax()).fold(0.0, f64::max) > 0.1);
}

#[test]
fn scenario_csv_is_deterministic() {
    let (model, s0, mut script) = standing();
    script.duration = 0.5;
    script.push.push(PushEvent {
        frame: "torso".into(),
        force: [0.0, 3.0, 0.0],
        torque: [0.0; 3],
        start: 0.1,
        duration: 0.1,
    });
    let run = || {
        let mut ctl = BalanceController::new(&model, &s0, ControllerConfig::default()).unwrap();
        let traj = run_scenario(&model, &mut ctl, &script, &SimConfig::default(), &s0, None).unwrap();
        let mut out = Vec::new();
        traj.write_csv(&mut out).unwrap();
        out
    };
    let a = run();
    assert_eq!(a, run());
    let text = String::from_utf8(a).unwrap();
    let header = text.lines().next().unwrap();
    assert!(header.starts_with("time,q0,q1,q2,q3,quat_w,quat_x,quat_y,quat_z,pos_x,pos_y,pos_z,nu0,"));
    assert!(header
        .ends_with("f_l_foot_x,f_l_foot_y,f_l_foot_z,f_r_foot_x,f_r_foot_y,f_r_foot_z,H0,H1,H2,H3,H4,H5,E_kin,E_pot"));
}

#[test]
fn unknown_contact_in_script_is_rejected() {
    let (model, s0, mut script) = standing();
    script.initial_contacts.push("l_hand".into());
    let err = run_scenario(&model, &mut Passive, &script, &SimConfig::default(), &s0, None).unwrap_err();
    assert!(err.to_string().contains("l_hand"));
}

#[test]
fn sea_torque_matches_rigid_body_torque() {
    // Pendulum on its series elastic joint, motor driven slowly between two
    // angles. The spring-plus-damper torque is the torque the rigid-body
    // dynamics needs at the simulated acceleration.
    let model = fixtures::pendulum();
    let cfg = SimConfig::default();
    let g = cfg.gravity_vector();
    let sea = model.dof_joint(0).sea.unwrap();
    let mut s = neutral_state(&model);
    s.q[0] = 0.2;
    let hold = rnea(&model, &s, &DVector::zeros(7), &[], &g).unwrap()[6];
    let mut motor = SeaState::relaxed(&model, &s);
    motor.theta[0] += hold / sea.stiffness;
    let stance = Stance::free(&model, &s);
    for k in 0..5000 {
        let t = k as f64 * cfg.dt;
        let target = 0.2 + 0.1 * (1.0 - (0.5 * t).cos());
        let mut ts = s.clone();
        ts.q[0] = target;
        let gravity_hold = rnea(&model, &ts, &DVector::zeros(7), &[], &g).unwrap()[6];
        // Motor-side PD toward the spring wind-up that holds the target.
        let theta_ref = target + gravity_hold / sea.stiffness;
        let tau_m = gravity_hold + 20.0 * (theta_ref - motor.theta[0]) - 2.0 * motor.theta_dot[0];
        let out = step(
            &model,
            &s,
            &DVector::from_element(1, tau_m),
            &stance,
            &[],
            &cfg,
            Some(&motor),
        )
        .unwrap();
        let m = mass_matrix(&model, &s).unwrap();
        let h = rnea(&model, &s, &DVector::zeros(7), &[], &g).unwrap();
        let required = (&m * &out.nudot + h)[6];
        let measured = sea.stiffness * (motor.theta[0] - s.q[0]) + sea.damping * (motor.theta_dot[0] - s.nu[6]);
        assert!((measured - required).abs() < 1e-6, "t = {t}: {measured} vs {required}");
        assert_eq!(out.joint_torques[0], measured);
        s = out.state;
        motor = out.sea.unwrap();
    }
    assert!((s.q[0] - 0.2).abs() > 0.01, "joint moved");
}
