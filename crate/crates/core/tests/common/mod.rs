#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, Matrix3, Rotation3, UnitQuaternion, Vector3};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wholebody::dynamics::{forward_kinematics, FloatingBaseState};
use wholebody::model::{JointSpec, LinkSpec, Pose, RobotDescription, RobotModel};
use wholebody::wbc::qp::QpProblem;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn unit(rng: &mut impl Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

/// Inertia of a random cloud of point masses plus a small isotropic part,
/// which always satisfies the triangle inequalities.
pub fn random_inertia(rng: &mut impl Rng, mass: f64) -> Matrix3<f64> {
    let mut i = Matrix3::identity() * 1e-3 * mass;
    for _ in 0..4 {
        let r = Vector3::new(
            rng.random_range(-0.2..0.2),
            rng.random_range(-0.2..0.2),
            rng.random_range(-0.2..0.2),
        );
        i += (Matrix3::identity() * r.norm_squared() - r * r.transpose()) * (mass / 4.0);
    }
    i
}

/// Random tree with `links` links; every joint's parent is drawn from the
/// links already placed, and about one joint in six is fixed.
pub fn random_tree(rng: &mut impl Rng, links: usize) -> RobotModel {
    let mut ls = Vec::new();
    let mut js = Vec::new();
    for k in 0..links {
        let mass = rng.random_range(0.2..5.0);
        let com = Vector3::new(
            rng.random_range(-0.2..0.2),
            rng.random_range(-0.2..0.2),
            rng.random_range(-0.3..0.1),
        );
        ls.push(LinkSpec::new(format!("l{k}"), mass, com, random_inertia(rng, mass)));
        if k == 0 {
            continue;
        }
        let parent = rng.random_range(0..k);
        let origin = Pose {
            xyz: Vector3::new(
                rng.random_range(-0.3..0.3),
                rng.random_range(-0.3..0.3),
                rng.random_range(-0.4..0.0),
            ),
            rpy: Vector3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            ),
        };
        let j = if rng.random_bool(1.0 / 6.0) {
            JointSpec::fixed(format!("j{k}"), format!("l{parent}"), format!("l{k}"), origin)
        } else {
            JointSpec::revolute(
                format!("j{k}"),
                format!("l{parent}"),
                format!("l{k}"),
                origin,
                unit(rng),
            )
        };
        js.push(j);
    }
    RobotModel::from_description(RobotDescription {
        name: "random".into(),
        base_link: "l0".into(),
        fixed_base: false,
        links: ls,
        joints: js,
        contacts: vec![],
    })
    .expect("random tree is valid")
}

/// Random pose, joint angles inside any declared limits, and velocity.
pub fn random_state(rng: &mut impl Rng, model: &RobotModel) -> FloatingBaseState {
    let q = DVector::from_fn(model.n(), |i, _| {
        let lim = model.dof_joint(i).limits;
        match (lim.lower, lim.upper) {
            (Some(lo), Some(hi)) => rng.random_range(lo..=hi),
            _ => rng.random_range(-3.0..3.0),
        }
    });
    let axis = nalgebra::Unit::new_normalize(unit(rng));
    FloatingBaseState {
        base_orientation: UnitQuaternion::from_axis_angle(&axis, rng.random_range(-3.0..3.0)),
        base_position: Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(0.0..1.0),
        ),
        q,
        nu: DVector::from_fn(model.nv(), |_, _| rng.random_range(-1.5..1.5)),
    }
}

/// World angular displacement taking `a` to `b`.
pub fn rotation_delta(a: &Rotation3<f64>, b: &Rotation3<f64>) -> Vector3<f64> {
    // Vee of the antisymmetric part: accurate for the tiny angles of
    // finite differencing, where the acos-based log map is not.
    let m = (b * a.inverse()).into_inner();
    Vector3::new(m[(2, 1)] - m[(1, 2)], m[(0, 2)] - m[(2, 0)], m[(1, 0)] - m[(0, 1)]) * 0.5
}

/// One simulated step of the arm: the state it started from, the
/// acceleration the simulator produced, and what acted on the joints.
pub struct ArmStep {
    pub state: FloatingBaseState,
    pub nudot: DVector<f64>,
    pub joint_torques: DVector<f64>,
    pub push: wholebody::dynamics::SpatialWrench,
}

/// The arm fixture swinging under a sinusoidal torque while a known wrench
/// pushes its hand, at dt = 1e-4 for `steps` steps.
pub fn arm_push_run(steps: usize) -> (RobotModel, Vec<ArmStep>) {
    use wholebody::sim::{step, SimConfig, Stance};
    let model = wholebody::fixtures::arm();
    let cfg = SimConfig {
        dt: 1e-4,
        ..Default::default()
    };
    let mut s = wholebody::dynamics::neutral_state(&model);
    s.q = DVector::from_vec(vec![0.3, -0.4, -0.9]);
    s.nu.rows_mut(6, 3).copy_from(&DVector::from_vec(vec![0.5, -1.0, 2.0]));
    let stance = Stance::free(&model, &s);
    let push =
        wholebody::dynamics::SpatialWrench::mixed("hand", Vector3::new(3.0, -1.5, 4.0), Vector3::new(0.2, 0.1, -0.3));
    let mut out = Vec::with_capacity(steps);
    for k in 0..steps {
        let t = k as f64 * cfg.dt;
        let tau = DVector::from_vec(vec![2.0 * (3.0 * t).sin(), 5.0 + (7.0 * t).cos(), -1.0]);
        let o = step(&model, &s, &tau, &stance, std::slice::from_ref(&push), &cfg, None).unwrap();
        out.push(ArmStep {
            state: s.clone(),
            nudot: o.nudot.clone(),
            joint_torques: o.joint_torques.clone(),
            push: push.clone(),
        });
        s = o.state;
    }
    (model, out)
}

/// Least-squares line through `(x, y)`; returns (slope, intercept, R²).
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx, sxy * sxy / (sxx * syy))
}

/// Sample standard deviation.
pub fn std_dev(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

pub const H: f64 = 1e-6;

pub fn nudge(s: &FloatingBaseState, k: usize, h: f64) -> FloatingBaseState {
    let mut dir = DVector::zeros(s.nu.len());
    dir[k] = 1.0;
    s.integrate_positions(&dir, h)
}

pub fn fd_jacobian(model: &RobotModel, s: &FloatingBaseState, frame: &str) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(6, model.nv());
    for k in 0..model.nv() {
        let a = forward_kinematics(model, &nudge(s, k, -H), frame).unwrap();
        let b = forward_kinematics(model, &nudge(s, k, H), frame).unwrap();
        let dp = (b.translation.vector - a.translation.vector) / (2.0 * H);
        let dr = rotation_delta(&a.rotation.to_rotation_matrix(), &b.rotation.to_rotation_matrix()) / (2.0 * H);
        j.view_mut((0, k), (3, 1)).copy_from(&dp);
        j.view_mut((3, k), (3, 1)).copy_from(&dr);
    }
    j
}

/// Minimum objective over the equality-constrained minimizers of every
/// subset of inequality rows treated as equalities, keeping only primal
/// feasible ones. For a strictly convex problem this is the optimum.
pub fn brute_force(p: &QpProblem) -> Option<(f64, DVector<f64>)> {
    let n = p.dim();
    let m = p.a_in.nrows();
    let mut best: Option<(f64, DVector<f64>)> = None;
    for mask in 0u32..(1 << m) {
        let rows: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
        let k = p.a_eq.nrows() + rows.len();
        let mut kkt = DMatrix::zeros(n + k, n + k);
        let mut rhs = DVector::zeros(n + k);
        kkt.view_mut((0, 0), (n, n)).copy_from(&p.hessian);
        rhs.rows_mut(0, n).copy_from(&(-&p.gradient));
        let mut r = n;
        for i in 0..p.a_eq.nrows() {
            kkt.view_mut((r, 0), (1, n)).copy_from(&p.a_eq.row(i));
            rhs[r] = p.b_eq[i];
            r += 1;
        }
        for &i in &rows {
            kkt.view_mut((r, 0), (1, n)).copy_from(&p.a_in.row(i));
            rhs[r] = p.b_in[i];
            r += 1;
        }
        let a = kkt.view((n, 0), (k, n)).into_owned();
        kkt.view_mut((0, n), (n, k)).copy_from(&a.transpose());
        let Some(sol) = kkt.lu().solve(&rhs) else { continue };
        let x = sol.rows(0, n).into_owned();
        let eq_ok = p.a_eq.nrows() == 0 || (&p.a_eq * &x - &p.b_eq).amax() < 1e-9;
        let in_ok = p.a_in.nrows() == 0 || (&p.a_in * &x - &p.b_in).max() < 1e-9;
        if eq_ok && in_ok {
            let f = p.objective(&x);
            if best.as_ref().is_none_or(|(b, _)| f < *b) {
                best = Some((f, x));
            }
        }
    }
    best
}

pub fn random_problem(rng: &mut impl Rng) -> QpProblem {
    let n = rng.random_range(1..=6);
    let m = rng.random_range(0..=4);
    let e = rng.random_range(0..=n.min(2)) * usize::from(rng.random_bool(0.5));
    let l = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let h = &l * l.transpose() + DMatrix::identity(n, n) * 0.1;
    let g = DVector::from_fn(n, |_, _| rng.random_range(-3.0..3.0));
    let a_eq = DMatrix::from_fn(e, n, |_, _| rng.random_range(-1.0..1.0));
    let b_eq = DVector::from_fn(e, |_, _| rng.random_range(-1.0..1.0));
    let a_in = DMatrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0));
    let b_in = DVector::from_fn(m, |_, _| rng.random_range(-1.0..1.0));
    QpProblem::new(h, g, a_eq, b_eq, a_in, b_in).unwrap()
}
