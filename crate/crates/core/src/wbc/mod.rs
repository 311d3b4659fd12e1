//! Two-level momentum-based whole-body controller.
//!
//! The first level picks contact forces `f*` whose centroidal momentum rate
//! best matches a desired rate `Ḣᵈ` inside linearized friction cones. The
//! second level fixes `f = f*` and picks joint torques closest to a postural
//! torque `φ` among those consistent with the rigid-body dynamics and the
//! contact constraints. The postural objective therefore never changes the
//! contact forces.

mod config;
pub mod qp;

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector, Vector3, Vector6};
use thiserror::Error;

use crate::dynamics::{
    bias_forces, center_of_mass, centroidal_momentum, com_velocity, contact_map, gravity_forces, mass_matrix,
    ContactSet, DynamicsError, FloatingBaseState,
};
use crate::model::RobotModel;
pub use config::{ControllerConfig, Fallback, MomentumGains, PostureGains};
pub use qp::{solve_qp, QpProblem, QpSolution, QpStatus};

/// Threshold on constraint residuals for accepting a torque solve.
pub const RESIDUAL_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum WbcError {
    #[error("qp: {0}")]
    Qp(String),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("contact-force problem not solved: {0}")]
    ContactForces(&'static str),
    #[error("torque constraints inconsistent (residual {residual:e})")]
    Inconsistent { residual: f64 },
    #[error("config: {0}")]
    Config(String),
}

/// Desired centroidal momentum rate `[Ṗ; L̇]`, N and N·m about the CoM.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentumReference {
    pub rate: Vector6<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComReference {
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
}

impl ComReference {
    pub fn at(position: Vector3<f64>) -> Self {
        Self {
            position,
            velocity: Vector3::zeros(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PosturalTask {
    pub q_desired: DVector<f64>,
    pub kp: DVector<f64>,
    pub kd: DVector<f64>,
}

impl PosturalTask {
    /// Same gains on every joint.
    pub fn uniform(q_desired: DVector<f64>, kp: f64, kd: f64) -> Self {
        let n = q_desired.len();
        Self {
            q_desired,
            kp: DVector::from_element(n, kp),
            kd: DVector::from_element(n, kd),
        }
    }

    fn check(&self, n: usize) -> Result<(), WbcError> {
        for (what, len) in [
            ("q_desired", self.q_desired.len()),
            ("kp", self.kp.len()),
            ("kd", self.kd.len()),
        ] {
            if len != n {
                return Err(WbcError::Dimension {
                    what,
                    expected: n,
                    got: len,
                });
            }
        }
        Ok(())
    }
}

/// PD law on the CoM plus damping of the centroidal angular momentum.
pub fn momentum_reference(
    model: &RobotModel,
    state: &FloatingBaseState,
    com_desired: &ComReference,
    gains: &MomentumGains,
) -> Result<MomentumReference, WbcError> {
    let m = model.total_mass();
    let c = center_of_mass(model, state)?;
    let cd = com_velocity(model, state)?;
    let h = centroidal_momentum(model, state)?;
    let lin = (gains.kp * (com_desired.position - c) + gains.kd * (com_desired.velocity - cd)) * m;
    let ang = -gains.k_omega * h.angular;
    Ok(MomentumReference {
        rate: Vector6::new(lin.x, lin.y, lin.z, ang.x, ang.y, ang.z),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContactForceSolution {
    /// Stacked point forces, world axes, N.
    pub forces: DVector<f64>,
    /// `X f* + [m g; 0]`.
    pub achieved: Vector6<f64>,
    pub qp: QpSolution,
}

/// Contact forces minimizing `‖Ḣᵈ − X f − [m g; 0]‖² + λ‖f‖²` subject to
/// `cones · f ≤ 0`.
#[allow(clippy::too_many_arguments)]
pub fn solve_contact_forces(
    hdot_desired: &Vector6<f64>,
    x: &DMatrix<f64>,
    mass: f64,
    gravity: &Vector3<f64>,
    cones: &DMatrix<f64>,
    lambda: f64,
    tolerance: f64,
    max_iterations: usize,
) -> Result<ContactForceSolution, WbcError> {
    let k = x.ncols();
    if k == 0 {
        return Err(WbcError::Dynamics(DynamicsError::NoContacts));
    }
    if cones.ncols() != k {
        return Err(WbcError::Dimension {
            what: "cone columns",
            expected: k,
            got: cones.ncols(),
        });
    }
    let wg = gravity_wrench(mass, gravity);
    let target = DVector::from_column_slice((hdot_desired - wg).as_slice());
    let hess = (x.transpose() * x + DMatrix::identity(k, k) * lambda) * 2.0;
    let grad = -(x.transpose() * &target) * 2.0;
    let problem = QpProblem::inequality(hess, grad, cones.clone(), DVector::zeros(cones.nrows()))?;
    let qp = solve_qp(&problem, tolerance, max_iterations);
    let f = qp.x.clone();
    let xf = x * &f;
    let achieved = Vector6::from_column_slice(xf.as_slice()) + wg;
    Ok(ContactForceSolution {
        forces: f,
        achieved,
        qp,
    })
}

pub fn gravity_wrench(mass: f64, gravity: &Vector3<f64>) -> Vector6<f64> {
    let w = gravity * mass;
    Vector6::new(w.x, w.y, w.z, 0.0, 0.0, 0.0)
}

/// `φ = g_j(q) − K_p (q − qᵈ) − K_d q̇`.
pub fn postural_term(
    model: &RobotModel,
    state: &FloatingBaseState,
    task: &PosturalTask,
    gravity: &Vector3<f64>,
) -> Result<DVector<f64>, WbcError> {
    let n = model.n();
    task.check(n)?;
    let g = gravity_forces(model, state, gravity)?;
    let qdot = state.qdot();
    Ok(DVector::from_fn(n, |i, _| {
        g[6 + i] - task.kp[i] * (state.q[i] - task.q_desired[i]) - task.kd[i] * qdot[i]
    }))
}

#[derive(Clone, Debug, PartialEq)]
pub struct TorqueSolution {
    pub tau: DVector<f64>,
    pub nudot: DVector<f64>,
    /// `‖M ν̇ + h − B τ − Jᵀ f‖∞`
    pub dynamics_residual: f64,
    /// `‖J ν̇ + J̇ ν‖∞`
    pub contact_residual: f64,
}

impl TorqueSolution {
    pub fn accepted(&self) -> bool {
        self.dynamics_residual < RESIDUAL_TOLERANCE && self.contact_residual < RESIDUAL_TOLERANCE
    }
}

/// Reduced equations of motion: a fixed base removes the base rows and
/// columns and actuates every remaining coordinate.
struct Reduced {
    m: DMatrix<f64>,
    h: DVector<f64>,
    j: DMatrix<f64>,
    jdot_nu: DVector<f64>,
    /// Offset of the joint block inside the reduced velocity.
    joint_offset: usize,
}

fn reduced(
    model: &RobotModel,
    state: &FloatingBaseState,
    contacts: &ContactSet,
    gravity: &Vector3<f64>,
) -> Result<Reduced, WbcError> {
    let m = mass_matrix(model, state)?;
    let h = bias_forces(model, state, gravity)?;
    let j = contacts.jacobian(model, state)?;
    let jdot_nu = contacts.bias(model, state)?;
    if model.is_fixed_base() {
        let n = model.n();
        Ok(Reduced {
            m: m.view((6, 6), (n, n)).into_owned(),
            h: h.rows(6, n).into_owned(),
            j: j.columns(6, n).into_owned(),
            jdot_nu,
            joint_offset: 0,
        })
    } else {
        Ok(Reduced {
            m,
            h,
            j,
            jdot_nu,
            joint_offset: 6,
        })
    }
}

/// Torques closest to `φ` such that, with contact forces held at `f*`, the
/// dynamics and `J ν̇ + J̇ν = 0` both hold.
///
/// Eliminating `ν̇ = M⁻¹(Bτ + Jᵀf* − h)` leaves the affine constraint
/// `C τ = d` with `C = J M⁻¹ B`; the solution is the minimum-norm
/// correction `τ = φ + C⁺(d − Cφ)`. Returns [`WbcError::Inconsistent`] when
/// no torque satisfies the constraint.
pub fn solve_torques(
    model: &RobotModel,
    state: &FloatingBaseState,
    contacts: &ContactSet,
    forces: &DVector<f64>,
    phi: &DVector<f64>,
    gravity: &Vector3<f64>,
) -> Result<TorqueSolution, WbcError> {
    let sol = torque_candidate(model, state, contacts, forces, phi, gravity)?;
    if !sol.accepted() {
        return Err(WbcError::Inconsistent {
            residual: sol.contact_residual.max(sol.dynamics_residual),
        });
    }
    Ok(sol)
}

fn torque_candidate(
    model: &RobotModel,
    state: &FloatingBaseState,
    contacts: &ContactSet,
    forces: &DVector<f64>,
    phi: &DVector<f64>,
    gravity: &Vector3<f64>,
) -> Result<TorqueSolution, WbcError> {
    let n = model.n();
    if phi.len() != n {
        return Err(WbcError::Dimension {
            what: "phi",
            expected: n,
            got: phi.len(),
        });
    }
    let dim = contacts.dim(model);
    if forces.len() != dim {
        return Err(WbcError::Dimension {
            what: "forces",
            expected: dim,
            got: forces.len(),
        });
    }
    let r = reduced(model, state, contacts, gravity)?;
    let nr = r.m.nrows();
    let chol =
        r.m.clone()
            .cholesky()
            .ok_or_else(|| WbcError::Qp("mass matrix not positive definite".into()))?;
    let jt_f = r.j.transpose() * forces;
    // M⁻¹ B and M⁻¹ (Jᵀf − h)
    let mut b = DMatrix::zeros(nr, n);
    b.view_mut((r.joint_offset, 0), (n, n)).fill_with_identity();
    let minv_b = chol.solve(&b);
    let drift = chol.solve(&(&jt_f - &r.h));

    let tau = if dim == 0 {
        phi.clone()
    } else {
        let c = &r.j * &minv_b;
        let d = -&r.jdot_nu - &r.j * &drift;
        let gap = d - &c * phi;
        let svd = c.svd(true, true);
        let tol = 1e-12 * svd.singular_values.max().max(1.0);
        let corr = svd.solve(&gap, tol).map_err(|e| WbcError::Qp(e.to_string()))?;
        phi + corr
    };
    let nudot_r = &minv_b * &tau + drift;
    let mut bt = DVector::zeros(nr);
    bt.rows_mut(r.joint_offset, n).copy_from(&tau);
    let dynamics_residual = (&r.m * &nudot_r + &r.h - bt - jt_f).amax();
    let contact_residual = if dim == 0 {
        0.0
    } else {
        (&r.j * &nudot_r + &r.jdot_nu).amax()
    };
    let nudot = if model.is_fixed_base() {
        let mut full = DVector::zeros(model.nv());
        full.rows_mut(6, n).copy_from(&nudot_r);
        full
    } else {
        nudot_r
    };
    Ok(TorqueSolution {
        tau,
        nudot,
        dynamics_residual,
        contact_residual,
    })
}

/// Static torques holding the current configuration: the joint rows of
/// `g(q) − Jᵀ f_s`, where `f_s` is the minimum-norm contact force carrying
/// the base rows of `g(q)`. Without contacts (or with a fixed base and no
/// contacts) this is the joint block of `g(q)`.
pub fn gravity_compensation(
    model: &RobotModel,
    state: &FloatingBaseState,
    contacts: &ContactSet,
    gravity: &Vector3<f64>,
) -> Result<DVector<f64>, WbcError> {
    let n = model.n();
    let g = gravity_forces(model, state, gravity)?;
    if contacts.dim(model) == 0 || model.is_fixed_base() {
        return Ok(g.rows(6, n).into_owned());
    }
    let j = contacts.jacobian(model, state)?;
    let jb_t = j.columns(0, 6).transpose();
    let f = jb_t
        .svd(true, true)
        .solve(&g.rows(0, 6).into_owned(), 1e-12)
        .map_err(|e| WbcError::Qp(e.to_string()))?;
    Ok(g.rows(6, n) - j.columns(6, n).transpose() * f)
}

/// Everything one control step decided, for logging and checks.
#[derive(Clone, Debug, PartialEq)]
pub struct StepDiagnostics {
    pub hdot_desired: Vector6<f64>,
    pub hdot_achieved: Vector6<f64>,
    /// `f*`; empty without contacts.
    pub forces: DVector<f64>,
    /// Stage-one QP outcome; `None` without contacts.
    pub contact_status: Option<QpStatus>,
    pub contact_iterations: usize,
    pub dynamics_residual: f64,
    pub contact_residual: f64,
    /// `min(−A f*)` over the cone rows; non-negative when every force is
    /// inside its cone.
    pub cone_margin: f64,
    /// True when the fallback torque was returned.
    pub fallback: bool,
    pub wall_time: Duration,
}

impl StepDiagnostics {
    pub fn ok(&self) -> bool {
        !self.fallback
    }
}

/// Momentum reference, contact forces, postural torque and torque selection
/// in sequence. Solver failures do not error: the configured fallback
/// torque is returned and the diagnostics are flagged.
pub fn control_step(
    model: &RobotModel,
    state: &FloatingBaseState,
    contacts: &ContactSet,
    com_desired: &ComReference,
    task: &PosturalTask,
    config: &ControllerConfig,
) -> Result<(DVector<f64>, StepDiagnostics), WbcError> {
    let start = Instant::now();
    let gravity = config.gravity_vector();
    let hd = momentum_reference(model, state, com_desired, &config.momentum)?;
    let phi = postural_term(model, state, task, &gravity)?;

    let mut diag = StepDiagnostics {
        hdot_desired: hd.rate,
        hdot_achieved: gravity_wrench(model.total_mass(), &gravity),
        forces: DVector::zeros(0),
        contact_status: None,
        contact_iterations: 0,
        dynamics_residual: 0.0,
        contact_residual: 0.0,
        cone_margin: f64::INFINITY,
        fallback: false,
        wall_time: Duration::ZERO,
    };

    let mut stage_one_ok = true;
    if contacts.dim(model) > 0 {
        let x = contact_map(model, state, contacts)?;
        let cones = contacts.friction_cones(model, state, config.cone_facets)?;
        let sol = solve_contact_forces(
            &hd.rate,
            &x,
            model.total_mass(),
            &gravity,
            &cones,
            config.lambda,
            config.tolerance,
            config.max_iterations,
        )?;
        diag.contact_status = Some(sol.qp.status);
        diag.contact_iterations = sol.qp.iterations;
        diag.cone_margin = (-(&cones * &sol.forces)).min();
        diag.hdot_achieved = sol.achieved;
        diag.forces = sol.forces;
        stage_one_ok = sol.qp.is_optimal();
    }

    let mut tau = None;
    if stage_one_ok {
        let sol = torque_candidate(model, state, contacts, &diag.forces, &phi, &gravity)?;
        diag.dynamics_residual = sol.dynamics_residual;
        diag.contact_residual = sol.contact_residual;
        if sol.accepted() {
            tau = Some(sol.tau);
        }
    }

    let tau = match tau {
        Some(t) => t,
        None => {
            diag.fallback = true;
            match config.fallback {
                Fallback::GravityCompensation => gravity_compensation(model, state, contacts, &gravity)?,
                Fallback::Zero => DVector::zeros(model.n()),
            }
        }
    };
    diag.wall_time = start.elapsed();
    Ok((tau, diag))
}

/// Write per-step diagnostics as CSV. Wall time is left out so that traces
/// of identical runs are byte-identical.
pub fn write_diagnostics_csv<W: std::io::Write>(mut w: W, rows: &[(f64, StepDiagnostics)]) -> std::io::Result<()> {
    let nf = rows.first().map_or(0, |(_, d)| d.forces.len());
    let mut header = vec!["time".to_string(), "status".into(), "fallback".into()];
    header.extend((0..6).map(|i| format!("hd{i}")));
    header.extend((0..6).map(|i| format!("ha{i}")));
    header.extend((0..nf).map(|i| format!("f{i}")));
    header.extend(["dynamics_residual", "contact_residual", "cone_margin", "qp_iterations"].map(String::from));
    writeln!(w, "{}", header.join(","))?;
    for (t, d) in rows {
        let mut cells = vec![
            t.to_string(),
            d.contact_status.map_or("none", |s| s.as_str()).to_string(),
            (d.fallback as u8).to_string(),
        ];
        cells.extend(d.hdot_desired.iter().map(|v| v.to_string()));
        cells.extend(d.hdot_achieved.iter().map(|v| v.to_string()));
        cells.extend(d.forces.iter().map(|v| v.to_string()));
        cells.push(d.dynamics_residual.to_string());
        cells.push(d.contact_residual.to_string());
        cells.push(d.cone_margin.to_string());
        cells.push(d.contact_iterations.to_string());
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{default_gravity, neutral_state, STANDARD_GRAVITY};
    use crate::fixtures;

    fn point_at_com_x() -> DMatrix<f64> {
        let mut x = DMatrix::zeros(6, 3);
        x.view_mut((0, 0), (3, 3)).fill_with_identity();
        x
    }

    #[test]
    fn single_contact_at_com_supports_weight() {
        let cones = crate::dynamics::friction_cone_rows(&nalgebra::Matrix3::identity(), 0.5, 8);
        let g = default_gravity();
        let s = solve_contact_forces(&Vector6::zeros(), &point_at_com_x(), 1.0, &g, &cones, 0.0, 1e-9, 200).unwrap();
        assert!((s.forces - DVector::from_vec(vec![0.0, 0.0, STANDARD_GRAVITY])).amax() < 1e-12);
        let up = Vector6::new(0.0, 0.0, 1.0, 0.0, 0.0, 0.0);
        let s = solve_contact_forces(&up, &point_at_com_x(), 1.0, &g, &cones, 0.0, 1e-9, 200).unwrap();
        assert!((s.forces[2] - (STANDARD_GRAVITY + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn tangential_demand_saturates_on_facet() {
        let cones = crate::dynamics::friction_cone_rows(&nalgebra::Matrix3::identity(), 0.5, 8);
        let hd = Vector6::new(20.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        let s = solve_contact_forces(&hd, &point_at_com_x(), 1.0, &default_gravity(), &cones, 1e-6, 1e-9, 200).unwrap();
        assert!(s.qp.is_optimal());
        assert!((&cones * &s.forces).max() < 1e-8);
        assert!(!s.qp.active.is_empty());
        assert!((s.achieved - hd).norm() > 1.0);
    }

    #[test]
    fn momentum_reference_hand_values() {
        let model = fixtures::biped();
        let s = neutral_state(&model);
        let c = center_of_mass(&model, &s).unwrap();
        let m = model.total_mass();
        let gains = MomentumGains {
            kp: 100.0,
            kd: 10.0,
            k_omega: 5.0,
            ..Default::default()
        };
        let r = momentum_reference(&model, &s, &ComReference::at(c), &gains).unwrap();
        assert_eq!(r.rate, Vector6::zeros());
        let r = momentum_reference(&model, &s, &ComReference::at(c - Vector3::x() * 0.01), &gains).unwrap();
        assert!((r.rate[0] + m * 100.0 * 0.01).abs() < 1e-10);
    }

    #[test]
    fn postural_term_hand_value() {
        let model = fixtures::pendulum();
        let mut s = neutral_state(&model);
        s.q[0] = 0.1;
        let task = PosturalTask::uniform(DVector::from_vec(vec![0.0]), 10.0, 0.0);
        let phi = postural_term(&model, &s, &task, &Vector3::zeros()).unwrap();
        assert!((phi[0] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn fixed_base_without_contacts_returns_phi_exactly() {
        let model = fixtures::arm();
        let mut s = neutral_state(&model);
        s.nu = DVector::from_fn(model.nv(), |i, _| if i < 6 { 0.0 } else { 0.3 * i as f64 });
        let phi = DVector::from_vec(vec![0.5, -1.0, 2.0]);
        let sol = solve_torques(
            &model,
            &s,
            &ContactSet::none(&model),
            &DVector::zeros(0),
            &phi,
            &default_gravity(),
        )
        .unwrap();
        assert_eq!(sol.tau, phi);
        assert!(sol.dynamics_residual < 1e-12);
    }
}
