//! One control step for the standing biped: momentum reference, contact
//! force QP and torque selection.

use nalgebra::Vector3;
use wholebody::dynamics::{center_of_mass, ContactSet};
use wholebody::fixtures;
use wholebody::wbc::{control_step, ComReference, ControllerConfig, PosturalTask};

/// Entries on one line.
fn row(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:9.4}")).collect::<Vec<_>>().join(" ")
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = fixtures::biped();
    let state = fixtures::biped_standing(&model);
    let config = ControllerConfig::default();
    let contacts = ContactSet::from_names(&model, &["l_foot", "r_foot"])?;
    let posture = PosturalTask::uniform(state.q.clone(), config.posture.kp, config.posture.kd);

    // Ask the CoM to move down 2 cm; the feet must push less than the weight.
    let target = ComReference::at(center_of_mass(&model, &state)? + Vector3::new(0.0, 0.0, -0.02));
    let (tau, diag) = control_step(&model, &state, &contacts, &target, &posture, &config)?;

    println!("desired momentum rate  {}", row(diag.hdot_desired.as_slice()));
    println!("achieved momentum rate {}", row(diag.hdot_achieved.as_slice()));
    println!("contact forces {}", row(diag.forces.as_slice()));
    println!("weight {:.4} N", model.total_mass() * 9.80665);
    println!("joint torques {}", row(tau.as_slice()));
    println!(
        "QP {:?} in {} iterations, cone margin {:.3} N, residuals {:.1e} / {:.1e}",
        diag.contact_status, diag.contact_iterations, diag.cone_margin, diag.dynamics_residual, diag.contact_residual
    );
    Ok(())
}
