//! Recover a push on the arm's hand from a six-axis sensor in the upper arm.

use nalgebra::{DVector, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wholebody::dynamics::{neutral_state, SpatialWrench, STANDARD_GRAVITY};
use wholebody::estimation::{estimate, synthesize_readings, ContactHypothesis, FtSensorSpec};
use wholebody::fixtures;

/// Entries on one line.
fn row(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:9.4}")).collect::<Vec<_>>().join(" ")
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = fixtures::arm();
    let mut state = neutral_state(&model);
    state.q = DVector::from_vec(vec![0.3, -0.4, -0.9]);
    let nudot = DVector::zeros(model.nv());
    let gravity = Vector3::new(0.0, 0.0, -STANDARD_GRAVITY);
    let push = SpatialWrench::mixed("hand", Vector3::new(3.0, -1.5, 4.0), Vector3::new(0.2, 0.1, -0.3));
    println!(
        "applied f {} n {}",
        row(push.force.as_slice()),
        row(push.torque.as_slice())
    );

    for sigma in [0.0, 0.1] {
        let sensors = vec![FtSensorSpec::at_joint("arm_ft", "arm_ft").with_noise(sigma, 0.1 * sigma)];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let readings = synthesize_readings(
            &model,
            &state,
            &nudot,
            &gravity,
            std::slice::from_ref(&push),
            &sensors,
            &mut rng,
        )?;
        for hypothesis in [
            ContactHypothesis::full_wrench("hand"),
            ContactHypothesis::pure_force("hand"),
        ] {
            let est = estimate(
                &model,
                &state,
                &nudot,
                &gravity,
                &sensors,
                &readings,
                std::slice::from_ref(&hypothesis),
            )?;
            let w = &est.wrenches[0];
            println!(
                "σ = {sigma}, {:?}: f {} n {}",
                hypothesis.kind,
                row(w.force.as_slice()),
                row(w.torque.as_slice())
            );
            println!("    joint torques {}", row(est.joint_torques.as_slice()));
            for (root, r) in &est.residuals {
                println!(
                    "    residual at {root}: f {} n {}",
                    row(r.force.as_slice()),
                    row(r.torque.as_slice())
                );
            }
        }
    }
    Ok(())
}
