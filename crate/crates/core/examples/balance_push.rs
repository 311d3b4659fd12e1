//! The biped balancing on two point feet while its torso is pushed.

use wholebody::dynamics::center_of_mass;
use wholebody::fixtures;
use wholebody::sim::{run_scenario, BalanceController, PushEvent, Script, SimConfig};
use wholebody::wbc::ControllerConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = fixtures::biped();
    let initial = fixtures::biped_standing(&model);
    let script = Script {
        duration: 12.0,
        initial_contacts: vec!["l_foot".into(), "r_foot".into()],
        push: vec![PushEvent {
            frame: "torso".into(),
            force: [5.0, 0.0, 0.0],
            torque: [0.0; 3],
            start: 2.0,
            duration: 0.1,
        }],
        ..Default::default()
    };
    let mut controller = BalanceController::new(&model, &initial, ControllerConfig::default())?;
    let traj = run_scenario(&model, &mut controller, &script, &SimConfig::default(), &initial, None)?;

    let c0 = center_of_mass(&model, &initial)?;
    println!("time,com_dx_mm,com_dz_mm,cone_margin_N");
    for s in traj.samples.iter().step_by(500) {
        let d = (center_of_mass(&model, &s.state)? - c0) * 1e3;
        println!("{:.1},{:.4},{:.4},{:.3}", s.time, d.x, d.z, s.cone_margin);
    }
    println!("failed control steps: {}", controller.failures());
    Ok(())
}
