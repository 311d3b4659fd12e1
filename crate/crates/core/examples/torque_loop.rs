//! Inner torque loop on a locked series-elastic joint: a 1 N·m step, then
//! a demand twice what the supply can deliver.

use wholebody::model::SeaSpec;
use wholebody::motor::{MotorModelParams, TorqueLoopGains};
use wholebody::sim::LockedSeaBench;

fn main() {
    let motor = MotorModelParams::from_array([1.2, 0.4, 0.5, 0.08, 0.12]);
    let bench = LockedSeaBench {
        sea: SeaSpec {
            stiffness: 400.0,
            damping: 2.0,
            motor_inertia: 0.05,
        },
        plant: motor,
        coulomb_sharpness: Some(1e3),
        dt: 1e-4,
    };
    let gains = TorqueLoopGains::default();
    let high = 2.0 * gains.v_max / motor.k_t;
    let run = bench.track(
        &motor,
        &gains,
        4.0,
        |t| if (1.5..2.0).contains(&t) { high } else { 1.0 },
    );
    println!("time,tau_desired,tau_measured,voltage,integral,saturated");
    for s in run.iter().step_by(1000) {
        println!(
            "{:.2},{:.4},{:.6},{:.3},{:.6},{}",
            s.time, s.tau_desired, s.tau_measured, s.voltage, s.loop_state.integral, s.loop_state.saturated
        );
    }
    let last = run.last().unwrap();
    println!("final error {:.2e} N·m", (last.tau_measured - 1.0).abs());
}
