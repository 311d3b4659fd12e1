//! Mass matrix, inverse dynamics and centroidal quantities of the biped.

use nalgebra::DVector;
use wholebody::dynamics::{
    center_of_mass, centroidal_momentum, default_gravity, frame_jacobian, gravity_forces, mass_matrix, rnea,
};
use wholebody::fixtures;

/// Entries on one line.
fn row(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:9.4}")).collect::<Vec<_>>().join(" ")
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = fixtures::biped();
    let mut state = fixtures::biped_standing(&model);
    state.nu[6] = 0.4;
    state.nu[8] = -0.3;

    let m = mass_matrix(&model, &state)?;
    println!(
        "M(q) is {}x{}; base mass block {:.4} kg",
        m.nrows(),
        m.ncols(),
        m[(0, 0)]
    );

    // Inverse dynamics at zero acceleration: Coriolis plus gravity.
    let g = default_gravity();
    let h = rnea(&model, &state, &DVector::zeros(model.nv()), &[], &g)?;
    let gq = gravity_forces(&model, &state, &g)?;
    println!("h(q, nu) joint rows: {}", row(h.rows(6, model.n()).as_slice()));
    println!("g(q) joint rows:     {}", row(gq.rows(6, model.n()).as_slice()));

    println!("CoM {}", row(center_of_mass(&model, &state)?.as_slice()));
    let hm = centroidal_momentum(&model, &state)?;
    println!(
        "centroidal momentum P {} L {}",
        row(hm.linear.as_slice()),
        row(hm.angular.as_slice())
    );

    let j = frame_jacobian(&model, &state, "l_foot")?;
    println!("l_foot Jacobian, linear rows:");
    for r in 0..3 {
        println!("  {}", row(&j.row(r).iter().copied().collect::<Vec<_>>()));
    }
    Ok(())
}
