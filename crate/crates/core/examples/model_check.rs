//! Load a robot description, list its structure and report diagnostics.
//!
//! `cargo run --example model_check -- fixtures/cyclic.urdf`

use std::path::PathBuf;

use wholebody::model::{parse_description, validate_model, RobotModel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/biped.urdf"));
    let desc = parse_description(&std::fs::read_to_string(&path)?)?;
    let diagnostics = validate_model(&desc);
    for d in &diagnostics {
        println!("{d}");
    }
    if diagnostics
        .iter()
        .any(|d| d.severity == wholebody::model::Severity::Error)
    {
        println!("{}: not loadable", path.display());
        return Ok(());
    }
    let model = RobotModel::from_description(desc)?;
    println!(
        "{}: {} links, {} joints, {} contact points, mass {:.3} kg, {} base",
        model.name(),
        model.links().len(),
        model.n(),
        model.contact_points().len(),
        model.total_mass(),
        if model.is_fixed_base() { "fixed" } else { "floating" },
    );
    println!("links in topological order: {}", model.topological_order().join(" "));
    Ok(())
}
