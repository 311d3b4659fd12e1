//! Fit the five transmission coefficients to a synthetic noisy dataset.

use wholebody::motor::{identify, synthetic_dataset, MotorModelParams, PARAM_NAMES};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let planted = MotorModelParams::from_array([1.2, 0.4, 0.5, 0.08, 0.12]);
    for noise in [0.0, 0.01, 0.05] {
        let data = synthetic_dataset(&planted, 10_000, noise, 42);
        let (fit, report) = identify(&data)?;
        println!("voltage noise {:.0} %: R² {:.6}", 100.0 * noise, report.r_squared);
        for (j, name) in PARAM_NAMES.iter().enumerate() {
            println!(
                "  {name:5} planted {:.4} fit {:.6} ± {:.2e}",
                planted.as_array()[j],
                fit.as_array()[j],
                report.std_err[j]
            );
        }
    }
    Ok(())
}
