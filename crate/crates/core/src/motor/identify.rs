use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{model_voltage, sign, step, MotorError, MotorModelParams};

pub const PARAM_NAMES: [&str; 5] = ["k_t", "k_vp", "k_vn", "k_cp", "k_cn"];

/// One identification sample: applied voltage, measured joint torque and
/// motor velocity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MotorSample {
    pub time: f64,
    pub voltage: f64,
    pub torque: f64,
    pub velocity: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitReport {
    pub params: MotorModelParams,
    /// Standard errors in [`PARAM_NAMES`] order.
    pub std_err: [f64; 5],
    pub r_squared: f64,
    pub residual_rms: f64,
    pub samples: usize,
}

fn regressor(torque: f64, w: f64) -> [f64; 5] {
    [torque, w * step(w), w * step(-w), sign(w) * step(w), sign(w) * step(-w)]
}

/// Exciting identification data generated from `params`: torque and
/// velocity swept by incommensurate sinusoids through both rotation
/// directions, sampled at 1 kHz. Each voltage is scaled by `1 + σ·ε` with
/// `ε` standard normal (`voltage_noise` = σ, e.g. 0.01 for 1%).
pub fn synthetic_dataset(params: &MotorModelParams, samples: usize, voltage_noise: f64, seed: u64) -> Vec<MotorSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..samples)
        .map(|i| {
            let t = i as f64 * 1e-3;
            let torque = 3.0 * (2.3 * t).sin() + 1.5 * (17.0 * t).cos();
            let velocity = 2.0 * (1.1 * t).cos() + 0.7 * (9.7 * t).sin();
            let eps: f64 = StandardNormal.sample(&mut rng);
            MotorSample {
                time: t,
                voltage: model_voltage(params, torque, velocity) * (1.0 + voltage_noise * eps),
                torque,
                velocity,
            }
        })
        .collect()
}

/// Least-squares fit of the transmission model to `(V, τ, θ̇)` samples.
///
/// Samples at zero velocity only inform `k_t`. A rank-deficient regressor is
/// reported with the names of the parameters it cannot resolve.
pub fn identify(dataset: &[MotorSample]) -> Result<(MotorModelParams, FitReport), MotorError> {
    let n = dataset.len();
    if n < 6 {
        return Err(MotorError::TooFewSamples { needed: 6, got: n });
    }
    let a = DMatrix::from_fn(n, 5, |i, j| regressor(dataset[i].torque, dataset[i].velocity)[j]);
    let b = DVector::from_iterator(n, dataset.iter().map(|s| s.voltage));

    let dead: Vec<&str> = (0..5)
        .filter(|&j| a.column(j).iter().all(|&v| v == 0.0))
        .map(|j| PARAM_NAMES[j])
        .collect();
    if !dead.is_empty() {
        return Err(MotorError::Unexcited(dead.join(", ")));
    }

    // Column scaling keeps the rank test meaningful across units.
    let scale: Vec<f64> = (0..5).map(|j| a.column(j).norm()).collect();
    let mut a_s = a.clone();
    for (j, sj) in scale.iter().enumerate() {
        a_s.column_mut(j).scale_mut(1.0 / sj);
    }
    let svd = a_s.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let tol = 1e-10 * smax;
    let v_t = svd.v_t.as_ref().expect("svd computed with V");
    let weak: Vec<usize> = (0..5).filter(|&k| svd.singular_values[k] <= tol).collect();
    if !weak.is_empty() {
        let mut names = Vec::new();
        for j in 0..5 {
            if weak.iter().any(|&k| v_t[(k, j)].abs() > 1e-6) {
                names.push(PARAM_NAMES[j]);
            }
        }
        return Err(MotorError::Unexcited(names.join(", ")));
    }

    let x_s = svd.solve(&b, tol).expect("svd computed with U and V");
    let x: [f64; 5] = std::array::from_fn(|j| x_s[j] / scale[j]);

    let resid = &b - &a * DVector::from_row_slice(&x);
    let rss = resid.norm_squared();
    let mean = b.mean();
    let tss: f64 = b.iter().map(|v| (v - mean).powi(2)).sum();
    let dof = (n - 5) as f64;
    let sigma2 = rss / dof;
    // cov = σ² (AᵀA)⁻¹ = σ² D⁻¹ V Σ⁻² Vᵀ D⁻¹ with D the column scaling.
    let std_err: [f64; 5] = std::array::from_fn(|j| {
        let var: f64 = (0..5).map(|k| (v_t[(k, j)] / svd.singular_values[k]).powi(2)).sum();
        (sigma2 * var).sqrt() / scale[j]
    });
    let params = MotorModelParams::from_array(x);
    let report = FitReport {
        params,
        std_err,
        r_squared: if tss > 0.0 { 1.0 - rss / tss } else { 1.0 },
        residual_rms: (rss / n as f64).sqrt(),
        samples: n,
    };
    Ok((params, report))
}

/// Read a `time,voltage,torque,velocity` CSV dataset.
pub fn read_dataset_csv<R: Read>(reader: R) -> Result<Vec<MotorSample>, MotorError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| MotorError::Csv {
            row: 1,
            message: e.to_string(),
        })?
        .clone();
    let expected = ["time", "voltage", "torque", "velocity"];
    if headers.len() != 4 || headers.iter().zip(expected).any(|(h, e)| h != e) {
        return Err(MotorError::Csv {
            row: 1,
            message: format!("expected header `{}`", expected.join(",")),
        });
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        // Row numbers count the header as row 1.
        let row = i + 2;
        let rec = rec.map_err(|e| MotorError::Csv {
            row,
            message: e.to_string(),
        })?;
        let mut vals = [0.0; 4];
        for (k, v) in vals.iter_mut().enumerate() {
            let field = rec.get(k).ok_or_else(|| MotorError::Csv {
                row,
                message: format!("missing column `{}`", expected[k]),
            })?;
            *v = field.parse().map_err(|_| MotorError::Csv {
                row,
                message: format!("`{field}` in column `{}` is not a number", expected[k]),
            })?;
        }
        out.push(MotorSample {
            time: vals[0],
            voltage: vals[1],
            torque: vals[2],
            velocity: vals[3],
        });
    }
    Ok(out)
}

pub fn write_dataset_csv<W: Write>(mut w: W, data: &[MotorSample]) -> std::io::Result<()> {
    writeln!(w, "time,voltage,torque,velocity")?;
    for s in data {
        writeln!(w, "{},{},{},{}", s.time, s.voltage, s.torque, s.velocity)?;
    }
    Ok(())
}

pub fn write_fit_report<W: Write>(mut w: W, report: &FitReport) -> std::io::Result<()> {
    writeln!(w, "parameter,value,std_err")?;
    for (j, v) in report.params.as_array().iter().enumerate() {
        writeln!(w, "{},{},{}", PARAM_NAMES[j], v, report.std_err[j])?;
    }
    writeln!(w, "r_squared,{},", report.r_squared)?;
    writeln!(w, "residual_rms,{},", report.residual_rms)?;
    writeln!(w, "samples,{},", report.samples)?;
    Ok(())
}
