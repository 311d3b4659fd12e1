//! Command implementations behind the `wholebody` binary.
//!
//! Exit codes: 0 success, 1 domain failure (invalid model, unexcited data,
//! unknown frames, diverged simulation), 2 usage or I/O (unreadable or
//! unparsable files). Every command writes only inside its output path.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::{DVector, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use thiserror::Error;

use crate::dynamics::{center_of_mass, forward_kinematics, neutral_state, Axes, FloatingBaseState, SpatialWrench};
use crate::estimation::{
    estimate, sub_model_root, synthesize_readings, write_ft_csv, ContactHypothesis, EstimationError, FtRecord,
    FtSensorSpec,
};
use crate::model::{load_model, parse_description, validate_model, ModelError, RobotModel, Severity};
use crate::motor::{identify, read_dataset_csv, write_fit_report, MotorError, TorqueLoopGains};
use crate::sim::{
    balanced_stance, run_scenario, BalanceController, Controller, MotorLoopController, Passive, Script, SimConfig,
    SimError, Trajectory,
};
use crate::wbc::{write_diagnostics_csv, ControllerConfig, WbcError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Domain(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Domain(_) => 1,
            CliError::Usage(_) => 2,
        }
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Usage(format!("{}: {e}", path.display()))
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| io_err(path, e))
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Parse { .. } | ModelError::Io { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Domain(e.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        CliError::Domain(e.to_string())
    }
}

impl From<WbcError> for CliError {
    fn from(e: WbcError) -> Self {
        CliError::Domain(e.to_string())
    }
}

impl From<EstimationError> for CliError {
    fn from(e: EstimationError) -> Self {
        CliError::Domain(e.to_string())
    }
}

fn load_model_path(path: &Path) -> Result<RobotModel, CliError> {
    load_model(&read(path)?).map_err(|e| match e {
        ModelError::Parse { .. } => CliError::Usage(format!("{}: {e}", path.display())),
        other => CliError::from(other),
    })
}

/// Validate a model file. Returns the diagnostics listing and whether the
/// model is free of errors.
pub fn cmd_check(model: &Path) -> Result<(String, bool), CliError> {
    let text = read(model)?;
    let desc = parse_description(&text).map_err(|e| CliError::Usage(format!("{}: {e}", model.display())))?;
    let diags = validate_model(&desc);
    let mut report = String::new();
    for d in &diags {
        let _ = writeln!(report, "{d}");
    }
    let ok = !diags.iter().any(|d| d.severity == Severity::Error);
    Ok((report, ok))
}

/// Fit the transmission model to a dataset and write the report to `out`,
/// or return it when `out` is `None`.
pub fn cmd_identify(dataset: &Path, out: Option<&Path>) -> Result<String, CliError> {
    let file = File::open(dataset).map_err(|e| io_err(dataset, e))?;
    let data = read_dataset_csv(file).map_err(|e| match e {
        MotorError::Csv { .. } => CliError::Usage(format!("{}: {e}", dataset.display())),
        other => CliError::Domain(other.to_string()),
    })?;
    let (_, report) = identify(&data).map_err(|e| CliError::Domain(e.to_string()))?;
    let mut buf = Vec::new();
    write_fit_report(&mut buf, &report).expect("writing to memory");
    let text = String::from_utf8(buf).expect("report is utf-8");
    if let Some(path) = out {
        fs::write(path, &text).map_err(|e| io_err(path, e))?;
    }
    Ok(text)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerKind {
    #[default]
    Balance,
    Passive,
}

/// Initial configuration of a scenario.
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialSpec {
    /// Joint angles by joint name, rad; unlisted joints start at zero.
    pub q: BTreeMap<String, f64>,
    /// Place the robot so its CoM is above the script's initial contacts.
    pub balanced: bool,
}

/// Sensors and contact hypotheses for `estimate`.
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimationSpec {
    pub sensor: Vec<FtSensorSpec>,
    pub hypothesis: Vec<ContactHypothesis>,
}

/// A scenario file. Relative paths resolve against the file's directory.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub model: PathBuf,
    pub script: PathBuf,
    /// Controller configuration; defaults apply when absent.
    #[serde(default)]
    pub controller: Option<PathBuf>,
    #[serde(default)]
    pub controller_kind: ControllerKind,
    /// Route torques through the motor torque loop with these gains.
    #[serde(default)]
    pub motor_loop: Option<TorqueLoopGains>,
    #[serde(default)]
    pub initial: InitialSpec,
    #[serde(default)]
    pub sim: SimConfig,
    #[serde(default)]
    pub estimation: EstimationSpec,
}

/// Command-line overrides shared by `simulate` and `estimate`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub model: Option<PathBuf>,
    pub seed: Option<u64>,
    pub dt: Option<f64>,
    pub duration: Option<f64>,
}

impl ScenarioSpec {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let mut spec: Self =
            toml::from_str(&read(path)?).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let dir = path.parent().unwrap_or(Path::new(""));
        spec.model = dir.join(&spec.model);
        spec.script = dir.join(&spec.script);
        spec.controller = spec.controller.map(|c| dir.join(c));
        Ok(spec)
    }
}

/// Everything a scenario run produced.
pub struct ScenarioRun {
    pub model: RobotModel,
    pub spec: ScenarioSpec,
    pub config: SimConfig,
    pub trajectory: Trajectory,
    pub diagnostics: Option<Vec<(f64, crate::wbc::StepDiagnostics)>>,
    pub failures: usize,
    pub wall_time: f64,
}

fn initial_state(model: &RobotModel, spec: &ScenarioSpec, script: &Script) -> Result<FloatingBaseState, CliError> {
    let mut q = DVector::zeros(model.n());
    for (joint, &angle) in &spec.initial.q {
        let dof = model
            .joint_dof(joint)
            .ok_or_else(|| CliError::Domain(format!("initial.q: unknown joint `{joint}`")))?;
        q[dof] = angle;
    }
    if spec.initial.balanced {
        let names: Vec<&str> = script.initial_contacts.iter().map(String::as_str).collect();
        Ok(balanced_stance(model, q, &names)?)
    } else {
        let mut s = neutral_state(model);
        s.q = q;
        Ok(s)
    }
}

/// Load a scenario, apply overrides and run it.
pub fn run_spec(path: &Path, overrides: &Overrides) -> Result<ScenarioRun, CliError> {
    let mut spec = ScenarioSpec::load(path)?;
    if let Some(m) = &overrides.model {
        spec.model = m.clone();
    }
    let model = load_model_path(&spec.model)?;
    let mut script: Script =
        toml::from_str(&read(&spec.script)?).map_err(|e| CliError::Usage(format!("{}: {e}", spec.script.display())))?;
    if let Some(d) = overrides.duration {
        script.duration = d;
    }
    script.check(&model)?;
    let mut config = spec.sim.clone();
    if let Some(dt) = overrides.dt {
        config.dt = dt;
    }
    if let Some(seed) = overrides.seed {
        config.seed = seed;
    }
    config.check()?;
    let ctl_config = match &spec.controller {
        Some(p) => ControllerConfig::from_toml(&read(p)?).map_err(|e| match e {
            WbcError::Config(m) => CliError::Usage(format!("{}: {m}", p.display())),
            other => CliError::from(other),
        })?,
        None => ControllerConfig::default(),
    };
    let initial = initial_state(&model, &spec, &script)?;

    let start = Instant::now();
    let (trajectory, diagnostics, failures) = match spec.controller_kind {
        ControllerKind::Balance => {
            let mut bal = BalanceController::new(&model, &initial, ctl_config)?;
            let traj = match spec.motor_loop {
                Some(gains) => {
                    let mut ctl = MotorLoopController::new(&model, &mut bal, gains);
                    run_scenario(&model, &mut ctl, &script, &config, &initial, None)?
                }
                None => run_scenario(&model, &mut bal, &script, &config, &initial, None)?,
            };
            let failures = bal.failures();
            (traj, Some(bal.log), failures)
        }
        ControllerKind::Passive => {
            let mut ctl: Box<dyn Controller> = match spec.motor_loop {
                Some(gains) => Box::new(MotorLoopController::new(&model, Passive, gains)),
                None => Box::new(Passive),
            };
            (
                run_scenario(&model, ctl.as_mut(), &script, &config, &initial, None)?,
                None,
                0,
            )
        }
    };
    Ok(ScenarioRun {
        model,
        spec,
        config,
        trajectory,
        diagnostics,
        failures,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

/// Deterministic scenario metrics.
#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub steps: usize,
    pub qp_failures: usize,
    /// m
    pub max_com_deviation: f64,
    /// m
    pub max_com_horizontal_deviation: f64,
    /// N; infinite when no contact was ever active.
    pub min_cone_margin: f64,
}

impl Summary {
    pub fn of(run: &ScenarioRun) -> Result<Self, CliError> {
        let samples = &run.trajectory.samples;
        let c0 = match samples.first() {
            Some(s) => center_of_mass(&run.model, &s.state).map_err(SimError::from)?,
            None => Vector3::zeros(),
        };
        let (mut dev, mut hdev) = (0.0_f64, 0.0_f64);
        for s in samples {
            let d = center_of_mass(&run.model, &s.state).map_err(SimError::from)? - c0;
            dev = dev.max(d.norm());
            hdev = hdev.max(d.xy().norm());
        }
        Ok(Self {
            steps: samples.len(),
            qp_failures: run.failures,
            max_com_deviation: dev,
            max_com_horizontal_deviation: hdev,
            min_cone_margin: samples.iter().map(|s| s.cone_margin).fold(f64::INFINITY, f64::min),
        })
    }

    pub fn to_text(&self) -> String {
        format!(
            "steps = {}\nqp_failures = {}\nmax_com_deviation_m = {:e}\nmax_com_horizontal_deviation_m = {:e}\nmin_cone_margin_n = {:e}\n",
            self.steps,
            self.qp_failures,
            self.max_com_deviation,
            self.max_com_horizontal_deviation,
            self.min_cone_margin
        )
    }
}

fn ensure_dir(out: &Path) -> Result<(), CliError> {
    fs::create_dir_all(out).map_err(|e| io_err(out, e))
}

/// Run a scenario and write `trajectory.csv`, `diagnostics.csv` (balance
/// controller only) and `summary.txt` into `out`. Returns the summary text
/// with the wall time appended.
pub fn cmd_simulate(scenario: &Path, out: &Path, overrides: &Overrides) -> Result<String, CliError> {
    let run = run_spec(scenario, overrides)?;
    ensure_dir(out)?;
    let path = out.join("trajectory.csv");
    let mut w = create(&path)?;
    run.trajectory.write_csv(&mut w).map_err(|e| io_err(&path, e))?;
    w.flush().map_err(|e| io_err(&path, e))?;
    if let Some(diag) = &run.diagnostics {
        let path = out.join("diagnostics.csv");
        let mut w = create(&path)?;
        write_diagnostics_csv(&mut w, diag).map_err(|e| io_err(&path, e))?;
        w.flush().map_err(|e| io_err(&path, e))?;
    }
    let text = Summary::of(&run)?.to_text();
    let path = out.join("summary.txt");
    fs::write(&path, &text).map_err(|e| io_err(&path, e))?;
    Ok(format!("{text}wall_time_s = {:.3}\n", run.wall_time))
}

/// True wrench at a hypothesis frame: every scripted wrench acting inside
/// the hypothesis's sub-model, moved to the frame (world axes).
fn true_wrench(
    model: &RobotModel,
    state: &FloatingBaseState,
    sensors: &[FtSensorSpec],
    hyp: &ContactHypothesis,
    external: &[SpatialWrench],
) -> Result<SpatialWrench, CliError> {
    let root = sub_model_root(model, sensors, &hyp.frame)?;
    let to = forward_kinematics(model, state, &hyp.frame).map_err(SimError::from)?;
    let mut total = SpatialWrench::mixed(hyp.frame.clone(), Vector3::zeros(), Vector3::zeros());
    for w in external {
        if sub_model_root(model, sensors, &w.frame)? == root {
            let from = forward_kinematics(model, state, &w.frame).map_err(SimError::from)?;
            let moved = w.transformed(&from, hyp.frame.clone(), &to, Axes::World);
            total.force += moved.force;
            total.torque += moved.torque;
        }
    }
    Ok(total)
}

/// Per-component error statistics of one estimated quantity.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ErrorStats {
    pub mean: f64,
    pub std: f64,
    pub max_abs: f64,
}

impl ErrorStats {
    fn of(errors: &[f64]) -> Self {
        let n = errors.len().max(1) as f64;
        let mean = errors.iter().sum::<f64>() / n;
        let var = errors.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / n;
        Self {
            mean,
            std: var.sqrt(),
            max_abs: errors.iter().fold(0.0, |m, e| m.max(e.abs())),
        }
    }
}

/// Run a scenario, synthesize the configured sensors at every step, estimate
/// and write `estimation.csv` (true and estimated values side by side),
/// `ft.csv` (sensor readings), `trajectory.csv` and `estimation_summary.txt`.
/// Returns the summary text.
pub fn cmd_estimate(scenario: &Path, out: &Path, overrides: &Overrides) -> Result<String, CliError> {
    let run = run_spec(scenario, overrides)?;
    let est = &run.spec.estimation;
    if est.sensor.is_empty() {
        return Err(CliError::Domain("scenario declares no [[estimation.sensor]]".into()));
    }
    let model = &run.model;
    let gravity = run.config.gravity_vector();
    let mut rng = ChaCha8Rng::seed_from_u64(run.config.seed);
    ensure_dir(out)?;

    let axes = ["fx", "fy", "fz", "tx", "ty", "tz"];
    let mut header = vec!["time".to_string()];
    for h in &est.hypothesis {
        header.extend(axes.iter().map(|a| format!("true_{}_{a}", h.frame)));
        header.extend(axes.iter().map(|a| format!("est_{}_{a}", h.frame)));
    }
    for j in 0..model.n() {
        let name = &model.dof_joint(j).name;
        header.push(format!("tau_true_{name}"));
        header.push(format!("tau_est_{name}"));
    }
    let path = out.join("estimation.csv");
    let mut csv_out = csv::Writer::from_writer(create(&path)?);
    csv_out.write_record(&header).map_err(|e| io_err(&path, e))?;

    let mut records = Vec::new();
    let mut wrench_err: Vec<Vec<Vec<f64>>> = vec![vec![Vec::new(); 6]; est.hypothesis.len()];
    let mut tau_err: Vec<f64> = Vec::new();
    for s in &run.trajectory.samples {
        let readings = synthesize_readings(model, &s.state, &s.nudot, &gravity, &s.external, &est.sensor, &mut rng)?;
        for r in readings.values() {
            records.push(FtRecord::new(s.time, r));
        }
        let result = estimate(
            model,
            &s.state,
            &s.nudot,
            &gravity,
            &est.sensor,
            &readings,
            &est.hypothesis,
        )?;
        let mut row = vec![s.time.to_string()];
        for (h, hyp) in est.hypothesis.iter().enumerate() {
            let truth = true_wrench(model, &s.state, &est.sensor, hyp, &s.external)?.to_vector();
            let guess = result.wrenches[h].to_vector();
            row.extend(truth.iter().map(f64::to_string));
            row.extend(guess.iter().map(f64::to_string));
            for k in 0..6 {
                wrench_err[h][k].push(guess[k] - truth[k]);
            }
        }
        for j in 0..model.n() {
            row.push(s.tau[j].to_string());
            row.push(result.joint_torques[j].to_string());
            tau_err.push(result.joint_torques[j] - s.tau[j]);
        }
        csv_out.write_record(&row).map_err(|e| io_err(&path, e))?;
    }
    csv_out.flush().map_err(|e| io_err(&path, e))?;

    let ft_path = out.join("ft.csv");
    write_ft_csv(create(&ft_path)?, &records)?;
    let traj_path = out.join("trajectory.csv");
    let mut w = create(&traj_path)?;
    run.trajectory.write_csv(&mut w).map_err(|e| io_err(&traj_path, e))?;
    w.flush().map_err(|e| io_err(&traj_path, e))?;

    let mut text = format!("steps = {}\n", run.trajectory.samples.len());
    for (h, hyp) in est.hypothesis.iter().enumerate() {
        for (k, a) in axes.iter().enumerate() {
            let st = ErrorStats::of(&wrench_err[h][k]);
            let _ = writeln!(
                text,
                "{}.{a}: mean_error = {:e}, std_error = {:e}, max_abs_error = {:e}",
                hyp.frame, st.mean, st.std, st.max_abs
            );
        }
    }
    let st = ErrorStats::of(&tau_err);
    let _ = writeln!(
        text,
        "joint_torque: mean_error = {:e}, std_error = {:e}, max_abs_error = {:e}",
        st.mean, st.std, st.max_abs
    );
    let path = out.join("estimation_summary.txt");
    fs::write(&path, &text).map_err(|e| io_err(&path, e))?;
    Ok(text)
}
