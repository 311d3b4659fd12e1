use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use wholebody::cli::{cmd_check, cmd_estimate, cmd_identify, cmd_simulate, CliError, Overrides};

#[derive(Parser)]
#[command(
    name = "wholebody",
    version,
    about = "Whole-body dynamics, estimation and balance control"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a model file; exit 1 if it has errors.
    Check {
        #[arg(long)]
        model: PathBuf,
    },
    /// Fit motor transmission coefficients to a CSV dataset.
    Identify {
        /// Dataset with columns time,voltage,torque,velocity.
        dataset: PathBuf,
        /// Report file; printed to stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a scenario and write its trajectory and summary.
    Simulate(ScenarioArgs),
    /// Run a scenario with synthetic force/torque sensors and estimate
    /// contact wrenches and joint torques at every step.
    Estimate(ScenarioArgs),
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Override the scenario's model file.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Step size, s.
    #[arg(long)]
    dt: Option<f64>,
    /// Scenario length, s.
    #[arg(long)]
    duration: Option<f64>,
}

impl ScenarioArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            model: self.model.clone(),
            seed: self.seed,
            dt: self.dt,
            duration: self.duration,
        }
    }
}

fn run(cli: Cli) -> Result<bool, CliError> {
    match cli.command {
        Command::Check { model } => {
            let (report, ok) = cmd_check(&model)?;
            print!("{report}");
            Ok(ok)
        }
        Command::Identify { dataset, out } => {
            let report = cmd_identify(&dataset, out.as_deref())?;
            if out.is_none() {
                print!("{report}");
            }
            Ok(true)
        }
        Command::Simulate(a) => {
            print!("{}", cmd_simulate(&a.config, &a.out, &a.overrides())?);
            Ok(true)
        }
        Command::Estimate(a) => {
            print!("{}", cmd_estimate(&a.config, &a.out, &a.overrides())?);
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
