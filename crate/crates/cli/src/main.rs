use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;
use specflow_cli::config::parse_cm;
use specflow_cli::{cmd_ab, cmd_flow, cmd_oracle, cmd_probe_cm, cmd_report, Overrides, Result, RunConfig, SolverChoice};
use specflow_core::specflow::CmSetting;

#[derive(Parser)]
#[command(name = "specflow", version, about = "Spectral flow of Dirac-type operators on planar domains")]
struct Cli {
    /// TOML run configuration; the exactly solvable annulus when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for JSON and CSV outputs.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Half-width of the eigenvalue window.
    #[arg(long, global = true)]
    window: Option<f64>,
    /// Number of points of the initial t grid.
    #[arg(long, global = true)]
    tgrid: Option<usize>,
    #[arg(long, global = true, value_enum)]
    solver: Option<SolverChoice>,
    /// Constant in the prediction: an integer or `measure`.
    #[arg(long, global = true, value_parser = parse_cm)]
    cm: Option<CmSetting>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form spectrum of the annulus example.
    Oracle,
    /// Spectral flow with the configured solver.
    Flow,
    /// Graphene boundary algebra over a (Λ, φ) grid.
    Ab,
    /// FEM flow on the dumbbell fixtures.
    ProbeCm,
    /// Merge flow results into one table; fails if any disagree.
    Report { paths: Vec<PathBuf> },
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    let mut config = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    config.apply(&Overrides { window: cli.window, t_points: cli.tgrid, solver: cli.solver, c_m: cli.cm, out: cli.out.clone() });
    match cli.command {
        Command::Oracle => print_json(&cmd_oracle(&config)?)?,
        Command::Flow => print_json(&cmd_flow(&config)?)?,
        Command::Ab => print_json(&cmd_ab(&config)?)?,
        Command::ProbeCm => print_json(&cmd_probe_cm(&config)?)?,
        Command::Report { paths } => {
            let report = cmd_report(&paths)?;
            print!("{}", report.render());
            if let Some(dir) = &config.output.dir {
                std::fs::create_dir_all(dir).map_err(specflow_cli::CliError::io(dir))?;
                let path = dir.join("report.json");
                std::fs::write(&path, serde_json::to_string_pretty(&report)? + "\n").map_err(specflow_cli::CliError::io(&path))?;
            }
            return Ok(report.all_agree);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
