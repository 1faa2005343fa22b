use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod presets;

use commands::{Abort, Output};
use config::Problem;

#[derive(Parser)]
#[command(name = "vortexlp", version, about = "Trapped-condensate point vortices: simulation, reduction, relative equilibria and stability")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the vortex equations; writes trajectory.csv and summary.json.
    Simulate(RunArgs),
    /// Integrate the reduced system; writes reduced.csv and summary.json.
    Reduce(RunArgs),
    /// Locate and classify relative equilibria; writes equilibria.json.
    Equilibria(RunArgs),
    /// Classify one equilibrium; writes stability.json.
    Stability(RunArgs),
    /// Stability over a parameter grid; writes sweep.csv.
    Sweep(RunArgs),
    /// List the bundled presets.
    Presets,
}

#[derive(Args)]
struct RunArgs {
    /// JSON run configuration.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Bundled configuration to use instead of --config.
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
    /// Output directory (created if missing).
    #[arg(long, value_name = "DIR", default_value = ".")]
    out: PathBuf,
    /// Seed for the initial-state perturbation; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
}

type Runner = fn(&Problem, &Output) -> anyhow::Result<()>;

/// Config problems exit with 1; failures after the run started exit with 2.
fn exit_code(err: &anyhow::Error) -> u8 {
    use vortexlp::Error as E;
    for cause in err.chain() {
        if cause.downcast_ref::<Abort>().is_some() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::Domain(_)
                | E::NotRelativeEquilibrium(_)
                | E::NoConvergence { .. }
                | E::SingularJacobian { .. }
                | E::EigenFailure => 2,
                _ => 1,
            };
        }
    }
    1
}

/// The cause chain joined by `: `, skipping causes already quoted by their parent.
fn describe(err: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in err.chain() {
        let text = cause.to_string();
        if !out.contains(&text) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&text);
        }
    }
    out
}

fn run(args: RunArgs, runner: Runner) -> anyhow::Result<()> {
    let raw = config::load(args.config.as_deref(), args.preset.as_deref())?;
    let problem = Problem::new(raw, args.seed)?;
    let out = Output::new(&args.out)?;
    runner(&problem, &out)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let (args, runner): (RunArgs, Runner) = match cli.command {
        Command::Simulate(a) => (a, commands::simulate),
        Command::Reduce(a) => (a, commands::reduce),
        Command::Equilibria(a) => (a, commands::equilibria),
        Command::Stability(a) => (a, commands::stability),
        Command::Sweep(a) => (a, commands::sweep_cmd),
        Command::Presets => {
            for name in presets::names() {
                println!("{name}");
            }
            return ExitCode::SUCCESS;
        }
    };
    match run(args, runner) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}
