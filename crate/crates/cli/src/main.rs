//! `minimax`: runs the primal-dual solvers on the shipped experiments.
//!
//! Exit codes: 0 success, 1 configuration error, 2 solver error,
//! 3 failed `--check` monitor.

mod config;
mod describe;
mod instance;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use toml::{Table, Value};

use config::{resolve, Experiment, FlagOverrides, Monitor, SolverKind};
use run::CliError;

#[derive(Parser)]
#[command(name = "minimax", version, about = "Primal-dual solvers for minimax problems with coupled linear constraints")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write traces, trajectories and a JSON summary
    Run(RunArgs),
    /// Print dimensions, constants, schedule preview and theory checks for an instance
    Describe(DescribeArgs),
    /// List the shipped presets
    Presets,
}

#[derive(Args)]
struct CommonArgs {
    /// TOML configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named preset applied beneath the configuration file
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, visible_alias = "instance", value_enum)]
    experiment: Option<Experiment>,
    #[arg(long, value_enum)]
    solver: Option<SolverKind>,
    /// Worker threads for per-seed runs (0 = all cores)
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Target stationarity measure
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Monitor evaluated after the run; failure exits with code 3
    #[arg(long, value_enum)]
    check: Option<Monitor>,
}

#[derive(Args)]
struct DescribeArgs {
    #[arg(value_enum)]
    instance: Experiment,
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Adversary budget for flow_attack
    #[arg(long)]
    budget: Option<f64>,
}

fn run(args: RunArgs) -> Result<(), CliError> {
    let flags = FlagOverrides {
        experiment: args.experiment,
        solver: args.solver,
        seed: args.common.seed,
        jobs: args.jobs,
        max_iter: args.max_iter,
        eps: args.eps,
        out_dir: args.out_dir,
        check: args.check,
        extra: Table::new(),
    };
    let cfg = resolve(args.common.preset.as_deref(), args.common.config.as_deref(), &flags).map_err(CliError::Config)?;
    log::info!(
        "{} / {} on {} seed(s), output in {}",
        cfg.experiment.name(),
        cfg.solver.name(),
        cfg.seeds.len(),
        cfg.out_dir.display()
    );
    run::execute(&cfg)
}

fn describe(args: DescribeArgs) -> Result<(), CliError> {
    let mut pdapg = Table::new();
    for (k, v) in [("beta", args.beta), ("alpha", args.alpha), ("gamma", args.gamma)] {
        if let Some(v) = v {
            pdapg.insert(k.into(), Value::Float(v));
        }
    }
    let mut extra = Table::new();
    if !pdapg.is_empty() {
        extra.insert("pdapg".into(), Value::Table(pdapg));
    }
    let flags = FlagOverrides {
        experiment: Some(args.instance),
        seed: args.common.seed,
        extra,
        ..Default::default()
    };
    let cfg = resolve(args.common.preset.as_deref(), args.common.config.as_deref(), &flags).map_err(CliError::Config)?;
    let text = describe::describe(&cfg, args.budget).map_err(CliError::Config)?;
    print!("{text}");
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Describe(a) => describe(a),
        Command::Presets => {
            for name in config::preset_names() {
                println!("{name}");
            }
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("minimax: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
