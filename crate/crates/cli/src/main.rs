use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use opdmin_cli::config::ExperimentArgs;
use opdmin_cli::diagnostics::{run_rsc, write_rsc, write_rsc_file, RscArgs};
use opdmin_cli::error::{CliError, CliResult};
use opdmin_cli::experiment::run_experiment;
use opdmin_cli::sweeps::{
    run_scalability, run_sensitivity, write_scalability, write_sensitivity, Axis, SCALABILITY_FILE, SENSITIVITY_FILE,
};

#[derive(Debug, Parser)]
#[command(name = "opdmin", version, about = "Online polarization and disagreement minimization simulator")]
struct Cli {
    /// More log output (-v info, -vv debug); RUST_LOG overrides.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Paired repetitions of the selected algorithms.
    Run(ExperimentArgs),
    /// Pipeline wall time as a function of the network size.
    Scalability {
        #[command(flatten)]
        args: ExperimentArgs,
        /// Ascending network sizes.
        #[arg(long, value_delimiter = ',', required = true)]
        ns: Vec<usize>,
    },
    /// Final regret across values of one parameter.
    Sensitivity {
        #[command(flatten)]
        args: ExperimentArgs,
        /// sigma or arms.
        #[arg(long)]
        axis: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
    /// Curvature diagnostics of random arm sets.
    Rsc(RscArgs),
}

fn output_file(dir: &PathBuf, name: &str) -> CliResult<PathBuf> {
    std::fs::create_dir_all(dir)?;
    Ok(dir.join(name))
}

fn execute(command: Command) -> CliResult<()> {
    match command {
        Command::Run(args) => {
            let cfg = args.with_config_file()?.resolve()?;
            let report = run_experiment(&cfg)?;
            println!("algo,checkpoint_t,regret_mean,regret_std,runtime_mean_s");
            for r in &report.summary {
                println!(
                    "{},{},{:.4},{:.4},{:.4}",
                    r.algo.name(),
                    r.checkpoint_t,
                    r.regret_mean,
                    r.regret_std,
                    r.runtime_mean_s
                );
            }
            eprintln!("wrote {}", cfg.output.display());
        }
        Command::Scalability { args, ns } => {
            let cfg = args.with_config_file()?.resolve()?;
            let rows = run_scalability(&cfg, &ns)?;
            let path = output_file(&cfg.output, SCALABILITY_FILE)?;
            write_scalability(&path, &rows)?;
            for r in &rows {
                println!("n = {:5}: {:.4} s ± {:.4}", r.n, r.mean_s, r.std_s);
            }
            eprintln!("wrote {}", path.display());
        }
        Command::Sensitivity { args, axis, values } => {
            let cfg = args.with_config_file()?.resolve()?;
            let axis: Axis = axis.parse().map_err(|e: String| CliError::config("axis", e))?;
            let rows = run_sensitivity(&cfg, axis, &values)?;
            let path = output_file(&cfg.output, SENSITIVITY_FILE)?;
            write_sensitivity(&path, &rows)?;
            for r in &rows {
                println!(
                    "{} = {}: {} {:.4} ± {:.4}",
                    r.axis.name(),
                    r.value,
                    r.algo.name(),
                    r.final_regret_mean,
                    r.final_regret_std
                );
            }
            eprintln!("wrote {}", path.display());
        }
        Command::Rsc(args) => {
            let row = run_rsc(&args)?;
            match &args.output {
                Some(path) => write_rsc_file(path, &row)?,
                None => write_rsc(std::io::stdout().lock(), &row)?,
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
