//! `cellfree` command-line driver.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cellfree::experiment::{
    emit_results, oracle, run_experiment_with_threads, ExperimentConfig, Profile,
};
use cellfree::Error;
use clap::{Parser, Subcommand, ValueEnum};

const EXIT_IO: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(
    name = "cellfree",
    version,
    about = "Cell-free massive MIMO beamforming simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileArg {
    Desk,
    Paper,
}

impl From<ProfileArg> for Profile {
    fn from(p: ProfileArg) -> Self {
        match p {
            ProfileArg::Desk => Profile::Desk,
            ProfileArg::Paper => Profile::Paper,
        }
    }
}

#[derive(clap::Args)]
struct ConfigArgs {
    /// TOML file overriding the profile defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "desk")]
    profile: ProfileArg,
}

#[derive(Subcommand)]
enum Command {
    /// Run the sweep and write results.csv, summary.json and plot_data.csv.
    Run {
        #[command(flatten)]
        config: ConfigArgs,
        /// Output directory; overrides `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (defaults to the number of CPUs).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Check a configuration and print the resolved values.
    Validate {
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Run the Monte Carlo oracle suite and print one line per check.
    Oracle {
        /// Blocks for the Xi-bar check.
        #[arg(long, default_value_t = 20_000)]
        xi_blocks: usize,
        /// Blocks per setup for the LSFD check.
        #[arg(long, default_value_t = 2_000)]
        lsfd_blocks: usize,
    },
}

fn load_config(args: &ConfigArgs) -> Result<ExperimentConfig, Error> {
    let text = match &args.config {
        Some(path) => std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?,
        None => String::new(),
    };
    let mut cfg = ExperimentConfig::from_toml_str(&text, args.profile.into())?;
    cfg.apply_seed_overrides(|key| std::env::var(key).ok())?;
    cfg.validate()?;
    Ok(cfg)
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::InvalidConfig { .. } | Error::Parse(_) => EXIT_CONFIG,
        Error::Io(_) => EXIT_IO,
        _ => EXIT_NUMERICAL,
    }
}

fn fail(err: Error) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(exit_code(&err))
}

fn run(config: &ConfigArgs, out: Option<&Path>, threads: Option<usize>) -> ExitCode {
    let cfg = match load_config(config) {
        Ok(cfg) => cfg,
        Err(e) => return fail(e),
    };
    let threads =
        threads.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let output = match run_experiment_with_threads(&cfg, threads) {
        Ok(o) => o,
        Err(e) => return fail(e),
    };
    let dir = out.map_or_else(|| PathBuf::from(&cfg.output.dir), Path::to_path_buf);
    let paths = match emit_results(&output.records, &dir) {
        Ok(p) => p,
        Err(e) => return fail(e),
    };
    println!(
        "wrote {} records to {}",
        output.records.len(),
        paths.results.display()
    );
    println!("summary: {}", paths.summary.display());
    println!("plot data: {}", paths.plot_data.display());
    let failed: Vec<_> = output
        .diagnostics
        .iter()
        .filter(|d| d.error.is_some())
        .collect();
    if failed.is_empty() {
        return ExitCode::SUCCESS;
    }
    for d in &failed {
        eprintln!(
            "failed cell: sweep value {}, setup {}, model {}: {}",
            d.sweep_value,
            d.setup,
            d.model.name(),
            d.error.as_deref().unwrap_or_default()
        );
    }
    ExitCode::from(EXIT_NUMERICAL)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            out,
            threads,
        } => run(&config, out.as_deref(), threads),
        Command::Validate { config } => match load_config(&config) {
            Ok(cfg) => {
                print!("{}", cfg.to_toml_string());
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        },
        Command::Oracle {
            xi_blocks,
            lsfd_blocks,
        } => match oracle::run_suite(xi_blocks, lsfd_blocks) {
            Ok(results) => {
                for r in &results {
                    let status = if r.passed { "PASS" } else { "FAIL" };
                    println!("{status} {}: {}", r.name, r.detail);
                }
                if results.iter().all(|r| r.passed) {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(EXIT_NUMERICAL)
                }
            }
            Err(e) => fail(e),
        },
    }
}
