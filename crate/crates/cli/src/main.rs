use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rough_pdo_cli::{list_experiments, run, validate, CliError, ExperimentConfig};

#[derive(Parser)]
#[command(name = "roughpdo", version, about = "Run rough-symbol operator experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Override the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for JSON and CSV reports.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Worker threads, 0 picks automatically.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run { config: PathBuf },
    /// List the named experiments.
    List,
    /// Check a config file without running it.
    Validate { config: PathBuf },
}

fn load(cli: &Cli, path: &Path) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(d) = &cli.out_dir {
        cfg.out_dir = Some(d.clone());
    }
    Ok(cfg)
}

fn fail(e: CliError) -> ExitCode {
    println!("{}", e.to_json());
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            eprintln!("thread pool: {e}");
        }
    }
    match &cli.command {
        Command::List => {
            println!("{}", list_experiments());
            ExitCode::SUCCESS
        }
        Command::Validate { config } => {
            let cfg = match load(&cli, config) {
                Ok(c) => c,
                Err(e) => return fail(e),
            };
            let diags = validate(&cfg);
            if diags.is_empty() {
                println!("ok");
                ExitCode::SUCCESS
            } else {
                for d in &diags {
                    println!("{d}");
                }
                ExitCode::from(2)
            }
        }
        Command::Run { config } => {
            let cfg = match load(&cli, config) {
                Ok(c) => c,
                Err(e) => return fail(e),
            };
            let mut report = match run(&cfg) {
                Ok(r) => r,
                Err(e) => return fail(e),
            };
            match &cfg.out_dir {
                Some(dir) => {
                    if let Err(e) = report.write(dir) {
                        return fail(e);
                    }
                    for a in &report.assertions {
                        println!("{:<5} {:<24} {}", if a.passed { "pass" } else { "FAIL" }, a.name, a.detail);
                    }
                    println!("report: {}", dir.join(format!("{}.json", report.experiment)).display());
                }
                None => println!("{}", report.to_json()),
            }
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
    }
}
