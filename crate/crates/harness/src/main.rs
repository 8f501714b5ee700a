use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context as _;
use clap::{Parser, Subcommand};
use loctime_core::localtime::simulate_fields;
use loctime_harness::runner::load_chain;
use loctime_harness::{run_experiment, CheckName, ExperimentConfig, Format, RunOptions, Status, VerificationReport};

#[derive(Parser)]
#[command(name = "loctime", version, about = "Local-time verification campaigns on Markov shifts")]
struct Cli {
    /// Experiment config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the config output directory.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Worker threads (results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Spectral and aperiodicity checks.
    Spectral,
    /// Exact laws at every n and the inversion cross-check.
    ExactLaw,
    /// Write the local-time field of every simulated trajectory.
    Simulate,
    /// Run a single check (and what it depends on).
    Verify { check: CheckName },
    /// Run every check listed in the config.
    Report,
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    let path = cli.config.context("--config is required")?;
    let mut config = ExperimentConfig::load(&path)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = cli.output {
        config.output_dir = out;
    }
    let opts = RunOptions { format: cli.format, threads: cli.threads };
    config.checks = match cli.command {
        Command::Spectral => vec![CheckName::Spectral, CheckName::Aperiodicity],
        Command::ExactLaw => vec![CheckName::ExactLaw],
        Command::Verify { check } => vec![check],
        Command::Report => config.checks,
        Command::Simulate => return simulate(&config, opts).map(|()| true),
    };
    let report = run_experiment(&config, opts)?;
    print_summary(&report);
    Ok(report.all_passed())
}

fn simulate(config: &ExperimentConfig, opts: RunOptions) -> anyhow::Result<()> {
    let mut config = config.clone();
    config.checks.clear();
    config.validate()?;
    if config.sample_counts.is_empty() || config.sample_counts.contains(&0) {
        anyhow::bail!("sample_counts must be nonempty and positive");
    }
    let shift = load_chain(&config)?;
    std::fs::create_dir_all(&config.output_dir)?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(opts.threads.unwrap_or(0)).build()?;
    for (i, &n) in config.n_values.iter().enumerate() {
        let count = config.samples(i);
        let out = &config.output_dir;
        let written = pool.install(|| {
            simulate_fields(&shift, n, count, config.seed, |k, field| {
                opts.format.write(out, &format!("local_time_n{n}_{k}"), &field.rows()).map(|_| ())
            })
        });
        written.into_iter().collect::<Result<(), _>>()?;
        println!("n = {n}: wrote {count} fields");
    }
    Ok(())
}

fn print_summary(report: &VerificationReport) {
    for c in &report.checks {
        let status = match c.status {
            Status::Pass => "pass",
            Status::Fail => "FAIL",
            Status::Skipped => continue,
        };
        println!("{:<18} {status}", c.name.as_str());
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
