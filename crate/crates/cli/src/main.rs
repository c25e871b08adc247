use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use polycalc_cli::{configure_threads, run_experiment, ExperimentConfig, Subcommand};

/// Numerical experiments for polygonal functional calculus.
///
/// Exit status: 0 when every threshold is met, 1 when some threshold fails,
/// 2 on invalid input.
#[derive(Debug, Parser)]
#[command(name = "polycalc", version)]
struct Args {
    #[arg(value_enum)]
    subcommand: Subcommand,
    /// Experiment config (JSON). Omitted fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Report directory.
    #[arg(long, default_value = "polycalc-out")]
    out: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    if let Err(err) = configure_threads() {
        eprintln!("error: {err}");
        return ExitCode::from(2);
    }
    let mut cfg = match &args.config {
        Some(path) => match ExperimentConfig::from_path(path) {
            Ok(cfg) => cfg,
            Err(err) => {
                eprintln!("error: {err}");
                return ExitCode::from(2);
            }
        },
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let report = match run_experiment(&cfg, args.subcommand) {
        Ok(r) => r,
        Err(err) => {
            eprintln!("error: {err}");
            return ExitCode::from(2);
        }
    };
    if let Err(err) = report.write(&args.out) {
        eprintln!("error: writing report to {}: {err:#}", args.out.display());
        return ExitCode::from(2);
    }
    for check in report.all_checks() {
        let status = if check.pass { "PASS" } else { "FAIL" };
        println!("{status} {:<40} {:>12.3e} (limit {:.3e})", check.name, check.value, check.threshold);
        if let (false, Some(detail)) = (check.pass, &check.detail) {
            println!("     {detail}");
        }
    }
    println!(
        "{} in {:.1} s, report in {}",
        if report.passed { "passed" } else { "FAILED" },
        report.timing.total_s,
        args.out.display()
    );
    if report.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
