//! Batch harness around `polycalc-core`: a JSON experiment config, one
//! pipeline per subcommand and JSON/CSV reports.
//!
//! ```no_run
//! use polycalc_cli::{run_experiment, ExperimentConfig, Subcommand};
//!
//! let cfg = ExperimentConfig::default();
//! let report = run_experiment(&cfg, Subcommand::Coeffs).unwrap();
//! report.write(std::path::Path::new("out")).unwrap();
//! assert!(report.passed);
//! ```

pub mod config;
pub mod pipelines;
pub mod report;

use std::time::Instant;

pub use config::{ConfigError, ExperimentConfig};
pub use report::{Check, Report, Section, Table, Timing};

use pipelines::Context;

/// Environment variable that fixes the worker thread count.
pub const THREADS_ENV: &str = "POLYCALC_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Subcommand {
    Classify,
    Coeffs,
    Squarefn,
    Dilate,
    Vn,
    Similarity,
    Funcalc,
    FullSuite,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Classify => "classify",
            Subcommand::Coeffs => "coeffs",
            Subcommand::Squarefn => "squarefn",
            Subcommand::Dilate => "dilate",
            Subcommand::Vn => "vn",
            Subcommand::Similarity => "similarity",
            Subcommand::Funcalc => "funcalc",
            Subcommand::FullSuite => "full-suite",
        }
    }
}

type Pipeline = fn(&Context) -> Section;

const SECTIONS: [(Subcommand, Pipeline); 7] = [
    (Subcommand::Coeffs, pipelines::coeffs::run),
    (Subcommand::Classify, pipelines::classify::run),
    (Subcommand::Squarefn, pipelines::squarefn::run),
    (Subcommand::Dilate, pipelines::dilate::run),
    (Subcommand::Vn, pipelines::vn::run),
    (Subcommand::Similarity, pipelines::similarity::run),
    (Subcommand::Funcalc, pipelines::funcalc::run),
];

/// Runs one pipeline (or all of them for `full-suite`).
///
/// Trials inside a section run on the current rayon pool; the report is
/// assembled in a fixed order, so two runs of the same config differ only in
/// the `timing` block.
pub fn run_experiment(cfg: &ExperimentConfig, sub: Subcommand) -> Result<Report, ConfigError> {
    cfg.validate()?;
    let ctx = Context {
        e: cfg.point_set()?,
        cfg: cfg.clone(),
    };
    let start = Instant::now();
    let mut timing = Timing::default();
    let mut sections = Vec::new();
    for (which, run) in SECTIONS {
        if sub != Subcommand::FullSuite && sub != which {
            continue;
        }
        let t0 = Instant::now();
        let mut section = run(&ctx);
        section.seconds = t0.elapsed().as_secs_f64();
        timing.sections_s.insert(section.name.clone(), section.seconds);
        timing.checks.append(&mut section.timed_checks);
        sections.push(section);
    }
    timing.total_s = start.elapsed().as_secs_f64();
    if sub == Subcommand::FullSuite {
        timing.checks.push(Check::at_most(
            "full_suite_runtime_s",
            Some(10),
            timing.total_s,
            cfg.suite.time_limit_s,
        ));
    }
    let passed = sections.iter().all(Section::passed) && timing.checks.iter().all(|c| c.pass);
    Ok(Report {
        subcommand: sub.name().into(),
        seed: cfg.seed,
        passed,
        config: cfg.clone(),
        sections,
        timing,
    })
}

/// Sizes the global rayon pool from [`THREADS_ENV`] when it is set to a
/// positive integer. Has no effect once the pool exists.
pub fn configure_threads() -> anyhow::Result<Option<usize>> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(None);
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| anyhow::anyhow!("{THREADS_ENV} must be a positive integer, got {raw:?}"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(Some(n))
}
