//! Runs the full suite with the default config and prints one PASS/FAIL line
//! per acceptance criterion. A second run on a differently sized thread pool
//! must reproduce the report (minus wall-clock timing) byte for byte.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::ExitCode;

use polycalc_cli::{run_experiment, ExperimentConfig, Report, Subcommand};

const CRITERIA: [(u8, &str); 10] = [
    (1, "Taylor coefficients: recursion, partial fractions, closed forms"),
    (2, "gamma bound and adaptive ergodic residual"),
    (3, "ergodic projections: algebra and bicommutant"),
    (4, "single-operator dilation error and window doubling"),
    (5, "Schaffer and Ando dilations"),
    (6, "joint dilation of commuting triples"),
    (7, "von Neumann ratio bounds"),
    (8, "joint similarity to contractions"),
    (9, "contour functional calculus"),
    (10, "full-suite runtime and determinism"),
];

fn run(threads: usize, dir: &Path) -> Report {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().expect("thread pool");
    let report = pool
        .install(|| run_experiment(&ExperimentConfig::default(), Subcommand::FullSuite))
        .expect("default config is valid");
    report.write(dir).expect("report written");
    report
}

fn csv_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .expect("report dir")
        .filter_map(|entry| {
            let path = entry.ok()?.path();
            (path.extension()? == "csv").then(|| {
                let name = path.file_name().unwrap().to_string_lossy().into_owned();
                (name, fs::read(&path).unwrap())
            })
        })
        .collect()
}

fn main() -> ExitCode {
    let first_dir = tempfile::tempdir().expect("tempdir");
    let second_dir = tempfile::tempdir().expect("tempdir");
    let first = run(1, first_dir.path());
    let second = run(2, second_dir.path());

    let first_csv = csv_files(first_dir.path());
    let deterministic = first.deterministic_json() == second.deterministic_json()
        && !first_csv.is_empty()
        && first_csv == csv_files(second_dir.path());

    let verdicts = first.criteria();
    let mut all = true;
    for (k, label) in CRITERIA {
        let mut pass = verdicts.get(&k).copied().unwrap_or(false);
        if k == 10 {
            pass &= deterministic;
        }
        all &= pass;
        println!("{} criterion {k:>2}: {label}", if pass { "PASS" } else { "FAIL" });
        for check in first.all_checks().filter(|c| c.criterion == Some(k)) {
            println!(
                "       {:<4} {:<36} {:>12.3e} (limit {:.3e})",
                if check.pass { "ok" } else { "bad" },
                check.name,
                check.value,
                check.threshold
            );
            if let (false, Some(detail)) = (check.pass, &check.detail) {
                println!("            {detail}");
            }
        }
        if k == 10 {
            println!(
                "       {:<4} {:<36} {:>12}",
                if deterministic { "ok" } else { "bad" },
                "rerun_identical",
                deterministic
            );
        }
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
