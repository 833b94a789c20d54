//! Command-line front end: scenario selection, configuration resolution,
//! and CSV/JSON reporting.
//!
//! Exit codes: 0 when every check passes, 1 when any check fails, 2 on
//! usage or I/O errors. Reports are written atomically, so readers never
//! observe a partial file.

pub mod config;
pub mod report;
pub mod scenarios;

use std::time::Instant;

use clap::Parser;

use config::{Cli, OutputFormat};
use report::{emit_csv, ConfigEcho, JsonReport, SamplesDigest, TestLine};

/// Parse `std::env::args`, run the selected scenario, and return the
/// process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    execute(&cli)
}

/// Run a parsed invocation; factored out so tests can drive it directly.
pub fn execute(cli: &Cli) -> i32 {
    let cfg = match config::resolve(cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("pvsim: {e}");
            return 2;
        }
    };
    let start = Instant::now();
    let out = match scenarios::run_scenario(&cfg) {
        Ok(out) => out,
        Err(e) => {
            eprintln!("pvsim: {e}");
            return 2;
        }
    };
    let runtime_seconds = start.elapsed().as_secs_f64();

    let content = match cfg.format {
        OutputFormat::Csv => match &out.table {
            Some(table) => table.emit(),
            None => emit_csv(&out.statistic_name, &out.samples),
        },
        OutputFormat::Json => JsonReport {
            config: ConfigEcho::from_run(&cfg),
            tests: out.tests.iter().map(TestLine::from).collect(),
            samples_digest: SamplesDigest::from_samples(&out.samples),
            runtime_seconds,
        }
        .emit(),
    };
    if let Err(e) = report::atomic_write(&cfg.out_path, &content) {
        eprintln!("pvsim: cannot write {}: {e}", cfg.out_path.display());
        return 2;
    }

    let mut failures = 0usize;
    for t in &out.tests {
        let verdict = if t.pass { "PASS" } else { "FAIL" };
        println!(
            "{verdict} {name} statistic={stat:.6e} threshold={thr:.6e}",
            name = t.name,
            stat = t.statistic,
            thr = t.threshold
        );
        if !t.pass {
            failures += 1;
        }
    }
    println!(
        "{command}: {passed}/{total} checks passed, wrote {path} ({runtime_seconds:.2} s)",
        command = cfg.command.name(),
        passed = out.tests.len() - failures,
        total = out.tests.len(),
        path = cfg.out_path.display(),
    );
    if failures == 0 {
        0
    } else {
        1
    }
}
