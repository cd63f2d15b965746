//! Scenario runner behind the `dualchart` binary.
//!
//! Each selected suite runs on its own thread and writes only into
//! `<out>/<suite>/`. The run ends with `summary.json` and `summary.txt` in
//! `<out>`. Exit status is 0 when every check passes, 1 when any check or
//! suite fails and 2 for invalid arguments or configuration.

pub mod config;
pub mod report;
mod suites;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::Parser;

pub use config::{ScenarioConfig, Suite, DEFAULT_CONFIG, SCHEMA_VERSION};
pub use report::{Check, Relation, SuiteReport, Summary};

use crate::error::{Error, Result};

/// Overrides the configured output directory; `--out` still wins.
pub const OUT_ENV: &str = "DUALCHART_OUT";

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "dualchart", version, about = "Dual-chart phase-space scenario runner")]
struct Args {
    /// Scenario file; the bundled default is used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Suite name or `all`; overrides the config selection.
    #[arg(long)]
    suite: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// RNG seed; overrides the config value.
    #[arg(long)]
    seed: Option<u64>,
    /// Print the available suites and exit.
    #[arg(long)]
    list_suites: bool,
}

/// Runs `suites` from `cfg` into `out` and writes the summary files.
pub fn run_suites(cfg: &ScenarioConfig, out: &Path) -> Result<Summary> {
    std::fs::create_dir_all(out)?;
    let reports: Vec<SuiteReport> = std::thread::scope(|scope| {
        let handles: Vec<_> = cfg
            .suites
            .iter()
            .map(|&suite| (suite, scope.spawn(move || run_one(suite, cfg, out))))
            .collect();
        handles
            .into_iter()
            .map(|(suite, h)| {
                h.join().unwrap_or_else(|panic| {
                    let msg = panic
                        .downcast_ref::<String>()
                        .cloned()
                        .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                        .unwrap_or_else(|| "suite panicked".into());
                    failed(suite, msg, Vec::new())
                })
            })
            .collect()
    });
    let summary = Summary {
        schema_version: SCHEMA_VERSION,
        seed: cfg.seed,
        passed: reports.iter().all(|r| r.passed),
        suites: reports,
    };
    summary.write(out)?;
    Ok(summary)
}

fn failed(suite: Suite, error: String, files: Vec<String>) -> SuiteReport {
    SuiteReport {
        name: suite.name().into(),
        passed: false,
        error: Some(error),
        checks: Vec::new(),
        files,
    }
}

fn run_one(suite: Suite, cfg: &ScenarioConfig, out: &Path) -> SuiteReport {
    let mut output = match suites::SuiteOutput::create(out, suite) {
        Ok(o) => o,
        Err(e) => return failed(suite, e.to_string(), Vec::new()),
    };
    match suites::run(suite, cfg, &mut output) {
        Ok(checks) => SuiteReport {
            name: suite.name().into(),
            passed: checks.iter().all(|c| c.passed),
            error: None,
            checks,
            files: output.files,
        },
        Err(e) => failed(suite, e.to_string(), output.files),
    }
}

fn resolve(args: &Args) -> Result<(ScenarioConfig, PathBuf)> {
    let mut cfg = match &args.config {
        Some(path) => ScenarioConfig::from_path(path)?,
        None => ScenarioConfig::default_scenario(),
    };
    if let Some(name) = &args.suite {
        cfg.suites = Suite::parse_list(name).ok_or_else(|| Error::Config {
            field: "--suite".into(),
            message: format!("unknown suite `{name}`"),
        })?;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let out = args
        .out
        .clone()
        .or_else(|| std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
        .unwrap_or_else(|| cfg.output_dir.clone());
    Ok((cfg, out))
}

/// Parses `args` (including the program name), runs and returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_PASS };
        }
    };
    if args.list_suites {
        for s in Suite::ALL {
            println!("{:<10} {}", s.name(), s.description());
        }
        return EXIT_PASS;
    }
    let (cfg, out) = match resolve(&args) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    match run_suites(&cfg, &out) {
        Ok(summary) => {
            print!("{}", summary.to_text());
            if summary.passed {
                EXIT_PASS
            } else {
                EXIT_FAIL
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_FAIL
        }
    }
}
