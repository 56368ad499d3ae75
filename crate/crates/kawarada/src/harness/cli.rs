//! Command-line driver: subcommands over a JSON config, outputs as files.
//!
//! Exit codes: 0 on success, 1 on invalid configuration or a structure
//! violation, 2 when a study is inconclusive. Every output is deterministic:
//! rerunning a subcommand with the same config rewrites the same bytes.

use std::ffi::OsString;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::harness::config::RunConfig;
use crate::harness::io::to_json_string_exact;
use crate::harness::studies::{converge_space, converge_time, find_critical_a};
use crate::harness::validate::validate_linalg;
use crate::splitting::{run_with_policy, RunSummary, Termination};

#[derive(Parser, Debug)]
#[command(
    name = "kawarada",
    version,
    about = "Implicit operator-splitting solver for one-dimensional quenching problems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the splitting scheme once; writes trajectory.csv and summary.json.
    Run(CommonArgs),
    /// Temporal-order study against the explicit reference; writes
    /// order_time.json.
    ConvergeTime(CommonArgs),
    /// Spatial-order study against the explicit reference; writes
    /// order_space.json.
    ConvergeSpace(CommonArgs),
    /// Bisect the critical half-width; writes critical_a.json.
    CriticalA(CommonArgs),
    /// Cross-check the linear-algebra layer; writes validate.json. Runs a
    /// built-in suite, no config needed.
    Validate(ValidateArgs),
}

#[derive(clap::Args, Debug)]
struct CommonArgs {
    /// Path to the JSON configuration.
    #[arg(long)]
    config: PathBuf,
    /// Directory for output files (created if absent).
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(clap::Args, Debug)]
struct ValidateArgs {
    /// Directory for output files (created if absent).
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

/// Entry point behind `main`; returns the process exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(Error::Inconclusive { a }) => {
            eprintln!(
                "inconclusive: behavior at a = {a} neither quenched nor stagnated within budget"
            );
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Run(args) => run_mode(&args),
        Command::ConvergeTime(args) => converge_time_mode(&args),
        Command::ConvergeSpace(args) => converge_space_mode(&args),
        Command::CriticalA(args) => critical_a_mode(&args),
        Command::Validate(args) => validate_mode(&args),
    }
}

fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
    RunConfig::from_json(&text)
        .map_err(|e| Error::Config(format!("config {}: {e}", path.display())))
}

fn ensure_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| {
        Error::Config(format!(
            "cannot create output directory {}: {e}",
            dir.display()
        ))
    })
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<()> {
    let path = dir.join(name);
    let mut file = fs::File::create(&path)
        .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))?;
    file.write_all(text.as_bytes())?;
    Ok(())
}

#[derive(Serialize)]
struct RunFileSummary<'a> {
    termination: Termination,
    #[serde(flatten)]
    summary: &'a RunSummary,
}

fn run_mode(args: &CommonArgs) -> Result<()> {
    let cfg = load_config(&args.config)?;
    let spec = cfg.problem.build_spec()?;
    let trajectory = run_with_policy(&spec, cfg.tol, &cfg.run_policy())?;
    ensure_out(&args.out)?;
    let mut csv = Vec::new();
    trajectory.write_csv(&mut csv)?;
    write_text(
        &args.out,
        "trajectory.csv",
        &String::from_utf8(csv).expect("CSV is UTF-8"),
    )?;
    let summary = RunFileSummary {
        termination: trajectory.termination,
        summary: &trajectory.summary,
    };
    write_text(&args.out, "summary.json", &to_json_string_exact(&summary)?)?;
    Ok(())
}

fn converge_time_mode(args: &CommonArgs) -> Result<()> {
    let cfg = load_config(&args.config)?;
    let section = cfg
        .converge_time
        .as_ref()
        .ok_or_else(|| Error::Config("config has no converge_time section".to_string()))?;
    let spec = cfg.problem.build_spec()?;
    let report = converge_time(&spec, section.t_star, section.levels)?;
    ensure_out(&args.out)?;
    write_text(
        &args.out,
        "order_time.json",
        &to_json_string_exact(&report)?,
    )
}

fn converge_space_mode(args: &CommonArgs) -> Result<()> {
    let cfg = load_config(&args.config)?;
    let section = cfg
        .converge_space
        .as_ref()
        .ok_or_else(|| Error::Config("config has no converge_space section".to_string()))?;
    let spec = cfg.problem.build_spec()?;
    let family = cfg.problem.grid.family()?;
    let report = converge_space(&spec, section.t_star, section.levels, family)?;
    ensure_out(&args.out)?;
    write_text(
        &args.out,
        "order_space.json",
        &to_json_string_exact(&report)?,
    )
}

#[derive(Serialize)]
struct CriticalAResult {
    a_critical: f64,
    bracket: [f64; 2],
    tol_a: f64,
    budget_time: f64,
    #[serde(rename = "N")]
    n: usize,
}

fn critical_a_mode(args: &CommonArgs) -> Result<()> {
    let cfg = load_config(&args.config)?;
    let section = cfg
        .critical_a
        .as_ref()
        .ok_or_else(|| Error::Config("config has no critical_a section".to_string()))?;
    let f = crate::model::nonlinearity_by_label(&cfg.problem.nonlinearity)?;
    let a_critical = find_critical_a(
        &f,
        (section.bracket[0], section.bracket[1]),
        cfg.problem.n,
        section.budget_time,
        section.tol_a,
    )?;
    ensure_out(&args.out)?;
    let result = CriticalAResult {
        a_critical,
        bracket: section.bracket,
        tol_a: section.tol_a,
        budget_time: section.budget_time,
        n: cfg.problem.n,
    };
    write_text(
        &args.out,
        "critical_a.json",
        &to_json_string_exact(&result)?,
    )
}

fn validate_mode(args: &ValidateArgs) -> Result<()> {
    let grids = vec![
        Grid::graded(1.4, 11, 1.5)?,
        Grid::graded(1.0, 12, 2.0)?,
        Grid::graded(2.0_f64.sqrt(), 16, 2.0)?,
    ];
    let report = validate_linalg(&[3, 8, 16, 33, 64], &grids);
    ensure_out(&args.out)?;
    write_text(&args.out, "validate.json", &to_json_string_exact(&report)?)?;
    if report.all_pass {
        Ok(())
    } else {
        Err(Error::StructureViolation {
            step: 0,
            what: "validation suite reported failures (see validate.json)".to_string(),
        })
    }
}
