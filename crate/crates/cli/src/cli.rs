//! Command-line surface.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::pipeline::{run, Mode};
use crate::sweep::{csv_header, csv_row, parse_values, sweep};
use crate::{dump, RunError, EXIT_CONFIG, EXIT_FAIL, EXIT_PASS};

#[derive(Debug, Parser)]
#[command(name = "cocycle-bundle", version, about = "Vector bundles from generalized pairs of unitary cocycles")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Experiment config (key = value lines).
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    /// Output directory; overrides `out_dir`.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, value_name = "N")]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Lemma chain only; exit 0 iff every bound holds.
    Verify(Common),
    /// Full pipeline through rank and Chern number.
    Invariants(Common),
    /// One invariants run per value of a parameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// strength, voiculescu_n, n or epsilon.
        #[arg(long)]
        param: String,
        /// Comma-separated values; may be empty.
        #[arg(long, default_value = "", allow_hyphen_values = true)]
        values: String,
    },
    /// Invariants run plus CSV dumps of every intermediate field.
    Dump(Common),
}

fn load(common: &Common) -> Result<ExperimentConfig, RunError> {
    let text = fs::read_to_string(&common.config).map_err(|e| RunError::Config(format!("{}: {e}", common.config.display())))?;
    let mut cfg = ExperimentConfig::parse(&text)?;
    if let Some(out) = &common.out {
        cfg.out_dir = out.clone();
    }
    if let Some(n) = common.threads {
        if n == 0 {
            return Err(RunError::Config("--threads must be at least 1".into()));
        }
        // Only the first call in a process can size the global pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(cfg)
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<(), RunError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| RunError::io(dir, e))?;
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| RunError::io(path, e))
}

fn single(common: &Common, mode: Mode, dump_all: bool) -> Result<i32, RunError> {
    let cfg = load(common)?;
    let r = run(&cfg, mode)?;
    write_json(&cfg.out_dir.join("report.json"), &r.report)?;
    write_json(&cfg.out_dir.join("timings.json"), &r.timings)?;
    if dump_all || cfg.dump_fields {
        dump::write_all(&cfg.out_dir, &r)?;
    }
    let status = &r.report.status;
    if status.pass {
        println!("pass: {}", cfg.out_dir.join("report.json").display());
    } else {
        println!("FAIL [{}]: {}", status.failures.join(", "), cfg.out_dir.join("report.json").display());
    }
    Ok(if status.pass { EXIT_PASS } else { EXIT_FAIL })
}

fn run_sweep(common: &Common, param: &str, values: &str) -> Result<i32, RunError> {
    let cfg = load(common)?;
    let values = parse_values(values);
    let entries = sweep(&cfg, param, &values)?;
    let csv_path = cfg.out_dir.join("sweep.csv");
    write_json(&cfg.out_dir.join("sweep.json"), &entries)?;
    let mut w = csv::Writer::from_path(&csv_path)?;
    w.write_record(csv_header())?;
    for e in &entries {
        w.write_record(csv_row(e))?;
    }
    w.flush().map_err(|e| RunError::io(&csv_path, e))?;
    let failed = entries.iter().filter(|e| !e.pass()).count();
    println!("{} runs, {failed} failed: {}", entries.len(), csv_path.display());
    Ok(if failed == 0 { EXIT_PASS } else { EXIT_FAIL })
}

pub fn execute(cli: &Cli) -> i32 {
    let result = match &cli.command {
        Command::Verify(c) => single(c, Mode::Verify, false),
        Command::Invariants(c) => single(c, Mode::Invariants, false),
        Command::Dump(c) => single(c, Mode::Invariants, true),
        Command::Sweep { common, param, values } => run_sweep(common, param, values),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        e.exit_code()
    })
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(&cli),
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                EXIT_CONFIG
            } else {
                EXIT_PASS
            }
        }
    }
}
