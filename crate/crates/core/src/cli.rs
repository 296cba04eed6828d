//! `east-sim` command line: run, compare, sweep and report.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::config::{parse_override, SimConfig, CONFIG_KEYS};
use crate::engine::{run_simulation, SimOutput};
use crate::error::{Error, Result};
use crate::metrics::{compare_runs, VariantTotals};
use crate::output::{
    render_report, write_compare, write_run, write_sweep_summary, SweepRow, COMPARE_CSV,
    SWEEP_SUMMARY_CSV,
};
use crate::protocol::ControllerKind;

/// Environment variable that overrides the configured seed.
pub const SEED_ENV: &str = "EAST_SEED";

const NOT_SWEEPABLE: &[&str] = &["temperature.mode", "temperature.trace_path"];

#[derive(Debug, Parser)]
#[command(
    name = "east-sim",
    version,
    about = "Temperature-aware transmission power control simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one simulation and write its CSV outputs.
    Run(RunArgs),
    /// Run EAST and the classical baseline on the same scenario.
    Compare(CompareArgs),
    /// Run once per value of one config key.
    Sweep(SweepArgs),
    /// Print a prior run's summary as a table.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ScenarioArgs {
    /// Config file (`key = value` lines). Omitted keys take defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, short)]
    pub out: PathBuf,
    /// Config override, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Seed; wins over the config file and EAST_SEED.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Round from which per-node figure series are taken.
    #[arg(long)]
    pub figure_round: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Override applied only to the EAST run.
    #[arg(long = "east-set", value_name = "KEY=VALUE")]
    pub east_overrides: Vec<String>,
    /// Override applied only to the classical run.
    #[arg(long = "classical-set", value_name = "KEY=VALUE")]
    pub classical_overrides: Vec<String>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Config key to vary.
    #[arg(long)]
    pub key: String,
    /// Comma-separated values.
    #[arg(long, value_delimiter = ',', required = true)]
    pub values: Vec<String>,
    /// Worker threads; output does not depend on it.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// Directory written by `run`.
    #[arg(long)]
    pub dir: PathBuf,
}

fn parse_overrides(list: &[String]) -> Result<Vec<(String, String)>> {
    list.iter().map(|s| parse_override(s)).collect()
}

/// Resolves the scenario config: file, then EAST_SEED, then `--set`, then `--seed`.
pub fn resolve_config(args: &ScenarioArgs, extra: &[(String, String)]) -> Result<SimConfig> {
    let mut overrides = Vec::new();
    if let Ok(seed) = std::env::var(SEED_ENV) {
        overrides.push(("seed".to_string(), seed));
    }
    overrides.extend(parse_overrides(&args.overrides)?);
    overrides.extend_from_slice(extra);
    if let Some(seed) = args.seed {
        overrides.push(("seed".to_string(), seed.to_string()));
    }
    SimConfig::load(args.config.as_deref(), &overrides)
}

fn report_run(dir: &Path, out: &SimOutput) {
    match out.summary.extinction_round {
        Some(r) => println!(
            "{}: {} rounds, all nodes dead after round {r} -> {}",
            out.config.controller,
            out.summary.rounds_executed,
            dir.display()
        ),
        None => println!(
            "{}: {} rounds, {} nodes alive -> {}",
            out.config.controller,
            out.summary.rounds_executed,
            out.records.last().map_or(0, |r| r.alive),
            dir.display()
        ),
    }
}

pub fn cmd_run(args: &RunArgs) -> Result<()> {
    let cfg = resolve_config(&args.scenario, &[])?;
    let out = run_simulation(&cfg)?;
    write_run(&args.scenario.out, &out, args.scenario.figure_round)?;
    report_run(&args.scenario.out, &out);
    Ok(())
}

pub fn cmd_compare(args: &CompareArgs) -> Result<()> {
    let variant = |kind: ControllerKind, list: &[String]| -> Result<SimConfig> {
        let mut extra = parse_overrides(list)?;
        extra.push(("controller".to_string(), kind.label().to_string()));
        resolve_config(&args.scenario, &extra)
    };
    let east_cfg = variant(ControllerKind::East, &args.east_overrides)?;
    let classical_cfg = variant(ControllerKind::Classical, &args.classical_overrides)?;
    if east_cfg.scenario_fingerprint() != classical_cfg.scenario_fingerprint() {
        return Err(Error::Usage(
            "per-variant overrides make the EAST and classical scenarios differ".into(),
        ));
    }
    let (east, classical) = rayon::join(
        || run_simulation(&east_cfg),
        || run_simulation(&classical_cfg),
    );
    let (east, classical) = (east?, classical?);
    let report = compare_runs(&east, &classical)?;

    let out_dir = &args.scenario.out;
    for (name, run) in [("east", &east), ("classical", &classical)] {
        let dir = out_dir.join(name);
        write_run(&dir, run, args.scenario.figure_round)?;
        report_run(&dir, run);
    }
    write_compare(&out_dir.join(COMPARE_CSV), &report)?;
    println!(
        "control packets delta {}, energy delta {:.6} J, EAST dominates: {}",
        report.deltas.control_packets, report.deltas.energy_j, report.east_dominates
    );
    Ok(())
}

fn run_dir_name(key: &str, value: &str) -> String {
    let clean: String = value
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || "._-".contains(c) {
                c
            } else {
                '_'
            }
        })
        .collect();
    format!("{key}={clean}")
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    if !CONFIG_KEYS.contains(&args.key.as_str()) || NOT_SWEEPABLE.contains(&args.key.as_str()) {
        return Err(Error::Usage(format!(
            "`{}` is not a sweepable key",
            args.key
        )));
    }
    let configs = args
        .values
        .iter()
        .map(|v| resolve_config(&args.scenario, &[(args.key.clone(), v.clone())]))
        .collect::<Result<Vec<_>>>()?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::Usage(format!("cannot start worker pool: {e}")))?;
    // results come back in value order whatever the pool size
    let outputs: Vec<Result<SimOutput>> =
        pool.install(|| configs.par_iter().map(run_simulation).collect());

    let mut rows = Vec::with_capacity(outputs.len());
    for (value, out) in args.values.iter().zip(outputs) {
        let out = out?;
        let name = run_dir_name(&args.key, value);
        let dir = args.scenario.out.join(&name);
        write_run(&dir, &out, args.scenario.figure_round)?;
        report_run(&dir, &out);
        rows.push(SweepRow {
            value: value.clone(),
            rounds_executed: out.summary.rounds_executed,
            totals: VariantTotals::from_records(out.config.controller, &out.records),
            run_dir: name,
        });
    }
    write_sweep_summary(&args.scenario.out.join(SWEEP_SUMMARY_CSV), &args.key, &rows)?;
    Ok(())
}

pub fn cmd_report(args: &ReportArgs) -> Result<()> {
    print!("{}", render_report(&args.dir)?);
    Ok(())
}

pub fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Report(a) => cmd_report(a),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("east-sim: {e}");
            e.exit_code()
        }
    }
}
