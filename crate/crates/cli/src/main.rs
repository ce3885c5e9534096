use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use manet_sim::config::{parse_overrides, ScenarioConfig};
use manet_sim::runner::{
    csv_row, parse_pauses, parse_protocols, parse_seeds, run_to_file, sweep, write_csv, SweepRow,
    CSV_HEADER,
};

const CONFIG_ERROR: u8 = 1;
const RUNTIME_ERROR: u8 = 2;

#[derive(Parser)]
#[command(name = "manet-sim", version, about = "DSDV and AODV in a simulated mobile ad hoc network")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario; prints a CSV row and writes the trace.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "trace.tr")]
        trace: PathBuf,
        /// `--key value` settings that override the config file.
        #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "OVERRIDES")]
        overrides: Vec<String>,
    },
    /// Run every (protocol, pause time, seed) combination.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "0,20,40,60,80,100")]
        pauses: String,
        #[arg(long, default_value = "1..5")]
        seeds: String,
        #[arg(long, default_value = "aodv,dsdv")]
        protocols: String,
        #[arg(long, default_value = "results.csv")]
        out: PathBuf,
        #[arg(long)]
        trace_dir: Option<PathBuf>,
        #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "OVERRIDES")]
        overrides: Vec<String>,
    },
}

type Settings = Vec<(String, String)>;

enum Failure {
    Config(String),
    Runtime(String),
}

/// Splits the trailing words into scenario settings and the subcommand's
/// own options, which may also appear after the first setting.
fn split_args(words: &[String], own: &[&str]) -> Result<(Settings, Settings), Failure> {
    let pairs = parse_overrides(words).map_err(|e| Failure::Config(e.to_string()))?;
    Ok(pairs.into_iter().partition(|(k, _)| !own.contains(&k.as_str())))
}

fn take(own: &[(String, String)], name: &str) -> Option<String> {
    own.iter().rev().find(|(k, _)| k == name).map(|(_, v)| v.clone())
}

fn load(config: Option<&Path>, pairs: &[(String, String)]) -> Result<ScenarioConfig, Failure> {
    let text = match config {
        Some(p) => Some(
            fs::read_to_string(p).map_err(|e| Failure::Config(format!("reading {}: {e}", p.display())))?,
        ),
        None => None,
    };
    ScenarioConfig::from_sources(text.as_deref(), pairs).map_err(|e| Failure::Config(e.to_string()))
}

fn run(config: Option<&Path>, trace: &Path, overrides: &[String]) -> Result<(), Failure> {
    let (pairs, own) = split_args(overrides, &["config", "trace"])?;
    let config = take(&own, "config").map(PathBuf::from).or(config.map(Path::to_path_buf));
    let trace = take(&own, "trace").map_or(trace.to_path_buf(), PathBuf::from);
    let trace = trace.as_path();
    let cfg = load(config.as_deref(), &pairs)?;
    let report = run_to_file(&cfg, trace)
        .map_err(|e| Failure::Runtime(format!("trace {}: {e}", trace.display())))?;
    let row = SweepRow {
        protocol: cfg.protocol,
        pause_time: cfg.pause_time,
        seed: cfg.seed,
        report,
    };
    let mut out = io::stdout().lock();
    writeln!(out, "{CSV_HEADER}\n{}", csv_row(&row)).map_err(|e| Failure::Runtime(e.to_string()))
}

#[allow(clippy::too_many_arguments)]
fn run_sweep(
    config: Option<&Path>,
    pauses: &str,
    seeds: &str,
    protocols: &str,
    out: &Path,
    trace_dir: Option<&Path>,
    overrides: &[String],
) -> Result<(), Failure> {
    let (pairs, own) = split_args(overrides, &["config", "pauses", "seeds", "protocols", "out", "trace-dir"])?;
    let config = take(&own, "config").map(PathBuf::from).or(config.map(Path::to_path_buf));
    let pauses = take(&own, "pauses").unwrap_or(pauses.to_string());
    let seeds = take(&own, "seeds").unwrap_or(seeds.to_string());
    let protocols = take(&own, "protocols").unwrap_or(protocols.to_string());
    let out = take(&own, "out").map_or(out.to_path_buf(), PathBuf::from);
    let trace_dir = take(&own, "trace-dir").map(PathBuf::from).or(trace_dir.map(Path::to_path_buf));
    let (out, trace_dir) = (out.as_path(), trace_dir.as_deref());
    let cfg = load(config.as_deref(), &pairs)?;
    let pauses = parse_pauses(&pauses).map_err(|e| Failure::Config(format!("--pauses: {e}")))?;
    let seeds = parse_seeds(&seeds).map_err(|e| Failure::Config(format!("--seeds: {e}")))?;
    let protocols = parse_protocols(&protocols).map_err(|e| Failure::Config(format!("--protocols: {e}")))?;
    let (result, failure) = match sweep(&cfg, &pauses, &seeds, &protocols, trace_dir) {
        Ok(r) => (r, None),
        Err((partial, e)) => (partial, Some(e)),
    };
    let write = || -> io::Result<()> {
        let mut w = BufWriter::new(File::create(out)?);
        write_csv(&result, &mut w)?;
        w.into_inner().map_err(|e| e.into_error())?.sync_all()
    };
    write().map_err(|e| Failure::Runtime(format!("writing {}: {e}", out.display())))?;
    match failure {
        Some(e) => Err(Failure::Runtime(e.to_string())),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(CONFIG_ERROR);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    let outcome = match &cli.command {
        Command::Run {
            config,
            trace,
            overrides,
        } => run(config.as_deref(), trace, overrides),
        Command::Sweep {
            config,
            pauses,
            seeds,
            protocols,
            out,
            trace_dir,
            overrides,
        } => run_sweep(
            config.as_deref(),
            pauses,
            seeds,
            protocols,
            out,
            trace_dir.as_deref(),
            overrides,
        ),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("manet-sim: config error: {m}");
            ExitCode::from(CONFIG_ERROR)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("manet-sim: {m}");
            ExitCode::from(RUNTIME_ERROR)
        }
    }
}
