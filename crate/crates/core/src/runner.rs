//! Single runs, pause-time sweeps and CSV reporting.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use crate::config::{Protocol, ScenarioConfig};
use crate::metrics::MetricsReport;
use crate::packet::DropReason;
use crate::sim::{RunOutput, Simulation};
use crate::trace::TraceWriter;

pub const CSV_HEADER: &str = "protocol,pause_time,seed,sent,received,pdf_percent,avg_delay_s,throughput_kbps,routing_pkts,routing_bytes,drop_nrte,drop_ifq,drop_ttl,drop_col,drop_end";

/// Printed where a metric is undefined (no traffic, or no deliveries).
pub const NA: &str = "NA";

const DROP_COLUMNS: [DropReason; 5] = [
    DropReason::NoRoute,
    DropReason::QueueFull,
    DropReason::Ttl,
    DropReason::Collision,
    DropReason::EndOfRun,
];

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{protocol} pause {pause} seed {seed}: {source}")]
    Run {
        protocol: Protocol,
        pause: f64,
        seed: u64,
        source: io::Error,
    },
    #[error("writing {path}: {source}")]
    Output { path: PathBuf, source: io::Error },
}

/// Runs one scenario, writing the trace into `sink`.
pub fn run_with_trace<W: Write>(config: &ScenarioConfig, sink: W) -> io::Result<RunOutput<W>> {
    Simulation::new(config, TraceWriter::new(sink)).finish()
}

/// Runs one scenario without a trace.
pub fn run_scenario(config: &ScenarioConfig) -> MetricsReport {
    Simulation::new(config, TraceWriter::<io::Sink>::disabled())
        .finish()
        .expect("a disabled trace cannot fail")
        .report
}

/// Runs one scenario with its trace written to `path`.
pub fn run_to_file(config: &ScenarioConfig, path: &Path) -> io::Result<MetricsReport> {
    let file = BufWriter::new(File::create(path)?);
    let out = run_with_trace(config, file)?;
    if let Some(w) = out.trace {
        w.into_inner().map_err(|e| e.into_error())?.sync_all()?;
    }
    Ok(out.report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub protocol: Protocol,
    pub pause_time: f64,
    pub seed: u64,
    pub report: MetricsReport,
}

/// Seed-mean of one (protocol, pause) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub protocol: Protocol,
    pub pause_time: f64,
    pub runs: usize,
    pub sent: f64,
    pub received: f64,
    pub pdf: Option<f64>,
    pub avg_delay: Option<f64>,
    pub throughput_kbps: f64,
    pub routing_packets: f64,
    pub routing_bytes: f64,
    pub routing_byte_fraction: f64,
    pub drops: [f64; 5],
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| s / n as f64)
}

impl SweepResult {
    pub fn summaries(&self) -> Vec<SummaryRow> {
        let mut out: Vec<SummaryRow> = Vec::new();
        let mut i = 0;
        while i < self.rows.len() {
            let (p, t) = (self.rows[i].protocol, self.rows[i].pause_time);
            let mut j = i;
            while j < self.rows.len() && self.rows[j].protocol == p && self.rows[j].pause_time == t {
                j += 1;
            }
            let cell = &self.rows[i..j];
            let reports = || cell.iter().map(|r| &r.report);
            let m = |f: &dyn Fn(&MetricsReport) -> f64| mean(reports().map(f)).unwrap_or(0.0);
            let mut drops = [0.0; 5];
            for (k, reason) in DROP_COLUMNS.iter().enumerate() {
                drops[k] = m(&|r| r.drop_count(*reason) as f64);
            }
            out.push(SummaryRow {
                protocol: p,
                pause_time: t,
                runs: cell.len(),
                sent: m(&|r| r.sent as f64),
                received: m(&|r| r.received as f64),
                pdf: mean(reports().filter_map(|r| r.pdf)),
                avg_delay: mean(reports().filter_map(|r| r.avg_delay)),
                throughput_kbps: m(&|r| r.throughput_kbps),
                routing_packets: m(&|r| r.routing_packets as f64),
                routing_bytes: m(&|r| r.routing_bytes as f64),
                routing_byte_fraction: m(&|r| r.routing_byte_fraction()),
                drops,
            });
            i = j;
        }
        out
    }

    pub fn summary(&self, protocol: Protocol, pause_time: f64) -> Option<SummaryRow> {
        self.summaries()
            .into_iter()
            .find(|s| s.protocol == protocol && s.pause_time == pause_time)
    }
}

fn opt(x: Option<f64>, decimals: usize) -> String {
    x.map_or_else(|| NA.to_string(), |v| format!("{v:.decimals$}"))
}

pub fn csv_row(row: &SweepRow) -> String {
    let r = &row.report;
    let mut s = format!(
        "{},{},{},{},{},{},{},{:.2},{},{}",
        row.protocol,
        row.pause_time,
        row.seed,
        r.sent,
        r.received,
        opt(r.pdf, 4),
        opt(r.avg_delay, 4),
        r.throughput_kbps,
        r.routing_packets,
        r.routing_bytes,
    );
    for reason in DROP_COLUMNS {
        s.push_str(&format!(",{}", r.drop_count(reason)));
    }
    s
}

pub fn csv_summary_row(row: &SummaryRow) -> String {
    let mut s = format!(
        "{},{},mean,{:.2},{:.2},{},{},{:.2},{:.2},{:.2}",
        row.protocol,
        row.pause_time,
        row.sent,
        row.received,
        opt(row.pdf, 4),
        opt(row.avg_delay, 4),
        row.throughput_kbps,
        row.routing_packets,
        row.routing_bytes,
    );
    for d in row.drops {
        s.push_str(&format!(",{d:.2}"));
    }
    s
}

/// Header, one line per run, then the seed-mean lines.
pub fn write_csv<W: Write>(result: &SweepResult, mut out: W) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in &result.rows {
        writeln!(out, "{}", csv_row(r))?;
    }
    for s in result.summaries() {
        writeln!(out, "{}", csv_summary_row(&s))?;
    }
    out.flush()
}

/// Sorted, deduplicated cross product in (protocol, pause, seed) order.
pub fn sweep_plan(pauses: &[f64], seeds: &[u64], protocols: &[Protocol]) -> Vec<(Protocol, f64, u64)> {
    let mut ps = protocols.to_vec();
    ps.sort();
    ps.dedup();
    let mut ts = pauses.to_vec();
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    let mut ss = seeds.to_vec();
    ss.sort();
    ss.dedup();
    let mut plan = Vec::with_capacity(ps.len() * ts.len() * ss.len());
    for &p in &ps {
        for &t in &ts {
            for &s in &ss {
                plan.push((p, t, s));
            }
        }
    }
    plan
}

pub fn trace_file_name(protocol: Protocol, pause: f64, seed: u64) -> String {
    format!("{protocol}_pause{pause}_seed{seed}.tr")
}

/// Every combination in parallel; rows come back in plan order. On a
/// failure the rows before the first failing run are returned alongside
/// the error.
pub fn sweep(
    base: &ScenarioConfig,
    pauses: &[f64],
    seeds: &[u64],
    protocols: &[Protocol],
    trace_dir: Option<&Path>,
) -> Result<SweepResult, (SweepResult, RunError)> {
    let plan = sweep_plan(pauses, seeds, protocols);
    if let Some(dir) = trace_dir {
        if let Err(source) = fs::create_dir_all(dir) {
            let err = RunError::Output {
                path: dir.to_path_buf(),
                source,
            };
            return Err((SweepResult::default(), err));
        }
    }
    let outcomes: Vec<Result<SweepRow, RunError>> = plan
        .par_iter()
        .map(|&(protocol, pause, seed)| {
            let config = ScenarioConfig {
                protocol,
                pause_time: pause,
                seed,
                ..base.clone()
            };
            let report = match trace_dir {
                Some(dir) => run_to_file(&config, &dir.join(trace_file_name(protocol, pause, seed)))
                    .map_err(|source| RunError::Run {
                        protocol,
                        pause,
                        seed,
                        source,
                    })?,
                None => run_scenario(&config),
            };
            Ok(SweepRow {
                protocol,
                pause_time: pause,
                seed,
                report,
            })
        })
        .collect();
    let mut result = SweepResult::default();
    for o in outcomes {
        match o {
            Ok(row) => result.rows.push(row),
            Err(e) => return Err((result, e)),
        }
    }
    Ok(result)
}

/// `1..5` (inclusive) or a comma list.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>, String> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once("..") {
        let lo: u64 = a.trim().parse().map_err(|_| format!("bad seed range `{s}`"))?;
        let hi: u64 = b.trim().parse().map_err(|_| format!("bad seed range `{s}`"))?;
        if lo > hi {
            return Err(format!("empty seed range `{s}`"));
        }
        if hi - lo >= 1_000_000 {
            return Err(format!("seed range `{s}` is too large"));
        }
        return Ok((lo..=hi).collect());
    }
    list(s, |x| x.parse::<u64>().ok(), "seed")
}

pub fn parse_pauses(s: &str) -> Result<Vec<f64>, String> {
    list(s, |x| x.parse::<f64>().ok().filter(|v| v.is_finite() && *v >= 0.0), "pause time")
}

pub fn parse_protocols(s: &str) -> Result<Vec<Protocol>, String> {
    list(s, |x| x.parse::<Protocol>().ok(), "protocol")
}

fn list<T>(s: &str, f: impl Fn(&str) -> Option<T>, what: &str) -> Result<Vec<T>, String> {
    let out: Vec<T> = s
        .split(',')
        .map(|x| f(x.trim()).ok_or_else(|| format!("bad {what} `{}`", x.trim())))
        .collect::<Result<_, _>>()?;
    if out.is_empty() {
        return Err(format!("no {what} given"));
    }
    Ok(out)
}
