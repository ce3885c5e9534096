//! Line-oriented event trace and an independent re-parser.
//!
//! One event per line, space separated:
//!
//! ```text
//! <op> <time> <node> <layer> <ptype> <pkt_id> <size> <src> <dst> <reason>
//! ```
//!
//! `op` is one of `s r f d`, `time` has six decimals, the broadcast
//! destination is `-1`, and `reason` is `-` except on drops.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::{self, BufRead, Write};

use thiserror::Error;

use crate::engine::SimTime;
use crate::metrics::{MetricsReport, Totals};
use crate::packet::{Address, DropReason, NodeId, PacketType};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TraceOp {
    Send,
    Receive,
    Forward,
    Drop,
}

impl TraceOp {
    fn as_char(self) -> char {
        match self {
            TraceOp::Send => 's',
            TraceOp::Receive => 'r',
            TraceOp::Forward => 'f',
            TraceOp::Drop => 'd',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Layer {
    Agt,
    Rtr,
    Mac,
}

impl Layer {
    fn as_str(self) -> &'static str {
        match self {
            Layer::Agt => "AGT",
            Layer::Rtr => "RTR",
            Layer::Mac => "MAC",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceRecord {
    pub op: TraceOp,
    pub time: SimTime,
    pub node: NodeId,
    pub layer: Layer,
    pub ptype: PacketType,
    pub uid: u64,
    pub size: u32,
    pub src: NodeId,
    pub dst: Address,
    pub reason: Option<DropReason>,
}

impl fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {} {} {} {} {} {} {} {}",
            self.op.as_char(),
            self.time,
            self.node,
            self.layer.as_str(),
            self.ptype.as_str(),
            self.uid,
            self.size,
            self.src,
            self.dst,
            self.reason.map_or("-", DropReason::as_str),
        )
    }
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("trace I/O: {0}")]
    Io(#[from] io::Error),
}

fn parse_time(s: &str) -> Option<SimTime> {
    let (whole, frac) = s.split_once('.')?;
    if whole.is_empty()
        || frac.len() != 6
        || !whole.bytes().all(|b| b.is_ascii_digit())
        || !frac.bytes().all(|b| b.is_ascii_digit())
    {
        return None;
    }
    let secs: u64 = whole.parse().ok()?;
    let micros: u64 = frac.parse().ok()?;
    secs.checked_mul(1_000_000)?
        .checked_add(micros)
        .map(SimTime::from_micros)
}

fn parse_u<T: std::str::FromStr>(s: &str) -> Option<T> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

/// Parses one trace line (without its newline).
pub fn parse_line(line: &str) -> Result<TraceRecord, String> {
    let fields: Vec<&str> = line.split(' ').collect();
    if fields.len() != 10 {
        return Err(format!("expected 10 fields, found {}", fields.len()));
    }
    let op = match fields[0] {
        "s" => TraceOp::Send,
        "r" => TraceOp::Receive,
        "f" => TraceOp::Forward,
        "d" => TraceOp::Drop,
        other => return Err(format!("unknown op `{other}`")),
    };
    let time = parse_time(fields[1]).ok_or_else(|| format!("bad time `{}`", fields[1]))?;
    let node = parse_u(fields[2]).map(NodeId).ok_or("bad node")?;
    let layer = match fields[3] {
        "AGT" => Layer::Agt,
        "RTR" => Layer::Rtr,
        "MAC" => Layer::Mac,
        other => return Err(format!("unknown layer `{other}`")),
    };
    let ptype: PacketType = fields[4]
        .parse()
        .map_err(|_| format!("unknown packet type `{}`", fields[4]))?;
    let uid = parse_u(fields[5]).ok_or("bad packet id")?;
    let size = parse_u(fields[6]).ok_or("bad size")?;
    let src = parse_u(fields[7]).map(NodeId).ok_or("bad src")?;
    let dst = match fields[8] {
        "-1" => Address::Broadcast,
        s => Address::Node(parse_u(s).map(NodeId).ok_or("bad dst")?),
    };
    let reason = match (op, fields[9]) {
        (TraceOp::Drop, "-") => return Err("drop without reason".into()),
        (TraceOp::Drop, r) => Some(r.parse().map_err(|_| format!("unknown reason `{r}`"))?),
        (_, "-") => None,
        (_, r) => return Err(format!("reason `{r}` on a non-drop event")),
    };
    Ok(TraceRecord {
        op,
        time,
        node,
        layer,
        ptype,
        uid,
        size,
        src,
        dst,
        reason,
    })
}

/// Writes records one per line; the first I/O error sticks.
pub struct TraceWriter<W: Write> {
    sink: Option<W>,
    error: Option<io::Error>,
    lines: u64,
}

impl<W: Write> TraceWriter<W> {
    pub fn new(sink: W) -> Self {
        TraceWriter {
            sink: Some(sink),
            error: None,
            lines: 0,
        }
    }

    /// A writer that discards everything.
    pub fn disabled() -> Self {
        TraceWriter {
            sink: None,
            error: None,
            lines: 0,
        }
    }

    pub fn write(&mut self, rec: &TraceRecord) {
        if self.error.is_some() {
            return;
        }
        if let Some(sink) = self.sink.as_mut() {
            if let Err(e) = writeln!(sink, "{rec}") {
                self.error = Some(e);
            }
            self.lines += 1;
        }
    }

    pub fn failed(&self) -> bool {
        self.error.is_some()
    }

    pub fn lines(&self) -> u64 {
        self.lines
    }

    pub fn finish(mut self) -> io::Result<Option<W>> {
        if let Some(e) = self.error.take() {
            return Err(e);
        }
        if let Some(s) = self.sink.as_mut() {
            s.flush()?;
        }
        Ok(self.sink)
    }
}

/// Rebuilds the run's counts from a trace, knowing nothing about the
/// simulator. The horizon is a run parameter, not part of the trace.
#[derive(Debug, Default)]
pub struct TraceSummary {
    totals: Totals,
    sent_at: HashMap<u64, SimTime>,
    sizes: HashMap<u64, u32>,
    received: HashSet<u64>,
    /// (src, dst) pair -> [sent, delivered, dropped]
    per_pair: HashMap<(NodeId, Address), [u64; 3]>,
}

impl TraceSummary {
    pub fn observe(&mut self, rec: &TraceRecord) -> Result<(), String> {
        let data = rec.ptype == PacketType::Cbr;
        match (rec.op, rec.layer, data) {
            (TraceOp::Send, Layer::Agt, true) => {
                if self.sent_at.insert(rec.uid, rec.time).is_some() {
                    return Err(format!("packet {} sent twice", rec.uid));
                }
                self.sizes.insert(rec.uid, rec.size);
                self.totals.sent += 1;
                self.per_pair.entry((rec.src, rec.dst)).or_default()[0] += 1;
            }
            (TraceOp::Receive, Layer::Agt, true) => {
                let sent = *self
                    .sent_at
                    .get(&rec.uid)
                    .ok_or_else(|| format!("packet {} received but never sent", rec.uid))?;
                if rec.time < sent {
                    return Err(format!("packet {} received before it was sent", rec.uid));
                }
                if self.received.insert(rec.uid) {
                    self.totals.received += 1;
                    self.totals.total_delay_us += (rec.time - sent).as_micros() as u128;
                    self.totals.data_bytes_delivered += self.sizes[&rec.uid] as u64;
                    self.per_pair.entry((rec.src, rec.dst)).or_default()[1] += 1;
                }
            }
            (TraceOp::Send | TraceOp::Forward, Layer::Rtr, false) => {
                self.totals.routing_packets += 1;
                self.totals.routing_bytes += rec.size as u64;
            }
            (TraceOp::Forward, Layer::Rtr, true) => {
                self.totals.data_packets_transmitted += 1;
                self.totals.data_bytes_transmitted += rec.size as u64;
            }
            (TraceOp::Drop, _, true) => {
                let reason = rec.reason.ok_or("drop without reason")?;
                *self.totals.drops.entry(reason).or_insert(0) += 1;
                self.per_pair.entry((rec.src, rec.dst)).or_default()[2] += 1;
            }
            _ => {}
        }
        Ok(())
    }

    pub fn totals(&self) -> &Totals {
        &self.totals
    }

    /// Per (source, sink): sent, delivered, dropped (including `END`).
    pub fn per_pair(&self) -> &HashMap<(NodeId, Address), [u64; 3]> {
        &self.per_pair
    }

    pub fn report(&self, horizon: SimTime) -> MetricsReport {
        MetricsReport::from_totals(&self.totals, horizon)
    }
}

/// Parses a whole trace.
pub fn summarize<R: BufRead>(reader: R) -> Result<TraceSummary, TraceError> {
    let mut summary = TraceSummary::default();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let rec = parse_line(&line).map_err(|message| TraceError::Malformed { line: i + 1, message })?;
        summary
            .observe(&rec)
            .map_err(|message| TraceError::Malformed { line: i + 1, message })?;
    }
    Ok(summary)
}
