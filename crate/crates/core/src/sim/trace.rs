//! Tab-separated event trace.
//!
//! One record per line: `time_s event node packet_id kind subtype bytes peer`.
//! Times carry nine decimals so they round-trip to the nanosecond; `peer` is
//! `-` for broadcasts and events without a counterpart.

use std::fmt;
use std::io::{self, BufRead, Write};
use std::str::FromStr;

use super::engine::{DropReason, PacketKind};
use super::{NodeId, SimTime};

pub const HEADER: &str = "time_s\tevent\tnode\tpacket_id\tkind\tsubtype\tbytes\tpeer";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TraceEvent {
    /// A data packet was created by its source.
    Gen,
    /// A transmission started.
    Tx,
    /// A frame arrived at a neighbor.
    Rx,
    /// A data packet reached its destination.
    Recv,
    /// A unicast found its next hop out of range.
    LinkFail,
    Drop(DropReason),
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceEvent::Gen => f.write_str("gen"),
            TraceEvent::Tx => f.write_str("tx"),
            TraceEvent::Rx => f.write_str("rx"),
            TraceEvent::Recv => f.write_str("recv"),
            TraceEvent::LinkFail => f.write_str("linkfail"),
            TraceEvent::Drop(r) => write!(f, "drop-{r}"),
        }
    }
}

impl FromStr for TraceEvent {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "gen" => TraceEvent::Gen,
            "tx" => TraceEvent::Tx,
            "rx" => TraceEvent::Rx,
            "recv" => TraceEvent::Recv,
            "linkfail" => TraceEvent::LinkFail,
            other => match other.strip_prefix("drop-") {
                Some(r) => TraceEvent::Drop(r.parse()?),
                None => return Err(format!("unknown trace event `{other}`")),
            },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceRecord {
    pub time: SimTime,
    pub event: TraceEvent,
    pub node: NodeId,
    pub packet_id: u64,
    pub kind: PacketKind,
    pub subtype: String,
    pub bytes: u32,
    pub peer: Option<NodeId>,
}

impl fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t",
            self.time, self.event, self.node, self.packet_id, self.kind, self.subtype, self.bytes
        )?;
        match self.peer {
            Some(p) => write!(f, "{p}"),
            None => f.write_str("-"),
        }
    }
}

fn parse_time(s: &str) -> Option<SimTime> {
    let (whole, frac) = s.split_once('.')?;
    if frac.len() != 9 {
        return None;
    }
    let whole: u64 = whole.parse().ok()?;
    let frac: u64 = frac.parse().ok()?;
    Some(SimTime(whole * 1_000_000_000 + frac))
}

impl FromStr for TraceRecord {
    type Err = String;
    fn from_str(line: &str) -> Result<Self, String> {
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 8 {
            return Err(format!("expected 8 fields, found {}", f.len()));
        }
        let bad = |what: &str| format!("bad {what} in `{line}`");
        Ok(TraceRecord {
            time: parse_time(f[0]).ok_or_else(|| bad("time"))?,
            event: f[1].parse()?,
            node: f[2].parse().map_err(|_| bad("node"))?,
            packet_id: f[3].parse().map_err(|_| bad("packet id"))?,
            kind: f[4].parse()?,
            subtype: f[5].to_string(),
            bytes: f[6].parse().map_err(|_| bad("bytes"))?,
            peer: match f[7] {
                "-" => None,
                p => Some(p.parse().map_err(|_| bad("peer"))?),
            },
        })
    }
}

pub fn write_trace<W: Write>(mut out: W, records: &[TraceRecord]) -> io::Result<()> {
    writeln!(out, "{HEADER}")?;
    for r in records {
        writeln!(out, "{r}")?;
    }
    out.flush()
}

pub fn read_trace<R: BufRead>(input: R) -> io::Result<Vec<TraceRecord>> {
    let mut records = Vec::new();
    for (no, line) in input.lines().enumerate() {
        let line = line?;
        if no == 0 && line == HEADER {
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let rec = line
            .parse()
            .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, format!("line {}: {e}", no + 1)))?;
        records.push(rec);
    }
    Ok(records)
}
