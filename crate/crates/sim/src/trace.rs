//! Line-oriented trace format shared by the simulator and the monitors.
//!
//! Columns are tab-separated (shown here with spaces):
//! ```text
//! #seed       1
//! #grid       1
//! #rng        chacha8
//! #arch-hash  <sha256 hex>
//! #horizon    60000000
//! 50000  PUBLISH  thermostat  heater_on_off  12  0
//! ```
//! Event columns: time, kind, node, topic, seq, flags; `-` marks an absent
//! field. Flags are a bitmask (1 stale, 2 timeout).

use std::fmt::{self, Write as _};
use std::str::FromStr;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EventKind {
    StepStart,
    StepEnd,
    Publish,
    Arrive,
    Drop,
    Read,
    Flags,
    FailureDeclared,
    Fault,
    Observe,
}

impl EventKind {
    pub const ALL: [EventKind; 10] = [
        EventKind::StepStart,
        EventKind::StepEnd,
        EventKind::Publish,
        EventKind::Arrive,
        EventKind::Drop,
        EventKind::Read,
        EventKind::Flags,
        EventKind::FailureDeclared,
        EventKind::Fault,
        EventKind::Observe,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EventKind::StepStart => "STEP_START",
            EventKind::StepEnd => "STEP_END",
            EventKind::Publish => "PUBLISH",
            EventKind::Arrive => "ARRIVE",
            EventKind::Drop => "DROP",
            EventKind::Read => "READ",
            EventKind::Flags => "FLAGS",
            EventKind::FailureDeclared => "FAILURE_DECLARED",
            EventKind::Fault => "FAULT",
            EventKind::Observe => "OBSERVE",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EventKind {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        EventKind::ALL.into_iter().find(|k| k.name() == s).ok_or(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct Flags {
    pub stale: bool,
    pub timeout: bool,
}

impl Flags {
    pub const CLEAR: Flags = Flags { stale: false, timeout: false };

    pub fn bits(self) -> u8 {
        u8::from(self.stale) | (u8::from(self.timeout) << 1)
    }

    pub fn from_bits(bits: u8) -> Option<Flags> {
        (bits <= 3).then_some(Flags { stale: bits & 1 != 0, timeout: bits & 2 != 0 })
    }

    pub fn or(self, other: Flags) -> Flags {
        Flags { stale: self.stale || other.stale, timeout: self.timeout || other.timeout }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEvent {
    pub time: u64,
    pub kind: EventKind,
    pub node: Arc<str>,
    /// Topic name; for OBSERVE `name=value`, for FAULT a short reason.
    pub topic: Option<Arc<str>>,
    pub seq: Option<u64>,
    pub flags: Option<Flags>,
}

impl TraceEvent {
    pub fn topic(&self) -> Option<&str> {
        self.topic.as_deref()
    }

    /// (variable, value text) of an OBSERVE event.
    pub fn observation(&self) -> Option<(&str, &str)> {
        if self.kind != EventKind::Observe {
            return None;
        }
        self.topic.as_deref()?.split_once('=')
    }

    pub fn write_line(&self, out: &mut String) {
        let _ = write!(out, "{}\t{}\t{}\t", self.time, self.kind, self.node);
        out.push_str(self.topic.as_deref().unwrap_or("-"));
        out.push('\t');
        match self.seq {
            Some(s) => {
                let _ = write!(out, "{s}");
            }
            None => out.push('-'),
        }
        out.push('\t');
        match self.flags {
            Some(f) => {
                let _ = write!(out, "{}", f.bits());
            }
            None => out.push('-'),
        }
        out.push('\n');
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceHeader {
    pub seed: u64,
    pub grid: u64,
    pub rng: String,
    pub arch_hash: String,
    pub horizon: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub header: TraceHeader,
    pub events: Vec<TraceEvent>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct TraceError {
    pub line: usize,
    pub message: String,
}

fn err(line: usize, message: impl Into<String>) -> TraceError {
    TraceError { line, message: message.into() }
}

/// Field text must not break the line layout.
pub fn sanitize(text: &str) -> String {
    let cleaned: String = text.chars().map(|c| if c == '\t' || c == '\n' || c == '\r' { ' ' } else { c }).collect();
    if cleaned.is_empty() || cleaned == "-" {
        "_".into()
    } else {
        cleaned
    }
}

impl Trace {
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(64 + self.events.len() * 40);
        let h = &self.header;
        let _ = writeln!(out, "#seed\t{}", h.seed);
        let _ = writeln!(out, "#grid\t{}", h.grid);
        let _ = writeln!(out, "#rng\t{}", h.rng);
        let _ = writeln!(out, "#arch-hash\t{}", h.arch_hash);
        if let Some(hz) = h.horizon {
            let _ = writeln!(out, "#horizon\t{hz}");
        }
        for e in &self.events {
            e.write_line(&mut out);
        }
        out
    }

    pub fn parse(text: &str) -> Result<Trace, TraceError> {
        let mut seed = None;
        let mut grid = None;
        let mut rng = None;
        let mut arch_hash = None;
        let mut horizon = None;
        let mut events: Vec<TraceEvent> = Vec::new();
        // Node and topic names repeat constantly; share their allocations.
        let mut names: std::collections::HashMap<String, Arc<str>> = std::collections::HashMap::new();
        let mut intern = |s: &str| -> Arc<str> {
            if let Some(a) = names.get(s) {
                return a.clone();
            }
            let a: Arc<str> = Arc::from(s);
            names.insert(s.to_string(), a.clone());
            a
        };
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim_end_matches('\r');
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if !events.is_empty() {
                    return Err(err(line_no, "header line after events"));
                }
                let (key, value) = rest.split_once('\t').ok_or_else(|| err(line_no, "header needs key<TAB>value"))?;
                let num = |v: &str| v.parse::<u64>().map_err(|_| err(line_no, format!("bad number '{v}' for #{key}")));
                match key {
                    "seed" => seed = Some(num(value)?),
                    "grid" => {
                        let g = num(value)?;
                        if g == 0 {
                            return Err(err(line_no, "grid must be positive"));
                        }
                        grid = Some(g)
                    }
                    "rng" => rng = Some(value.to_string()),
                    "arch-hash" => arch_hash = Some(value.to_string()),
                    "horizon" => horizon = Some(num(value)?),
                    _ => {}
                }
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 6 {
                return Err(err(line_no, format!("expected 6 tab-separated columns, found {}", cols.len())));
            }
            let time: u64 = cols[0].parse().map_err(|_| err(line_no, format!("bad time '{}'", cols[0])))?;
            let kind: EventKind = cols[1].parse().map_err(|_| err(line_no, format!("unknown event kind '{}'", cols[1])))?;
            if cols[2].is_empty() || cols[2] == "-" {
                return Err(err(line_no, "missing node"));
            }
            let topic = match cols[3] {
                "-" => None,
                "" => return Err(err(line_no, "empty topic column")),
                t => Some(intern(t)),
            };
            let seq = match cols[4] {
                "-" => None,
                s => Some(s.parse::<u64>().map_err(|_| err(line_no, format!("bad seq '{s}'")))?),
            };
            let flags = match cols[5] {
                "-" => None,
                s => Some(
                    s.parse::<u8>().ok().and_then(Flags::from_bits).ok_or_else(|| err(line_no, format!("bad flags '{s}'")))?,
                ),
            };
            if let Some(prev) = events.last() {
                if time < prev.time {
                    return Err(err(line_no, format!("time {time} goes backwards (previous {})", prev.time)));
                }
            }
            let needs_topic = !matches!(kind, EventKind::StepStart | EventKind::StepEnd);
            let needs_seq = matches!(kind, EventKind::Publish | EventKind::Arrive | EventKind::Drop | EventKind::Read);
            if needs_topic && topic.is_none() {
                return Err(err(line_no, format!("{kind} needs a topic")));
            }
            if needs_seq && seq.is_none() {
                return Err(err(line_no, format!("{kind} needs a seq")));
            }
            if kind == EventKind::Flags && flags.is_none() {
                return Err(err(line_no, "FLAGS needs a flag value"));
            }
            if kind == EventKind::Observe && topic.as_deref().and_then(|t| t.split_once('=')).is_none() {
                return Err(err(line_no, "OBSERVE needs name=value"));
            }
            events.push(TraceEvent { time, kind, node: intern(cols[2]), topic, seq, flags });
        }
        let missing = |what: &str| err(0, format!("missing #{what} header"));
        Ok(Trace {
            header: TraceHeader {
                seed: seed.ok_or_else(|| missing("seed"))?,
                grid: grid.ok_or_else(|| missing("grid"))?,
                rng: rng.ok_or_else(|| missing("rng"))?,
                arch_hash: arch_hash.ok_or_else(|| missing("arch-hash"))?,
                horizon,
            },
            events,
        })
    }

    pub fn fault(&self) -> Option<&TraceEvent> {
        self.events.iter().find(|e| e.kind == EventKind::Fault)
    }

    /// STEP_START times of one node.
    pub fn firings(&self, node: &str) -> Vec<u64> {
        self.events.iter().filter(|e| e.kind == EventKind::StepStart && &*e.node == node).map(|e| e.time).collect()
    }

    pub fn count(&self, kind: EventKind) -> usize {
        self.events.iter().filter(|e| e.kind == kind).count()
    }

    /// End of the observed window: the horizon if recorded, else the last event time.
    pub fn end_time(&self) -> u64 {
        self.header.horizon.unwrap_or_else(|| self.events.last().map_or(0, |e| e.time + 1))
    }
}
