//! The five per-channel checks. A channel is identified in the trace by
//! its subscriber node and topic; the publisher comes from the architecture.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use qparch_analysis::{Channel, ChannelReport};
use qparch_sim::{EventKind, Trace, TraceEvent};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Check {
    NoOvertaking,
    ConsecutiveLoss,
    Age,
    ProcessingLatency,
    Detection,
}

impl Check {
    pub const ALL: [Check; 5] = [Check::NoOvertaking, Check::ConsecutiveLoss, Check::Age, Check::ProcessingLatency, Check::Detection];

    pub fn rule(self) -> &'static str {
        match self {
            Check::NoOvertaking => "NO_OVERTAKING",
            Check::ConsecutiveLoss => "CONSECUTIVE_LOSS",
            Check::Age => "AGE",
            Check::ProcessingLatency => "PROCESSING_LATENCY",
            Check::Detection => "DETECTION",
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.rule())
    }
}

impl FromStr for Check {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let norm = s.trim().to_ascii_uppercase().replace('-', "_");
        let alias = match norm.as_str() {
            "OVERTAKING" => "NO_OVERTAKING",
            "LOSS" => "CONSECUTIVE_LOSS",
            "LATENCY" | "PROC" => "PROCESSING_LATENCY",
            other => other,
        };
        Check::ALL.into_iter().find(|c| c.rule() == alias).ok_or_else(|| format!("unknown check '{s}'"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub time: u64,
    pub seq: Option<u64>,
    pub measured: u64,
    pub bound: u64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckResult {
    pub check: Check,
    pub channel: Channel,
    pub violations: Vec<Violation>,
    /// Largest measured quantity (age, run length, latency) over the trace.
    pub max_observed: Option<u64>,
}

impl CheckResult {
    fn new(check: Check, ch: &Channel) -> Self {
        CheckResult { check, channel: ch.clone(), violations: Vec::new(), max_observed: None }
    }

    fn observe(&mut self, v: u64) {
        self.max_observed = Some(self.max_observed.map_or(v, |m| m.max(v)));
    }

    fn label(&self) -> String {
        format!("{}->{}:{}", self.channel.publisher(), self.channel.subscriber(), self.channel.topic())
    }

    pub fn records(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .violations
            .iter()
            .map(|v| {
                let loc = format!("{}:{}", v.time, v.seq.map_or("-".to_string(), |s| s.to_string()));
                let detail = if v.detail.is_empty() { String::new() } else { format!(" {}", v.detail) };
                format!("ERROR\t{}\t{loc}\t{} measured={} bound={}{detail}", self.check, self.label(), v.measured, v.bound)
            })
            .collect();
        out.push(format!(
            "INFO\t{}\t-\t{} violations={} max_observed={}",
            self.check,
            self.label(),
            self.violations.len(),
            self.max_observed.map_or("-".to_string(), |m| m.to_string())
        ));
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MonitorReport {
    pub results: Vec<CheckResult>,
}

impl MonitorReport {
    pub fn violation_count(&self) -> usize {
        self.results.iter().map(|r| r.violations.len()).sum()
    }

    pub fn is_clean(&self) -> bool {
        self.violation_count() == 0
    }

    pub fn to_records(&self) -> String {
        self.results.iter().flat_map(|r| r.records()).map(|l| l + "\n").collect()
    }

    pub fn result(&self, check: Check, subscriber: &str, topic: &str) -> Option<&CheckResult> {
        self.results.iter().find(|r| r.check == check && r.channel.subscriber() == subscriber && r.channel.topic() == topic)
    }
}

fn on_channel<'a>(trace: &'a Trace, ch: &'a Channel, kind: EventKind) -> impl Iterator<Item = &'a TraceEvent> + 'a {
    trace.events.iter().filter(move |e| e.kind == kind && &*e.node == ch.subscriber() && e.topic() == Some(ch.topic()))
}

fn publishes<'a>(trace: &'a Trace, ch: &'a Channel) -> impl Iterator<Item = &'a TraceEvent> + 'a {
    trace
        .events
        .iter()
        .filter(move |e| e.kind == EventKind::Publish && &*e.node == ch.publisher() && e.topic() == Some(ch.topic()))
}

/// READ seqs on the channel must increase.
pub fn check_no_overtaking(trace: &Trace, ch: &Channel) -> CheckResult {
    let mut res = CheckResult::new(Check::NoOvertaking, ch);
    let mut highest: Option<u64> = None;
    for e in on_channel(trace, ch, EventKind::Read) {
        let seq = e.seq.unwrap_or(0);
        if let Some(h) = highest {
            if seq < h {
                res.violations.push(Violation {
                    time: e.time,
                    seq: Some(seq),
                    measured: seq,
                    bound: h,
                    detail: format!("read after seq {h}"),
                });
            }
        }
        highest = Some(highest.map_or(seq, |h| h.max(seq)));
    }
    res
}

/// A seq is lost once it can no longer be read: it was never READ and was
/// either evicted unread or overtaken by a later READ. Runs longer than
/// `bound` are violations.
pub fn check_consecutive_loss(trace: &Trace, ch: &Channel, bound: u64) -> CheckResult {
    let mut res = CheckResult::new(Check::ConsecutiveLoss, ch);
    let mut universe: BTreeSet<u64> = publishes(trace, ch).filter_map(|e| e.seq).collect();
    let mut read: BTreeMap<u64, u64> = BTreeMap::new();
    let mut dropped: BTreeMap<u64, u64> = BTreeMap::new();
    for e in trace.events.iter().filter(|e| &*e.node == ch.subscriber() && e.topic() == Some(ch.topic())) {
        let Some(seq) = e.seq else { continue };
        match e.kind {
            EventKind::Read => {
                read.entry(seq).or_insert(e.time);
            }
            EventKind::Drop => {
                dropped.entry(seq).or_insert(e.time);
            }
            EventKind::Arrive => {}
            _ => continue,
        }
        universe.insert(seq);
    }
    let max_read = read.keys().next_back().copied();
    let lost = |s: u64| !read.contains_key(&s) && (dropped.contains_key(&s) || max_read.is_some_and(|m| m > s));
    // Time at which a lost seq became unreadable.
    let lost_at = |s: u64| -> u64 {
        let overtaken = read.range(s + 1..).map(|(_, &t)| t).min();
        match (dropped.get(&s), overtaken) {
            (Some(&d), Some(o)) => d.min(o),
            (Some(&d), None) => d,
            (None, Some(o)) => o,
            (None, None) => 0,
        }
    };
    let mut run: Vec<u64> = Vec::new();
    let flush = |run: &mut Vec<u64>, res: &mut CheckResult| {
        if run.is_empty() {
            return;
        }
        let len = run.len() as u64;
        res.observe(len);
        if len > bound {
            let last = *run.last().unwrap();
            res.violations.push(Violation {
                time: run.iter().map(|&s| lost_at(s)).max().unwrap_or(0),
                seq: Some(last),
                measured: len,
                bound,
                detail: format!("run [{},{}]", run[0], last),
            });
        }
        run.clear();
    };
    for &s in &universe {
        if lost(s) {
            run.push(s);
        } else {
            flush(&mut run, &mut res);
        }
    }
    flush(&mut run, &mut res);
    if res.max_observed.is_none() {
        res.max_observed = Some(0);
    }
    res
}

/// At every firing that reads, the newest message read must be younger
/// than `max_age` (strict).
pub fn check_age(trace: &Trace, ch: &Channel, max_age: u64) -> CheckResult {
    let mut res = CheckResult::new(Check::Age, ch);
    let published: HashMap<u64, u64> = publishes(trace, ch).filter_map(|e| Some((e.seq?, e.time))).collect();
    let mut firing: Option<(u64, u64)> = None; // (time, newest seq)
    let finish = |f: Option<(u64, u64)>, res: &mut CheckResult| {
        let Some((t, seq)) = f else { return };
        let Some(&p) = published.get(&seq) else { return };
        let age = t.saturating_sub(p);
        res.observe(age);
        if age >= max_age {
            res.violations.push(Violation { time: t, seq: Some(seq), measured: age, bound: max_age, detail: String::new() });
        }
    };
    for e in on_channel(trace, ch, EventKind::Read) {
        let seq = e.seq.unwrap_or(0);
        match firing {
            Some((t, s)) if t == e.time => firing = Some((t, s.max(seq))),
            _ => {
                finish(firing, &mut res);
                firing = Some((e.time, seq));
            }
        }
    }
    finish(firing, &mut res);
    res
}

/// Every publication must be read, evicted, or overtaken by a later read
/// within `bound` of its publish time. Deadlines past the end of the trace
/// are not judged.
pub fn check_processing_latency(trace: &Trace, ch: &Channel, bound: u64) -> CheckResult {
    let mut res = CheckResult::new(Check::ProcessingLatency, ch);
    let end = trace.end_time();
    let mut handled: BTreeMap<u64, u64> = BTreeMap::new();
    let mut reads: Vec<(u64, u64)> = Vec::new();
    for e in trace.events.iter().filter(|e| &*e.node == ch.subscriber() && e.topic() == Some(ch.topic())) {
        if let (EventKind::Read | EventKind::Drop, Some(seq)) = (e.kind, e.seq) {
            handled.entry(seq).or_insert(e.time);
            if e.kind == EventKind::Read {
                reads.push((seq, e.time));
            }
        }
    }
    // Earliest read of any seq ≥ s, via a suffix minimum over seqs.
    reads.sort();
    let mut suffix_min: Vec<(u64, u64)> = Vec::with_capacity(reads.len());
    let mut best = u64::MAX;
    for &(seq, t) in reads.iter().rev() {
        best = best.min(t);
        suffix_min.push((seq, best));
    }
    suffix_min.reverse();
    let superseded = |s: u64| -> Option<u64> {
        let i = suffix_min.partition_point(|&(seq, _)| seq <= s);
        suffix_min.get(i).map(|&(_, t)| t)
    };
    for e in publishes(trace, ch) {
        let Some(seq) = e.seq else { continue };
        let deadline = e.time + bound;
        let done = [handled.get(&seq).copied(), superseded(seq)].into_iter().flatten().min();
        match done {
            Some(t) => {
                res.observe(t - e.time);
                if t > deadline {
                    res.violations.push(Violation {
                        time: t,
                        seq: Some(seq),
                        measured: t - e.time,
                        bound,
                        detail: String::new(),
                    });
                }
            }
            None if deadline < end => res.violations.push(Violation {
                time: deadline,
                seq: Some(seq),
                measured: end - e.time,
                bound,
                detail: "never read".into(),
            }),
            None => {}
        }
    }
    res
}

/// A failure declaration at firing f_i is false if the publisher published
/// at p with f_{i-k} < p ≤ f_i − L: that message must have been read by one
/// of the last k firings.
pub fn check_detection(trace: &Trace, ch: &Channel, k: u64) -> CheckResult {
    let mut res = CheckResult::new(Check::Detection, ch);
    let firings = trace.firings(ch.subscriber());
    let pubs: Vec<u64> = publishes(trace, ch).map(|e| e.time).collect();
    for e in on_channel(trace, ch, EventKind::FailureDeclared) {
        let Some(i) = firings.iter().rposition(|&f| f <= e.time) else { continue };
        let window_start = (i as u64).checked_sub(k).map(|j| firings[j as usize]);
        let latest_ok = e.time.checked_sub(ch.latency());
        let live = pubs.iter().rev().find(|&&p| latest_ok.is_some_and(|lim| p <= lim) && window_start.is_none_or(|w| p > w));
        res.observe(e.time - window_start.unwrap_or(0));
        if let Some(&p) = live {
            res.violations.push(Violation {
                time: e.time,
                seq: None,
                measured: e.time - p,
                bound: e.time - window_start.unwrap_or(0),
                detail: format!("publisher active at {p}"),
            });
        }
    }
    res
}

/// Run the selected checks on every channel, ordered by channel then check.
pub fn monitor(trace: &Trace, channels: &[ChannelReport], checks: &[Check]) -> MonitorReport {
    let mut results = Vec::new();
    for r in channels {
        let ch = &r.channel;
        let b = &r.bounds;
        for &c in Check::ALL.iter().filter(|c| checks.contains(c)) {
            results.push(match c {
                Check::NoOvertaking => check_no_overtaking(trace, ch),
                Check::ConsecutiveLoss => check_consecutive_loss(trace, ch, b.max_consecutive_loss),
                Check::Age => check_age(trace, ch, b.max_age),
                Check::ProcessingLatency => check_processing_latency(trace, ch, b.max_processing_latency),
                Check::Detection => check_detection(trace, ch, b.failure_detection_steps),
            });
        }
    }
    MonitorReport { results }
}
