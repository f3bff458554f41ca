//! The `qparch` command line: check an architecture, simulate a scenario,
//! monitor a trace, and evaluate or unfold temporal queries.
//!
//! Exit codes: 0 all good, 1 violations, counterexamples or a step fault,
//! 2 usage, parse or format errors.

pub mod manifest;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use qparch_adl::{arch_hash, parse_architecture, parse_duration, validate, ArchitectureSpec, Severity};
use qparch_analysis::{analyze, findings, report_records};
use qparch_monitor::query::{expand_intervals, eval, parse_query, steps_from_trace, unfold, Query, QueryError};
use qparch_monitor::{monitor, Check};
use qparch_scenarios::{build, ScriptFile};
use qparch_sim::{run, EventKind, Jitter, Latency, SimConfig, TimeoutThreshold, Trace};

use manifest::Provenance;

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAIL: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

/// Environment variable that sets the time grid when `--grid` is absent.
pub const GRID_ENV: &str = "QPARCH_GRID";

#[derive(Debug, Parser)]
#[command(name = "qparch", version, about = "Architecture checks, simulation and trace verification for quasi-periodic systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Format {
    #[default]
    Text,
    Records,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum JitterArg {
    Uniform,
    Min,
    Max,
    Script,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LatencyArg {
    Uniform,
    Fixed,
    Script,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ThresholdArg {
    PubMax,
    PubMin,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse, validate and analyze an architecture; report per-channel bounds.
    Check {
        arch: PathBuf,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
        /// Also write the report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate a named scenario and write its trace.
    Simulate {
        arch: PathBuf,
        #[arg(long)]
        scenario: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// e.g. 60sec, 60s, 500ms, or plain microseconds
        #[arg(long)]
        horizon: String,
        #[arg(long)]
        trace: PathBuf,
        #[arg(long, value_enum, default_value = "uniform")]
        jitter: JitterArg,
        #[arg(long, value_enum, default_value = "uniform")]
        latency: LatencyArg,
        /// CSV with columns time_us,variable,value
        #[arg(long)]
        script: Option<PathBuf>,
        /// Time grid; defaults to $QPARCH_GRID, then 1us.
        #[arg(long)]
        grid: Option<String>,
        /// Emit FAILURE_DECLARED after k stale firings.
        #[arg(long)]
        detect_failures: bool,
        #[arg(long, value_enum, default_value = "pub-max")]
        timeout_threshold: ThresholdArg,
    },
    /// Check a trace against the bounds derived from its architecture.
    Monitor {
        trace: PathBuf,
        #[arg(long)]
        arch: PathBuf,
        /// Comma separated subset of no_overtaking, consecutive_loss, age,
        /// processing_latency, detection.
        #[arg(long, value_delimiter = ',')]
        checks: Option<Vec<String>>,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate every query in a file on the firings of its system node.
    Query {
        trace: PathBuf,
        #[arg(long)]
        query: PathBuf,
        /// Step length for durations inside interval bounds.
        #[arg(long)]
        period: Option<String>,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the unfolded and shifted form of every query in a file.
    Unfold {
        #[arg(long)]
        query: PathBuf,
        #[arg(long)]
        period: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// A failure that ends the command with a non-zero exit code.
#[derive(Debug, thiserror::Error)]
#[error("{message}")]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_USAGE, message: message.into() }
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> Failure + '_ {
    move |e| usage(format!("{}: {e}", path.display()))
}

/// What a command produced: its exit code and report text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: u8,
    pub report: String,
}

/// Parse arguments, run, print, and return the exit code.
pub fn run_from_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let command: Vec<String> = args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    match execute(cli.command, command, std::env::var(GRID_ENV).ok()) {
        Ok(outcome) => {
            print!("{}", outcome.report);
            outcome.code
        }
        Err(f) => {
            eprintln!("qparch: {}", f.message);
            f.code
        }
    }
}

/// Run one command. `grid_env` stands in for `$QPARCH_GRID`.
pub fn execute(command: Command, argv: Vec<String>, grid_env: Option<String>) -> Result<Outcome, Failure> {
    let mut prov = Provenance::new(argv);
    match command {
        Command::Check { arch, format, out } => cmd_check(&mut prov, &arch, format, out.as_deref()),
        Command::Simulate { arch, scenario, seed, horizon, trace, jitter, latency, script, grid, detect_failures, timeout_threshold } => {
            let grid = grid.or(grid_env);
            let opts = SimulateOptions {
                scenario,
                seed,
                horizon: duration_arg(&horizon)?,
                jitter: match jitter {
                    JitterArg::Uniform => Jitter::Uniform,
                    JitterArg::Min => Jitter::FixedMin,
                    JitterArg::Max => Jitter::FixedMax,
                    JitterArg::Script => Jitter::Script,
                },
                latency: match latency {
                    LatencyArg::Uniform => Latency::Uniform,
                    LatencyArg::Fixed => Latency::Fixed,
                    LatencyArg::Script => Latency::Script,
                },
                grid: grid.as_deref().map(duration_arg).transpose()?.unwrap_or(1),
                detect_failures,
                timeout_threshold: match timeout_threshold {
                    ThresholdArg::PubMax => TimeoutThreshold::PubMax,
                    ThresholdArg::PubMin => TimeoutThreshold::PubMin,
                },
            };
            cmd_simulate(&mut prov, &arch, &opts, script.as_deref(), &trace)
        }
        Command::Monitor { trace, arch, checks, format, out } => cmd_monitor(&mut prov, &trace, &arch, checks.as_deref(), format, out.as_deref()),
        Command::Query { trace, query, period, format, out } => {
            let period = period.as_deref().map(duration_arg).transpose()?;
            cmd_query(&mut prov, &trace, &query, period, format, out.as_deref())
        }
        Command::Unfold { query, period, out } => {
            let period = period.as_deref().map(duration_arg).transpose()?;
            cmd_unfold(&mut prov, &query, period, out.as_deref())
        }
    }
}

/// ADL literals (`500msec`), short forms (`500ms`, `2s`, `10us`), or plain µs.
pub fn duration_arg(text: &str) -> Result<u64, Failure> {
    if let Ok(us) = text.parse::<u64>() {
        return Ok(us);
    }
    if let Ok(us) = parse_duration(text) {
        return Ok(us);
    }
    let long = [("us", "usec"), ("ms", "msec"), ("s", "sec")]
        .iter()
        .find_map(|(short, long)| text.strip_suffix(short).filter(|n| n.chars().all(|c| c.is_ascii_digit() || c == '.')).map(|n| format!("{n}{long}")));
    long.and_then(|l| parse_duration(&l).ok()).ok_or_else(|| usage(format!("bad duration '{text}'")))
}

fn load_spec(prov: &mut Provenance, path: &Path) -> Result<ArchitectureSpec, Failure> {
    let src = prov.read_to_string(path).map_err(io(path))?;
    parse_architecture(&src).map_err(|d| usage(format!("{}: {d}", path.display())))
}

fn emit(prov: &Provenance, out: Option<&Path>, code: u8, report: String) -> Result<Outcome, Failure> {
    if let Some(path) = out {
        prov.write(path, report.as_bytes()).map_err(io(path))?;
    }
    Ok(Outcome { code, report })
}

pub fn cmd_check(prov: &mut Provenance, arch: &Path, format: Format, out: Option<&Path>) -> Result<Outcome, Failure> {
    let spec = load_spec(prov, arch)?;
    let mut found = validate(&spec).findings;
    let reports = match analyze(&spec) {
        Ok(r) => r,
        Err(e) => {
            found.push(qparch_adl::Finding::error("ANALYSIS", Default::default(), e.to_string()));
            Vec::new()
        }
    };
    found.extend(findings(&reports));
    let errors = found.iter().filter(|f| f.severity == Severity::Error).count();
    let code = if errors > 0 { EXIT_FAIL } else { EXIT_OK };
    let report = match format {
        Format::Records => found.iter().map(|f| f.record() + "\n").collect::<String>() + &report_records(&reports),
        Format::Text => {
            let mut s = String::new();
            let _ = writeln!(s, "architecture {}: {} nodes, {} topics, {} channels", arch.display(), spec.nodes.len(), spec.topics.len(), reports.len());
            let _ = writeln!(s, "hash {}", arch_hash(&spec));
            for f in &found {
                let _ = writeln!(s, "{f}");
            }
            for r in &reports {
                let _ = writeln!(s, "{r}");
            }
            let _ = writeln!(s, "{}", if errors > 0 { format!("{errors} error(s)") } else { "ok".to_string() });
            s
        }
    };
    emit(prov, out, code, report)
}

#[derive(Debug, Clone)]
pub struct SimulateOptions {
    pub scenario: String,
    pub seed: u64,
    pub horizon: u64,
    pub jitter: Jitter,
    pub latency: Latency,
    pub grid: u64,
    pub detect_failures: bool,
    pub timeout_threshold: TimeoutThreshold,
}

pub fn cmd_simulate(prov: &mut Provenance, arch: &Path, opts: &SimulateOptions, script: Option<&Path>, trace_out: &Path) -> Result<Outcome, Failure> {
    let spec = load_spec(prov, arch)?;
    let script = match script {
        Some(path) => ScriptFile::parse(&prov.read_to_string(path).map_err(io(path))?).map_err(|e| usage(format!("{}: {e}", path.display())))?,
        None => ScriptFile::default(),
    };
    let mut scenario = build(&opts.scenario, &spec, &script.inputs).map_err(|e| usage(e.to_string()))?;
    let cfg = SimConfig {
        grid: opts.grid,
        jitter: opts.jitter,
        latency: opts.latency,
        script: script.timing,
        detect_failures: opts.detect_failures,
        timeout_threshold: opts.timeout_threshold,
        ..SimConfig::new(opts.seed, opts.horizon)
    };
    let trace = run(&spec, &mut scenario, &cfg).map_err(|e| usage(e.to_string()))?;
    prov.seed = Some(opts.seed);
    prov.write(trace_out, trace.to_text().as_bytes()).map_err(io(trace_out))?;
    let mut report = format!(
        "{} events, {} publications, {} drops over {}us -> {}\n",
        trace.events.len(),
        trace.count(EventKind::Publish),
        trace.count(EventKind::Drop),
        opts.horizon,
        trace_out.display()
    );
    let code = match trace.fault() {
        Some(f) => {
            let _ = writeln!(report, "step fault at {}us in {}: {}", f.time, f.node, f.topic().unwrap_or(""));
            EXIT_FAIL
        }
        None => EXIT_OK,
    };
    Ok(Outcome { code, report })
}

fn load_trace(prov: &mut Provenance, path: &Path) -> Result<Trace, Failure> {
    let text = prov.read_to_string(path).map_err(io(path))?;
    Trace::parse(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

pub fn cmd_monitor(
    prov: &mut Provenance,
    trace: &Path,
    arch: &Path,
    checks: Option<&[String]>,
    format: Format,
    out: Option<&Path>,
) -> Result<Outcome, Failure> {
    let checks: Vec<Check> = match checks {
        Some(names) => names.iter().map(|n| n.parse::<Check>().map_err(usage)).collect::<Result<_, _>>()?,
        None => Check::ALL.to_vec(),
    };
    let spec = load_spec(prov, arch)?;
    let tr = load_trace(prov, trace)?;
    let expected = arch_hash(&spec);
    if tr.header.arch_hash != expected {
        return Err(usage(format!("{} was produced from architecture {}, but {} hashes to {expected}", trace.display(), tr.header.arch_hash, arch.display())));
    }
    let reports = analyze(&spec).map_err(|e| usage(e.to_string()))?;
    let result = monitor(&tr, &reports, &checks);
    let code = if result.is_clean() { EXIT_OK } else { EXIT_FAIL };
    let report = match format {
        Format::Records => result.to_records(),
        Format::Text => {
            let mut s = String::new();
            for r in &result.results {
                let c = &r.channel;
                let _ = writeln!(
                    s,
                    "{:<18} {} -> {} ({}): {} violation(s), max observed {}",
                    r.check.rule(),
                    c.publisher(),
                    c.subscriber(),
                    c.topic(),
                    r.violations.len(),
                    r.max_observed.map_or("-".to_string(), |m| m.to_string())
                );
                for v in &r.violations {
                    let _ = writeln!(s, "  at {}us seq {}: measured {} > bound {} {}", v.time, v.seq.map_or("-".into(), |q| q.to_string()), v.measured, v.bound, v.detail);
                }
            }
            let _ = writeln!(s, "{}", if result.is_clean() { "clean".to_string() } else { format!("{} violation(s)", result.violation_count()) });
            s
        }
    };
    emit(prov, out, code, report)
}

/// Top-level parenthesized forms of a query file with the line each starts
/// on; `;` starts a comment.
fn split_queries(src: &str) -> Result<Vec<(usize, String)>, Failure> {
    let mut out = Vec::new();
    let mut depth = 0usize;
    let mut current = String::new();
    let mut start_line = 1;
    for (i, line) in src.lines().enumerate() {
        let line = line.split(';').next().unwrap_or("");
        for ch in line.chars() {
            if depth == 0 && ch.is_whitespace() {
                continue;
            }
            if depth == 0 {
                if ch != '(' {
                    return Err(usage(format!("line {}: expected '(' but found '{ch}'", i + 1)));
                }
                start_line = i + 1;
            }
            current.push(ch);
            match ch {
                '(' => depth += 1,
                ')' => {
                    depth -= 1;
                    if depth == 0 {
                        out.push((start_line, std::mem::take(&mut current)));
                    }
                }
                _ => {}
            }
        }
        if depth > 0 {
            current.push('\n');
        }
    }
    if depth > 0 {
        return Err(usage(format!("line {start_line}: unbalanced parentheses")));
    }
    if out.is_empty() {
        return Err(usage("no queries found"));
    }
    Ok(out)
}

fn load_queries(prov: &mut Provenance, path: &Path, period: Option<u64>) -> Result<Vec<Query>, Failure> {
    let src = prov.read_to_string(path).map_err(io(path))?;
    split_queries(&src)?
        .into_iter()
        .map(|(line, text)| {
            parse_query(&text, period).map_err(|e| match e {
                QueryError::Syntax { line: l, col, message } => usage(format!("{}:{}:{col}: {message}", path.display(), line + l - 1)),
                other => usage(format!("{}: {other}", path.display())),
            })
        })
        .collect()
}

pub fn cmd_query(prov: &mut Provenance, trace: &Path, query: &Path, period: Option<u64>, format: Format, out: Option<&Path>) -> Result<Outcome, Failure> {
    let tr = load_trace(prov, trace)?;
    let queries = load_queries(prov, query, period)?;
    let mut report = String::new();
    let mut all_hold = true;
    for q in &queries {
        let steps = steps_from_trace(&tr, &q.system).map_err(|e| usage(e.to_string()))?;
        let plain = unfold(q);
        let outcome = eval(&plain, &steps).map_err(|e| usage(e.to_string()))?;
        all_hold &= outcome.holds;
        match format {
            Format::Records => report.push_str(&outcome.records(&q.system)),
            Format::Text => {
                let _ = writeln!(report, "{plain}");
                if outcome.holds {
                    let _ = writeln!(
                        report,
                        "  holds on {} of {} steps{}",
                        outcome.checked,
                        outcome.steps,
                        if outcome.vacuous() { " (vacuously: no step was checked)" } else { "" }
                    );
                } else {
                    let _ = writeln!(report, "  fails at {} step(s)", outcome.failures);
                }
                if let Some(c) = &outcome.counterexample {
                    let vals: Vec<String> = c.valuation.iter().map(|(k, v)| format!("{k}={v}")).collect();
                    let _ = writeln!(report, "  counterexample: step {} at {}us: {}", c.step, c.time, vals.join(" "));
                }
            }
        }
    }
    emit(prov, out, if all_hold { EXIT_OK } else { EXIT_FAIL }, report)
}

pub fn cmd_unfold(prov: &mut Provenance, query: &Path, period: Option<u64>, out: Option<&Path>) -> Result<Outcome, Failure> {
    let queries = load_queries(prov, query, period)?;
    let mut report = String::new();
    for q in &queries {
        let plain = unfold(q);
        let _ = writeln!(report, "; unfolded\n{}", expand_intervals(q));
        let _ = writeln!(report, "; shifted by {}\n{plain}", plain.shift);
    }
    emit(prov, out, EXIT_OK, report)
}
