//! Deterministic discrete-event simulation of an architecture: jittered
//! node firings, bounded-latency delivery, bounded mailboxes, staleness
//! and timeout flags. Time is integer microseconds on a grid.

mod engine;
pub mod step;
pub mod trace;
pub mod value;

use std::collections::{BTreeMap, VecDeque};

pub use engine::run;
pub use step::{idle_scenario, FlagOverride, Idle, Input, Scenario, StepContext, StepFunction, StepOutput};
pub use trace::{EventKind, Flags, Trace, TraceError, TraceEvent, TraceHeader};
pub use value::{check_payload, check_value, default_payload, Payload, Value};

pub const RNG_NAME: &str = "chacha8";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Jitter {
    #[default]
    Uniform,
    FixedMin,
    FixedMax,
    /// Gaps taken from `Script::gaps`.
    Script,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Latency {
    /// Uniform over the grid points of (0, L].
    #[default]
    Uniform,
    /// Always L (rounded down to the grid).
    Fixed,
    Script,
}

/// Which publisher period the silence threshold for timeouts uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TimeoutThreshold {
    #[default]
    PubMax,
    PubMin,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Script {
    /// node → successive inter-firing gaps
    pub gaps: BTreeMap<String, VecDeque<u64>>,
    /// (topic, subscriber) → successive latencies
    pub latencies: BTreeMap<(String, String), VecDeque<u64>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimConfig {
    pub seed: u64,
    /// Events are simulated over [0, horizon).
    pub horizon: u64,
    pub grid: u64,
    pub jitter: Jitter,
    pub latency: Latency,
    pub script: Script,
    /// First firing time per node; unlisted nodes start uniformly in
    /// [0, period_min) under uniform jitter and at 0 otherwise.
    pub offsets: BTreeMap<String, u64>,
    /// Nodes that stop firing from the given time on.
    pub halts: BTreeMap<String, u64>,
    /// Emit FAILURE_DECLARED after k consecutive stale firings.
    pub detect_failures: bool,
    pub timeout_threshold: TimeoutThreshold,
}

impl SimConfig {
    pub fn new(seed: u64, horizon: u64) -> Self {
        SimConfig {
            seed,
            horizon,
            grid: 1,
            jitter: Jitter::Uniform,
            latency: Latency::Uniform,
            script: Script::default(),
            offsets: BTreeMap::new(),
            halts: BTreeMap::new(),
            detect_failures: false,
            timeout_threshold: TimeoutThreshold::PubMax,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SimError {
    #[error("node '{0}' has no step function")]
    UnboundNode(String),
    #[error("step function bound to unknown node '{0}'")]
    UnknownNode(String),
    #[error("node '{node}': '{topic}' does not name a topic")]
    UnresolvedTopic { node: String, topic: String },
    #[error("{0}")]
    Channel(String),
    #[error("grid must be positive")]
    ZeroGrid,
    #[error("{what}: no {grid}us grid point in [{lo}, {hi}]")]
    OffGrid { what: String, grid: u64, lo: u64, hi: u64 },
    #[error("script exhausted: {0}")]
    ScriptUnderrun(String),
    #[error("script value {value} for {what} outside [{lo}, {hi}]")]
    ScriptOutOfBounds { what: String, value: u64, lo: u64, hi: u64 },
}
