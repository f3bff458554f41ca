//! The contract between the engine and user step functions.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand_chacha::ChaCha8Rng;

use crate::trace::Flags;
use crate::value::{Payload, Value};

/// What one subscription looks like at a firing.
#[derive(Debug, Clone)]
pub struct Input {
    pub local_name: String,
    pub topic: Arc<str>,
    /// Newest buffered payload, or the topic defaults before anything arrived.
    pub latest: Arc<Payload>,
    /// Buffered payloads, oldest first, at most the queue length.
    pub history: Vec<Arc<Payload>>,
    pub flags: Flags,
    /// Envelopes read by this firing.
    pub fresh: usize,
}

impl Input {
    pub fn get(&self, field: &str) -> Option<Value> {
        self.latest.get(field).copied()
    }
}

pub struct StepContext<'a> {
    pub now: u64,
    pub previous_firing: Option<u64>,
    pub node: &'a str,
    pub inputs: &'a [Input],
    pub rng: &'a mut ChaCha8Rng,
}

impl StepContext<'_> {
    pub fn input(&self, local_name: &str) -> Option<&Input> {
        self.inputs.iter().find(|i| i.local_name == local_name)
    }

    pub fn value(&self, local_name: &str, field: &str) -> Option<Value> {
        self.input(local_name)?.get(field)
    }
}

/// Explicit turn-on / turn-off of outgoing flag bits.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FlagOverride {
    pub stale: Option<bool>,
    pub timeout: Option<bool>,
}

impl FlagOverride {
    pub fn apply(self, flags: Flags) -> Flags {
        Flags { stale: self.stale.unwrap_or(flags.stale), timeout: self.timeout.unwrap_or(flags.timeout) }
    }
}

/// Field updates per publication. Fields not set keep their previous
/// published value, as an output struct would.
#[derive(Debug, Clone, Default)]
pub struct StepOutput {
    pub values: BTreeMap<String, Payload>,
    pub overrides: BTreeMap<String, FlagOverride>,
    pub observations: Vec<(String, Value)>,
    pub fault: Option<String>,
}

impl StepOutput {
    pub fn set(&mut self, publication: &str, field: &str, value: impl Into<Value>) -> &mut Self {
        self.values.entry(publication.to_string()).or_default().insert(field.to_string(), value.into());
        self
    }

    pub fn observe(&mut self, name: &str, value: impl Into<Value>) -> &mut Self {
        self.observations.push((name.to_string(), value.into()));
        self
    }

    pub fn override_flags(&mut self, publication: &str, flags: FlagOverride) -> &mut Self {
        self.overrides.insert(publication.to_string(), flags);
        self
    }

    pub fn fault(msg: impl Into<String>) -> Self {
        StepOutput { fault: Some(msg.into()), ..Default::default() }
    }
}

pub trait StepFunction {
    fn step(&mut self, ctx: &mut StepContext<'_>) -> StepOutput;
}

impl<F> StepFunction for F
where
    F: FnMut(&mut StepContext<'_>) -> StepOutput,
{
    fn step(&mut self, ctx: &mut StepContext<'_>) -> StepOutput {
        self(ctx)
    }
}

/// Publishes whatever it published last (initially the topic defaults).
#[derive(Debug, Clone, Copy, Default)]
pub struct Idle;

impl StepFunction for Idle {
    fn step(&mut self, _: &mut StepContext<'_>) -> StepOutput {
        StepOutput::default()
    }
}

/// Node name → step function with its private state.
pub type Scenario = BTreeMap<String, Box<dyn StepFunction>>;

/// Every node of the spec bound to `Idle`.
pub fn idle_scenario(spec: &qparch_adl::ArchitectureSpec) -> Scenario {
    spec.nodes.iter().map(|n| (n.name.clone(), Box::new(Idle) as Box<dyn StepFunction>)).collect()
}
