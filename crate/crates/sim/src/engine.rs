use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, VecDeque};
use std::sync::Arc;

use qparch_adl::{arch_hash, ArchitectureSpec, TopicSpec};
use qparch_analysis::{analyze, failure_detection_steps};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::step::{Input, Scenario, StepContext};
use crate::trace::{sanitize, EventKind, Flags, Trace, TraceEvent, TraceHeader};
use crate::value::{check_payload, default_payload, Payload};
use crate::{Jitter, Latency, SimConfig, SimError, TimeoutThreshold, RNG_NAME};

const ARRIVAL: u8 = 0;
const STEP_END: u8 = 1;
const FIRING: u8 = 2;

struct TopicRt {
    spec: TopicSpec,
    name: Arc<str>,
    default: Arc<Payload>,
    next_seq: u64,
}

#[derive(Clone)]
struct Envelope {
    seq: u64,
    payload: Arc<Payload>,
    flags: Flags,
    read: bool,
}

struct SubRt {
    local: String,
    topic: usize,
    latency: u64,
    queue: usize,
    mailbox: VecDeque<Envelope>,
    last_read: u64,
    last_arrival: Option<u64>,
    stale_run: u64,
    silence_limit: Option<u64>,
    detect_after: Option<u64>,
}

struct PubRt {
    local: String,
    topic: usize,
    current: Payload,
    targets: Vec<(usize, usize)>,
}

struct NodeRt {
    name: Arc<str>,
    gap_range: (u64, u64),
    wcet: u64,
    subs: Vec<SubRt>,
    pubs: Vec<PubRt>,
    halt: Option<u64>,
    last_fire: Option<u64>,
    jitter_rng: ChaCha8Rng,
    step_rng: ChaCha8Rng,
}

fn grid_range(what: &str, lo: u64, hi: u64, grid: u64) -> Result<(u64, u64), SimError> {
    let a = lo.div_ceil(grid) * grid;
    let b = hi / grid * grid;
    if a > b || b == 0 {
        return Err(SimError::OffGrid { what: what.into(), grid, lo, hi });
    }
    Ok((a, b))
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(id);
    r
}

struct Engine<'a> {
    cfg: &'a SimConfig,
    topics: Vec<TopicRt>,
    nodes: Vec<NodeRt>,
    heap: BinaryHeap<Reverse<(u64, u8, u64)>>,
    pending: HashMap<u64, (usize, usize, Envelope)>,
    next_key: u64,
    engine_rng: ChaCha8Rng,
    script: crate::Script,
    events: Vec<TraceEvent>,
    faulted: bool,
}

/// Simulate `spec` with the given step functions over [0, horizon).
/// Identical inputs give identical traces. A step fault or an ill-typed
/// publication ends the run with a FAULT event.
pub fn run(spec: &ArchitectureSpec, scenario: &mut Scenario, cfg: &SimConfig) -> Result<Trace, SimError> {
    if cfg.grid == 0 {
        return Err(SimError::ZeroGrid);
    }
    for name in scenario.keys() {
        if spec.node(name).is_none() {
            return Err(SimError::UnknownNode(name.clone()));
        }
    }
    let mut engine = Engine::build(spec, cfg)?;
    for n in &engine.nodes {
        if !scenario.contains_key(&*n.name) {
            return Err(SimError::UnboundNode(n.name.to_string()));
        }
    }
    engine.start()?;
    engine.main_loop(scenario)?;
    Ok(Trace {
        header: TraceHeader {
            seed: cfg.seed,
            grid: cfg.grid,
            rng: RNG_NAME.into(),
            arch_hash: arch_hash(spec),
            horizon: Some(cfg.horizon),
        },
        events: engine.events,
    })
}

impl<'a> Engine<'a> {
    fn build(spec: &ArchitectureSpec, cfg: &'a SimConfig) -> Result<Self, SimError> {
        let topics: Vec<TopicRt> = spec
            .topics
            .iter()
            .map(|t| TopicRt { spec: t.clone(), name: Arc::from(t.name.as_str()), default: Arc::new(default_payload(t)), next_seq: 1 })
            .collect();
        let topic_index = |node: &str, ident: &str| -> Result<usize, SimError> {
            let t = spec
                .resolve_topic(ident)
                .ok_or_else(|| SimError::UnresolvedTopic { node: node.into(), topic: ident.into() })?;
            Ok(spec.topics.iter().position(|x| x.name == t.name).unwrap())
        };
        // Channel parameters from the analysis: timeout threshold and k.
        let reports = analyze(spec).map_err(|e| match e {
            qparch_analysis::AnalysisError::UnresolvedTopic { node, topic, .. } => SimError::UnresolvedTopic { node, topic },
            other => SimError::Channel(other.to_string()),
        })?;
        let mut specs: Vec<_> = spec.nodes.iter().collect();
        specs.sort_by(|a, b| a.name.cmp(&b.name));
        let mut nodes = Vec::with_capacity(specs.len());
        for (i, n) in specs.iter().enumerate() {
            let gap_range = grid_range(&format!("period of {}", n.name), n.period_min.max(1), n.period_max, cfg.grid)?;
            let mut subs = Vec::new();
            for s in &n.subscriptions {
                let topic = topic_index(&n.name, &s.topic)?;
                let channels: Vec<_> = reports
                    .iter()
                    .filter(|r| r.channel.subscriber() == n.name && r.channel.topic() == spec.topics[topic].name)
                    .collect();
                let silence_limit = channels
                    .iter()
                    .map(|r| {
                        let period = match cfg.timeout_threshold {
                            TimeoutThreshold::PubMax => r.channel.pub_max(),
                            TimeoutThreshold::PubMin => r.channel.pub_min(),
                        };
                        period + r.channel.latency()
                    })
                    .max();
                let detect_after = channels.iter().map(|r| failure_detection_steps(&r.channel)).max();
                subs.push(SubRt {
                    local: s.local_name.clone(),
                    topic,
                    latency: s.max_latency,
                    queue: s.buffer_capacity.max(1) as usize,
                    mailbox: VecDeque::new(),
                    last_read: 0,
                    last_arrival: None,
                    stale_run: 0,
                    silence_limit,
                    detect_after,
                });
            }
            let mut pubs = Vec::new();
            for p in &n.publications {
                let topic = topic_index(&n.name, &p.topic)?;
                pubs.push(PubRt { local: p.local_name.clone(), topic, current: (*topics[topic].default).clone(), targets: Vec::new() });
            }
            nodes.push(NodeRt {
                name: Arc::from(n.name.as_str()),
                gap_range,
                wcet: n.wcet.unwrap_or(0),
                subs,
                pubs,
                halt: cfg.halts.get(&n.name).copied(),
                last_fire: None,
                jitter_rng: stream(cfg.seed, 2 * i as u64 + 1),
                step_rng: stream(cfg.seed, 2 * i as u64 + 2),
            });
        }
        // Wire publications to subscriber mailboxes.
        let mut wiring = Vec::new();
        for (ni, n) in nodes.iter().enumerate() {
            for (pi, p) in n.pubs.iter().enumerate() {
                for (mi, m) in nodes.iter().enumerate() {
                    for (si, s) in m.subs.iter().enumerate() {
                        if s.topic == p.topic {
                            wiring.push((ni, pi, mi, si));
                        }
                    }
                }
            }
        }
        for (ni, pi, mi, si) in wiring {
            let latency = nodes[mi].subs[si].latency;
            if cfg.latency != Latency::Script {
                grid_range(&format!("latency of {}.{}", nodes[mi].name, nodes[mi].subs[si].local), 1, latency, cfg.grid)?;
            }
            nodes[ni].pubs[pi].targets.push((mi, si));
        }
        Ok(Engine {
            cfg,
            topics,
            nodes,
            heap: BinaryHeap::new(),
            pending: HashMap::new(),
            next_key: 0,
            engine_rng: stream(cfg.seed, 0),
            script: cfg.script.clone(),
            events: Vec::new(),
            faulted: false,
        })
    }

    fn start(&mut self) -> Result<(), SimError> {
        let grid = self.cfg.grid;
        for i in 0..self.nodes.len() {
            let n = &mut self.nodes[i];
            let offset = match self.cfg.offsets.get(&*n.name) {
                Some(&o) => o,
                None if self.cfg.jitter == Jitter::Uniform => {
                    let slots = n.gap_range.0.div_ceil(grid).max(1);
                    grid * n.jitter_rng.gen_range(0..slots)
                }
                None => 0,
            };
            self.heap.push(Reverse((offset, FIRING, i as u64)));
        }
        Ok(())
    }

    fn emit(&mut self, time: u64, kind: EventKind, node: usize, topic: Option<Arc<str>>, seq: Option<u64>, flags: Option<Flags>) {
        let node = self.nodes[node].name.clone();
        self.events.push(TraceEvent { time, kind, node, topic, seq, flags });
    }

    fn main_loop(&mut self, scenario: &mut Scenario) -> Result<(), SimError> {
        while let Some(Reverse((t, class, key))) = self.heap.pop() {
            if t >= self.cfg.horizon {
                break;
            }
            match class {
                ARRIVAL => self.arrive(t, key),
                STEP_END => self.emit(t, EventKind::StepEnd, key as usize, None, None, None),
                _ => self.fire(t, key as usize, scenario)?,
            }
            if self.faulted {
                break;
            }
        }
        Ok(())
    }

    fn arrive(&mut self, t: u64, key: u64) {
        let (ni, si, env) = self.pending.remove(&key).expect("pending arrival");
        let topic = self.topics[self.nodes[ni].subs[si].topic].name.clone();
        self.emit(t, EventKind::Arrive, ni, Some(topic.clone()), Some(env.seq), Some(env.flags));
        let sub = &mut self.nodes[ni].subs[si];
        sub.last_arrival = Some(t);
        sub.mailbox.push_back(env);
        if sub.mailbox.len() > sub.queue {
            let evicted = sub.mailbox.pop_front().unwrap();
            if !evicted.read {
                self.emit(t, EventKind::Drop, ni, Some(topic), Some(evicted.seq), None);
            }
        }
    }

    fn draw_gap(&mut self, ni: usize) -> Result<u64, SimError> {
        let grid = self.cfg.grid;
        let n = &mut self.nodes[ni];
        let (lo, hi) = n.gap_range;
        Ok(match self.cfg.jitter {
            Jitter::Uniform => lo + grid * n.jitter_rng.gen_range(0..=(hi - lo) / grid),
            Jitter::FixedMin => lo,
            Jitter::FixedMax => hi,
            Jitter::Script => {
                let what = format!("gap of {}", n.name);
                let v = self
                    .script
                    .gaps
                    .get_mut(&*n.name)
                    .and_then(|q| q.pop_front())
                    .ok_or_else(|| SimError::ScriptUnderrun(what.clone()))?;
                let (pmin, pmax) = (lo, hi);
                if v < pmin || v > pmax {
                    return Err(SimError::ScriptOutOfBounds { what, value: v, lo: pmin, hi: pmax });
                }
                v
            }
        })
    }

    fn draw_latency(&mut self, topic: &str, mi: usize, si: usize) -> Result<u64, SimError> {
        let grid = self.cfg.grid;
        let bound = self.nodes[mi].subs[si].latency;
        Ok(match self.cfg.latency {
            Latency::Uniform => grid * self.engine_rng.gen_range(1..=bound / grid),
            Latency::Fixed => bound / grid * grid,
            Latency::Script => {
                let key = (topic.to_string(), self.nodes[mi].name.to_string());
                let what = format!("latency of {} to {}", key.0, key.1);
                let v = self
                    .script
                    .latencies
                    .get_mut(&key)
                    .and_then(|q| q.pop_front())
                    .ok_or_else(|| SimError::ScriptUnderrun(what.clone()))?;
                if v == 0 || v > bound {
                    return Err(SimError::ScriptOutOfBounds { what, value: v, lo: 1, hi: bound });
                }
                v
            }
        })
    }

    fn fire(&mut self, t: u64, ni: usize, scenario: &mut Scenario) -> Result<(), SimError> {
        if self.nodes[ni].halt.is_some_and(|h| h <= t) {
            return Ok(());
        }
        self.emit(t, EventKind::StepStart, ni, None, None, None);
        let mut inputs = Vec::with_capacity(self.nodes[ni].subs.len());
        for si in 0..self.nodes[ni].subs.len() {
            let topic_idx = self.nodes[ni].subs[si].topic;
            let topic = self.topics[topic_idx].name.clone();
            let sub = &mut self.nodes[ni].subs[si];
            let mut read = Vec::new();
            for env in sub.mailbox.iter_mut() {
                if env.seq > sub.last_read {
                    env.read = true;
                    read.push(env.seq);
                }
            }
            if let Some(&m) = read.iter().max() {
                sub.last_read = m;
            }
            let stale = read.is_empty();
            let silence = t - sub.last_arrival.unwrap_or(0);
            let timeout = stale && sub.silence_limit.is_some_and(|lim| silence > lim);
            let flags = Flags { stale, timeout };
            let mut declare = false;
            if stale {
                if sub.last_arrival.is_some() {
                    sub.stale_run += 1;
                    declare = self.cfg.detect_failures && sub.detect_after == Some(sub.stale_run);
                }
            } else {
                sub.stale_run = 0;
            }
            let latest = sub.mailbox.back().map(|e| e.payload.clone()).unwrap_or_else(|| self.topics[topic_idx].default.clone());
            let history = sub.mailbox.iter().map(|e| e.payload.clone()).collect();
            inputs.push(Input { local_name: sub.local.clone(), topic: topic.clone(), latest, history, flags, fresh: read.len() });
            for seq in read {
                self.emit(t, EventKind::Read, ni, Some(topic.clone()), Some(seq), None);
            }
            self.emit(t, EventKind::Flags, ni, Some(topic.clone()), None, Some(flags));
            if declare {
                self.emit(t, EventKind::FailureDeclared, ni, Some(topic), None, None);
            }
        }
        let name = self.nodes[ni].name.clone();
        let step = scenario.get_mut(&*name).expect("bound node");
        let previous_firing = self.nodes[ni].last_fire;
        let output = {
            let mut ctx = StepContext { now: t, previous_firing, node: &name, inputs: &inputs, rng: &mut self.nodes[ni].step_rng };
            step.step(&mut ctx)
        };
        self.nodes[ni].last_fire = Some(t);
        if let Some(reason) = output.fault {
            self.fault(t, ni, &reason);
            return Ok(());
        }
        if let Some(unknown) = output.values.keys().find(|k| !self.nodes[ni].pubs.iter().any(|p| &p.local == *k)) {
            let reason = format!("no publication '{unknown}'");
            self.fault(t, ni, &reason);
            return Ok(());
        }
        let in_flags = inputs.iter().fold(Flags::CLEAR, |acc, i| acc.or(i.flags));
        for pi in 0..self.nodes[ni].pubs.len() {
            let p = &mut self.nodes[ni].pubs[pi];
            if let Some(update) = output.values.get(&p.local) {
                p.current.extend(update.iter().map(|(k, v)| (k.clone(), *v)));
            }
            let topic_idx = p.topic;
            if let Err(why) = check_payload(&self.topics[topic_idx].spec, &p.current) {
                self.fault(t, ni, &why);
            return Ok(());
            }
            let flags = output.overrides.get(&p.local).map_or(in_flags, |o| o.apply(in_flags));
            let payload = Arc::new(p.current.clone());
            let targets = p.targets.clone();
            let seq = self.topics[topic_idx].next_seq;
            self.topics[topic_idx].next_seq += 1;
            let topic = self.topics[topic_idx].name.clone();
            self.emit(t, EventKind::Publish, ni, Some(topic.clone()), Some(seq), Some(flags));
            for (mi, si) in targets {
                let latency = self.draw_latency(&topic, mi, si)?;
                let key = self.next_key;
                self.next_key += 1;
                self.pending.insert(key, (mi, si, Envelope { seq, payload: payload.clone(), flags, read: false }));
                self.heap.push(Reverse((t + latency, ARRIVAL, key)));
            }
        }
        for (var, value) in &output.observations {
            let text: Arc<str> = Arc::from(format!("{}={}", sanitize(var).replace('=', "_"), value));
            self.emit(t, EventKind::Observe, ni, Some(text), None, None);
        }
        let wcet = self.nodes[ni].wcet;
        self.heap.push(Reverse((t + wcet, STEP_END, ni as u64)));
        if t + self.nodes[ni].gap_range.0 < self.cfg.horizon {
            let gap = self.draw_gap(ni)?;
            self.heap.push(Reverse((t + gap, FIRING, ni as u64)));
        }
        Ok(())
    }

    fn fault(&mut self, t: u64, ni: usize, reason: &str) {
        self.emit(t, EventKind::Fault, ni, Some(Arc::from(sanitize(reason))), None, None);
        self.faulted = true;
    }
}
