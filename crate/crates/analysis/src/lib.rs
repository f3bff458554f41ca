//! Analytic guarantees for one publisher→subscriber channel of a
//! quasi-periodic architecture. All arithmetic is in integer microseconds
//! and every inequality is strict.

pub mod explore;

use std::fmt;

use qparch_adl::{ArchitectureSpec, Finding, Loc};

/// One publisher→subscriber edge of a topic.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Channel {
    publisher: String,
    subscriber: String,
    topic: String,
    latency: u64,
    pub_min: u64,
    pub_max: u64,
    sub_min: u64,
    sub_max: u64,
    queue: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ChannelError {
    #[error("{0} must be positive")]
    NonPositive(&'static str),
    #[error("{0} min exceeds max")]
    InvertedPeriod(&'static str),
}

impl Channel {
    /// Periods must be positive with min ≤ max and the queue at least one.
    /// A zero latency bound is accepted as a limiting case.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        publisher: &str,
        subscriber: &str,
        topic: &str,
        latency: u64,
        (pub_min, pub_max): (u64, u64),
        (sub_min, sub_max): (u64, u64),
        queue: u64,
    ) -> Result<Self, ChannelError> {
        for (v, what) in [(pub_min, "publisher period"), (sub_min, "subscriber period"), (queue, "queue length")] {
            if v == 0 {
                return Err(ChannelError::NonPositive(what));
            }
        }
        if pub_min > pub_max {
            return Err(ChannelError::InvertedPeriod("publisher period"));
        }
        if sub_min > sub_max {
            return Err(ChannelError::InvertedPeriod("subscriber period"));
        }
        Ok(Channel {
            publisher: publisher.into(),
            subscriber: subscriber.into(),
            topic: topic.into(),
            latency,
            pub_min,
            pub_max,
            sub_min,
            sub_max,
            queue,
        })
    }

    /// Anonymous channel, handy for arithmetic checks.
    pub fn timing(latency: u64, pub_period: (u64, u64), sub_period: (u64, u64), queue: u64) -> Result<Self, ChannelError> {
        Channel::new("pub", "sub", "topic", latency, pub_period, sub_period, queue)
    }

    pub fn publisher(&self) -> &str {
        &self.publisher
    }
    pub fn subscriber(&self) -> &str {
        &self.subscriber
    }
    pub fn topic(&self) -> &str {
        &self.topic
    }
    pub fn latency(&self) -> u64 {
        self.latency
    }
    pub fn pub_min(&self) -> u64 {
        self.pub_min
    }
    pub fn pub_max(&self) -> u64 {
        self.pub_max
    }
    pub fn sub_min(&self) -> u64 {
        self.sub_min
    }
    pub fn sub_max(&self) -> u64 {
        self.sub_max
    }
    pub fn queue(&self) -> u64 {
        self.queue
    }

    pub fn with_queue(&self, queue: u64) -> Result<Self, ChannelError> {
        Channel::new(&self.publisher, &self.subscriber, &self.topic, self.latency, (self.pub_min, self.pub_max), (self.sub_min, self.sub_max), queue)
    }

    pub fn with_latency(&self, latency: u64) -> Self {
        Channel { latency, ..self.clone() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoOvertaking {
    pub holds: bool,
    /// pub_min − L
    pub margin: i64,
}

pub fn no_overtaking(ch: &Channel) -> NoOvertaking {
    NoOvertaking { holds: ch.pub_min > ch.latency, margin: ch.pub_min as i64 - ch.latency as i64 }
}

/// Smallest M with M·pub_min > L + sub_max.
pub fn loss_window(ch: &Channel) -> u64 {
    (ch.latency + ch.sub_max) / ch.pub_min + 1
}

/// max(M − Q, 0)
pub fn consecutive_loss_bound(ch: &Channel) -> u64 {
    loss_window(ch).saturating_sub(ch.queue)
}

/// Strict upper bound on read time minus publish time: L + pub_max.
pub fn age_bound(ch: &Channel) -> u64 {
    ch.latency + ch.pub_max
}

/// A message published at t is read by t + L + sub_max unless superseded.
pub fn processing_latency_bound(ch: &Channel) -> u64 {
    ch.latency + ch.sub_max
}

/// Smallest k with k·sub_min > L + pub_max.
pub fn failure_detection_steps(ch: &Channel) -> u64 {
    (ch.latency + ch.pub_max) / ch.sub_min + 1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChannelBounds {
    pub no_overtaking: bool,
    pub loss_window: u64,
    pub max_consecutive_loss: u64,
    pub max_age: u64,
    pub max_processing_latency: u64,
    pub failure_detection_steps: u64,
}

impl ChannelBounds {
    /// Loss and age bounds assume no overtaking; without it they are
    /// reported but conditional.
    pub fn conditional(&self) -> bool {
        !self.no_overtaking
    }
}

pub fn bounds(ch: &Channel) -> ChannelBounds {
    ChannelBounds {
        no_overtaking: no_overtaking(ch).holds,
        loss_window: loss_window(ch),
        max_consecutive_loss: consecutive_loss_bound(ch),
        max_age: age_bound(ch),
        max_processing_latency: processing_latency_bound(ch),
        failure_detection_steps: failure_detection_steps(ch),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelReport {
    pub channel: Channel,
    pub bounds: ChannelBounds,
    /// Where the subscription is declared.
    pub loc: Loc,
}

impl ChannelReport {
    /// `CHANNEL pub sub topic L pub_min pub_max sub_min sub_max Q | NO_OVERTAKE b | M m | LOSS l | AGE a | PROC p | DETECT k`
    pub fn record(&self) -> String {
        let c = &self.channel;
        let b = &self.bounds;
        format!(
            "CHANNEL {} {} {} {} {} {} {} {} {} | NO_OVERTAKE {} | M {} | LOSS {} | AGE {} | PROC {} | DETECT {}",
            c.publisher,
            c.subscriber,
            c.topic,
            c.latency,
            c.pub_min,
            c.pub_max,
            c.sub_min,
            c.sub_max,
            c.queue,
            b.no_overtaking,
            b.loss_window,
            b.max_consecutive_loss,
            b.max_age,
            b.max_processing_latency,
            b.failure_detection_steps
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AnalysisError {
    #[error("subscription {node}.{local} names unresolved topic '{topic}'")]
    UnresolvedTopic { node: String, local: String, topic: String },
    #[error("channel {publisher}->{subscriber} on '{topic}': {source}")]
    InvalidChannel { publisher: String, subscriber: String, topic: String, source: ChannelError },
}

/// One entry per (publisher, subscriber, topic), ordered by that triple.
pub fn analyze(spec: &ArchitectureSpec) -> Result<Vec<ChannelReport>, AnalysisError> {
    let mut out = Vec::new();
    for sub_node in &spec.nodes {
        for sub in &sub_node.subscriptions {
            let topic = spec.resolve_topic(&sub.topic).ok_or_else(|| AnalysisError::UnresolvedTopic {
                node: sub_node.name.clone(),
                local: sub.local_name.clone(),
                topic: sub.topic.clone(),
            })?;
            let publishers = spec.nodes.iter().filter(|n| {
                n.publications.iter().any(|p| spec.resolve_topic(&p.topic).is_some_and(|t| t.name == topic.name))
            });
            for p in publishers {
                let ch = Channel::new(
                    &p.name,
                    &sub_node.name,
                    &topic.name,
                    sub.max_latency,
                    (p.period_min, p.period_max),
                    (sub_node.period_min, sub_node.period_max),
                    sub.buffer_capacity,
                )
                .map_err(|source| AnalysisError::InvalidChannel {
                    publisher: p.name.clone(),
                    subscriber: sub_node.name.clone(),
                    topic: topic.name.clone(),
                    source,
                })?;
                let bounds = bounds(&ch);
                out.push(ChannelReport { channel: ch, bounds, loc: sub.loc });
            }
        }
    }
    out.sort_by(|a, b| {
        let key = |r: &ChannelReport| (r.channel.publisher.clone(), r.channel.subscriber.clone(), r.channel.topic.clone());
        key(a).cmp(&key(b))
    });
    Ok(out)
}

pub fn report_records(reports: &[ChannelReport]) -> String {
    reports.iter().map(|r| r.record() + "\n").collect()
}

/// NOT_APPLICABLE warnings for channels whose loss and age bounds are
/// conditional on an overtaking-free schedule.
pub fn findings(reports: &[ChannelReport]) -> Vec<Finding> {
    reports
        .iter()
        .filter(|r| r.bounds.conditional())
        .map(|r| {
            let c = &r.channel;
            Finding::warning(
                "NOT_APPLICABLE",
                r.loc,
                format!(
                    "{}->{} on '{}': pub_min {}us <= L {}us, overtaking possible; loss and age bounds are conditional",
                    c.publisher, c.subscriber, c.topic, c.pub_min, c.latency
                ),
            )
        })
        .collect()
}

impl fmt::Display for ChannelReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = &self.channel;
        let b = &self.bounds;
        write!(
            f,
            "{:<12} -> {:<12} {:<18} L={}us pub={}..{}us sub={}..{}us Q={}  no_overtaking={}{} M={} loss<={} age<{}us proc<={}us detect k={}",
            c.publisher,
            c.subscriber,
            c.topic,
            c.latency,
            c.pub_min,
            c.pub_max,
            c.sub_min,
            c.sub_max,
            c.queue,
            b.no_overtaking,
            if b.conditional() { " (bounds conditional)" } else { "" },
            b.loss_window,
            b.max_consecutive_loss,
            b.max_age,
            b.max_processing_latency,
            b.failure_detection_steps
        )
    }
}
