//! Exhaustive exploration of every schedule a single channel admits on a
//! discrete time grid. Used as a reference against the closed-form bounds:
//! it knows nothing about them, it only plays the channel rules forward.
//!
//! Per grid tick: in-flight messages arrive first, then the publisher and
//! subscriber may fire. A publication picks any latency in (0, L] on the
//! grid. First firings happen anywhere in [0, period_max].

use std::collections::{HashMap, VecDeque};

use crate::{no_overtaking, Channel};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExploreError {
    #[error("grid must be positive")]
    ZeroGrid,
    #[error("latency bound {latency}us admits no delivery on a {grid}us grid")]
    NoDelivery { latency: u64, grid: u64 },
    #[error("{0} period has no grid point inside its bounds")]
    EmptyPeriod(&'static str),
    #[error("channel allows overtaking on this grid; exploration assumes in-order delivery")]
    Overtaking,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Clock {
    /// Not fired yet; the value is the current tick.
    Waiting(u32),
    /// Ticks since the last firing.
    Since(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct State {
    publisher: Clock,
    subscriber: Clock,
    /// Ticks until the in-flight message lands; 0 when nothing is in flight.
    in_flight: u32,
    buffered: u32,
    /// Unread messages are always the newest `unread` buffered entries.
    unread: u32,
    loss_run: u32,
    stale_run: u32,
    delivered_once: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Step {
    publish_latency: Option<u32>,
    subscriber_fires: bool,
}

/// A concrete schedule, in microseconds from time zero.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Schedule {
    /// (publish time, latency)
    pub publications: Vec<(u64, u64)>,
    pub subscriber_firings: Vec<u64>,
    /// Time of the tick at which the target situation is reached.
    pub reached_at: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Exploration {
    pub grid: u64,
    pub horizon: u64,
    pub states: usize,
    /// Longest run of consecutive unread-and-evicted messages.
    pub max_consecutive_loss: u32,
    pub loss_witness: Option<Schedule>,
    /// Longest run of subscriber firings that found nothing new, counted
    /// once the first message has landed.
    pub max_stale_firings: u32,
    pub stale_witness: Option<Schedule>,
}

struct Ticks {
    pub_min: u32,
    pub_max: u32,
    sub_min: u32,
    sub_max: u32,
    latency: u32,
    queue: u32,
}

const RUN_CAP: u32 = 255;

fn ticks(ch: &Channel, grid: u64) -> Result<Ticks, ExploreError> {
    if grid == 0 {
        return Err(ExploreError::ZeroGrid);
    }
    let to_ticks = |v: u64| u32::try_from(v).unwrap_or(u32::MAX);
    let pub_min = to_ticks(ch.pub_min().div_ceil(grid));
    let pub_max = to_ticks(ch.pub_max() / grid);
    let sub_min = to_ticks(ch.sub_min().div_ceil(grid));
    let sub_max = to_ticks(ch.sub_max() / grid);
    let latency = to_ticks(ch.latency() / grid);
    if pub_min > pub_max || pub_max == 0 {
        return Err(ExploreError::EmptyPeriod("publisher"));
    }
    if sub_min > sub_max || sub_max == 0 {
        return Err(ExploreError::EmptyPeriod("subscriber"));
    }
    if latency == 0 {
        return Err(ExploreError::NoDelivery { latency: ch.latency(), grid });
    }
    if !no_overtaking(ch).holds || pub_min <= latency {
        return Err(ExploreError::Overtaking);
    }
    Ok(Ticks { pub_min, pub_max, sub_min, sub_max, latency, queue: to_ticks(ch.queue()) })
}

/// Options a clock has at the current tick: (may fire, must fire).
fn clock_options(clock: Clock, min: u32, max: u32) -> (bool, bool) {
    match clock {
        Clock::Waiting(t) => (t <= max, t == max),
        Clock::Since(s) => {
            let gap = s + 1;
            (gap >= min && gap <= max, gap >= max)
        }
    }
}

fn advance(clock: Clock, fired: bool) -> Clock {
    match (clock, fired) {
        (_, true) => Clock::Since(0),
        (Clock::Waiting(t), false) => Clock::Waiting(t + 1),
        (Clock::Since(s), false) => Clock::Since(s + 1),
    }
}

fn successors(s: &State, tk: &Ticks, out: &mut Vec<(State, Step)>) {
    out.clear();
    let mut base = *s;
    if base.in_flight > 0 {
        base.in_flight -= 1;
        if base.in_flight == 0 {
            base.delivered_once = true;
            base.buffered += 1;
            base.unread += 1;
            if base.buffered > tk.queue {
                // The oldest entry is unread only when every entry is.
                if base.unread > tk.queue {
                    base.loss_run = (base.loss_run + 1).min(RUN_CAP);
                    base.unread -= 1;
                }
                base.buffered -= 1;
            }
        }
    }
    let (pub_may, pub_must) = clock_options(s.publisher, tk.pub_min, tk.pub_max);
    let (sub_may, sub_must) = clock_options(s.subscriber, tk.sub_min, tk.sub_max);
    let pub_choices: Vec<Option<u32>> = {
        let mut v = Vec::new();
        if !pub_must {
            v.push(None);
        }
        if pub_may {
            debug_assert_eq!(base.in_flight, 0);
            v.extend((1..=tk.latency).map(Some));
        }
        v
    };
    let sub_choices: &[bool] = match (sub_may, sub_must) {
        (_, true) => &[true],
        (true, false) => &[false, true],
        (false, false) => &[false],
    };
    for &publish_latency in &pub_choices {
        for &subscriber_fires in sub_choices {
            let mut n = base;
            n.publisher = advance(s.publisher, publish_latency.is_some());
            n.subscriber = advance(s.subscriber, subscriber_fires);
            if let Some(l) = publish_latency {
                n.in_flight = l;
            }
            if subscriber_fires {
                if n.unread > 0 {
                    n.unread = 0;
                    n.loss_run = 0;
                    n.stale_run = 0;
                } else if n.delivered_once {
                    n.stale_run = (n.stale_run + 1).min(RUN_CAP);
                }
            }
            out.push((n, Step { publish_latency, subscriber_fires }));
        }
    }
}

/// Explore every schedule over [0, horizon) on the given grid.
pub fn explore(ch: &Channel, grid: u64, horizon: u64) -> Result<Exploration, ExploreError> {
    let tk = ticks(ch, grid)?;
    let horizon_ticks = u32::try_from(horizon / grid).unwrap_or(u32::MAX);
    let start = State {
        publisher: Clock::Waiting(0),
        subscriber: Clock::Waiting(0),
        in_flight: 0,
        buffered: 0,
        unread: 0,
        loss_run: 0,
        stale_run: 0,
        delivered_once: false,
    };
    // state -> (depth, parent)
    let mut seen: HashMap<State, (u32, Option<(State, Step)>)> = HashMap::new();
    seen.insert(start, (0, None));
    let mut queue = VecDeque::from([start]);
    let mut best_loss = (0u32, start);
    let mut best_stale = (0u32, start);
    let mut buf = Vec::new();
    while let Some(s) = queue.pop_front() {
        let depth = seen[&s].0;
        if s.loss_run > best_loss.0 {
            best_loss = (s.loss_run, s);
        }
        if s.stale_run > best_stale.0 {
            best_stale = (s.stale_run, s);
        }
        if depth >= horizon_ticks {
            continue;
        }
        successors(&s, &tk, &mut buf);
        for &(n, step) in &buf {
            if let std::collections::hash_map::Entry::Vacant(e) = seen.entry(n) {
                e.insert((depth + 1, Some((s, step))));
                queue.push_back(n);
            }
        }
    }
    let witness = |target: (u32, State)| -> Option<Schedule> {
        if target.0 == 0 {
            return None;
        }
        let mut steps = Vec::new();
        let mut cur = target.1;
        while let Some((parent, step)) = seen[&cur].1 {
            steps.push(step);
            cur = parent;
        }
        steps.reverse();
        let mut sched = Schedule::default();
        for (tick, step) in steps.iter().enumerate() {
            let t = tick as u64 * grid;
            if let Some(l) = step.publish_latency {
                sched.publications.push((t, l as u64 * grid));
            }
            if step.subscriber_fires {
                sched.subscriber_firings.push(t);
            }
        }
        sched.reached_at = (steps.len() as u64).saturating_sub(1) * grid;
        Some(sched)
    };
    Ok(Exploration {
        grid,
        horizon,
        states: seen.len(),
        max_consecutive_loss: best_loss.0,
        loss_witness: witness(best_loss),
        max_stale_firings: best_stale.0,
        stale_witness: witness(best_stale),
    })
}

/// Replay a schedule against the channel rules and return the longest run
/// of consecutive lost sequence numbers. Independent of the explorer's
/// state encoding; used to double-check witnesses.
pub fn replay_loss(schedule: &Schedule, queue: usize) -> u32 {
    #[derive(PartialEq)]
    enum Ev {
        Arrive(usize),
        Fire,
    }
    let mut events: Vec<(u64, u8, Ev)> = Vec::new();
    for (i, &(t, l)) in schedule.publications.iter().enumerate() {
        events.push((t + l, 0, Ev::Arrive(i)));
    }
    for &t in &schedule.subscriber_firings {
        events.push((t, 1, Ev::Fire));
    }
    events.sort_by_key(|e| (e.0, e.1));
    let mut mailbox: VecDeque<(usize, bool)> = VecDeque::new();
    let mut dropped = vec![false; schedule.publications.len()];
    for (_, _, ev) in events {
        match ev {
            Ev::Arrive(i) => {
                mailbox.push_back((i, false));
                if mailbox.len() > queue {
                    let (old, was_read) = mailbox.pop_front().unwrap();
                    if !was_read {
                        dropped[old] = true;
                    }
                }
            }
            Ev::Fire => {
                for m in mailbox.iter_mut() {
                    m.1 = true;
                }
            }
        }
    }
    let (mut best, mut run) = (0, 0);
    for &lost in &dropped {
        if lost {
            run += 1;
            best = best.max(run);
        } else {
            run = 0;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_rate_channel_never_loses() {
        let ch = Channel::timing(1_000, (50_000, 50_000), (50_000, 50_000), 1).unwrap();
        let ex = explore(&ch, 1_000, 1_000_000).unwrap();
        assert_eq!(ex.max_consecutive_loss, 0);
        assert!(ex.loss_witness.is_none());
    }

    #[test]
    fn fast_publisher_loses_up_to_bound() {
        // pub every 2 ticks, sub every 5, L 1: M = (1 + 5) / 2 + 1 = 4, Q 1 -> 3.
        let ch = Channel::timing(1, (2, 2), (5, 5), 1).unwrap();
        let ex = explore(&ch, 1, 60).unwrap();
        assert!(ex.max_consecutive_loss <= 3);
        let w = ex.loss_witness.unwrap();
        assert_eq!(replay_loss(&w, 1), ex.max_consecutive_loss);
    }

    #[test]
    fn rejects_unusable_grids() {
        let ch = Channel::timing(1_000, (50_000, 50_000), (50_000, 50_000), 1).unwrap();
        assert_eq!(explore(&ch, 0, 10).unwrap_err(), ExploreError::ZeroGrid);
        assert!(matches!(explore(&ch, 2_000, 10).unwrap_err(), ExploreError::NoDelivery { .. }));
        let over = Channel::timing(5, (5, 5), (5, 5), 1).unwrap();
        assert_eq!(explore(&over, 1, 10).unwrap_err(), ExploreError::Overtaking);
    }
}
