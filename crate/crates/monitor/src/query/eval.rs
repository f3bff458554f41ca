use std::collections::{BTreeMap, BTreeSet};

use qparch_sim::{EventKind, Trace, Value};

use super::{Formula, PlainQuery, QueryError, Term, VarRef};

/// Variable valuations at each firing of the reference node. A variable
/// keeps its last observed value until observed again.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Steps {
    pub times: Vec<u64>,
    pub values: Vec<BTreeMap<String, Value>>,
}

impl Steps {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn known(&self) -> BTreeSet<&str> {
        self.values.iter().flat_map(|m| m.keys().map(String::as_str)).collect()
    }

    pub fn get(&self, step: i64, name: &str) -> Option<Value> {
        let i = usize::try_from(step).ok()?;
        self.values.get(i)?.get(name).copied()
    }
}

/// Steps are the firings of `node`; values come from its OBSERVE events.
pub fn steps_from_trace(trace: &Trace, node: &str) -> Result<Steps, QueryError> {
    let mut steps = Steps::default();
    let mut carried: BTreeMap<String, Value> = BTreeMap::new();
    for e in trace.events.iter().filter(|e| &*e.node == node) {
        match e.kind {
            EventKind::StepStart => {
                steps.times.push(e.time);
                steps.values.push(carried.clone());
            }
            EventKind::Observe => {
                let Some((name, text)) = e.observation() else { continue };
                let Some(v) = Value::parse(text) else { continue };
                carried.insert(name.to_string(), v);
                if let Some(cur) = steps.values.last_mut() {
                    cur.insert(name.to_string(), v);
                }
            }
            _ => {}
        }
    }
    if steps.is_empty() && !trace.events.is_empty() {
        return Err(QueryError::UnknownNode(node.to_string()));
    }
    Ok(steps)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Counterexample {
    pub step: usize,
    pub time: u64,
    /// Referenced variables under their shifted names.
    pub valuation: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryOutcome {
    pub holds: bool,
    pub steps: usize,
    pub checked: usize,
    pub failures: usize,
    pub skipped_initial: usize,
    pub skipped_assumed: usize,
    pub skipped_undefined: usize,
    pub counterexample: Option<Counterexample>,
}

impl QueryOutcome {
    pub fn vacuous(&self) -> bool {
        self.checked == 0
    }

    pub fn records(&self, system: &str) -> String {
        let mut out = String::new();
        if let Some(c) = &self.counterexample {
            let vals: Vec<String> = c.valuation.iter().map(|(k, v)| format!("{k}={v}")).collect();
            out.push_str(&format!("ERROR\tQUERY\t{}:{}\t{system} fails at step {}: {}\n", c.step, c.time, c.step, vals.join(" ")));
        }
        if self.vacuous() {
            out.push_str("WARNING\tQUERY\t-\tno checkable step; holds vacuously\n");
        }
        out.push_str(&format!(
            "INFO\tQUERY\t-\t{system} {} steps={} checked={} failures={} skipped_initial={} skipped_assumed={} skipped_undefined={}\n",
            if self.holds { "holds" } else { "fails" },
            self.steps,
            self.checked,
            self.failures,
            self.skipped_initial,
            self.skipped_assumed,
            self.skipped_undefined
        ));
        out
    }
}

pub(crate) fn term_value(t: &Term, at: i64, steps: &Steps) -> Option<Value> {
    match t {
        Term::Var(v) => steps.get(at + v.offset, &v.name),
        Term::Num(x) => Some(Value::Float(*x)),
        Term::Bool(b) => Some(Value::Bool(*b)),
    }
}

/// `None` when a referenced value is missing.
fn truth(f: &Formula, at: i64, steps: &Steps) -> Option<bool> {
    Some(match f {
        Formula::Const(b) => *b,
        Formula::Var(v) => steps.get(at + v.offset, &v.name)?.as_bool(),
        Formula::Cmp(op, a, b) => op.holds(term_value(a, at, steps)?, term_value(b, at, steps)?),
        Formula::Not(x) => !truth(x, at, steps)?,
        Formula::And(xs) => {
            let mut all = true;
            for x in xs {
                all &= truth(x, at, steps)?;
            }
            all
        }
        Formula::Or(xs) => {
            let mut any = false;
            for x in xs {
                any |= truth(x, at, steps)?;
            }
            any
        }
        Formula::Implies(a, b) => !truth(a, at, steps)? || truth(b, at, steps)?,
        Formula::Interval(..) => unreachable!("plain formulas have no interval operators"),
    })
}

pub(crate) fn check_known<'a>(vars: impl Iterator<Item = &'a VarRef>, steps: &Steps) -> Result<(), QueryError> {
    if steps.is_empty() {
        return Ok(());
    }
    let known = steps.known();
    for v in vars {
        if !known.contains(v.name.as_str()) {
            return Err(QueryError::UnknownVariable(v.name.clone()));
        }
    }
    Ok(())
}

/// Assumptions hold at every step the formula looks at from `at`.
pub(crate) fn assumed(assumptions: &[Formula], from: i64, to: i64, steps: &Steps) -> Option<bool> {
    for j in from..=to {
        for a in assumptions {
            if !truth(a, j, steps)? {
                return Some(false);
            }
        }
    }
    Some(true)
}

/// Check the plain query at every step i in [max(shift, 1), n). Step 0 is
/// never judged, nor any step whose past window is incomplete.
pub fn eval(pq: &PlainQuery, steps: &Steps) -> Result<QueryOutcome, QueryError> {
    check_known(pq.formula.vars().into_iter().chain(pq.assumptions.iter().flat_map(|a| a.vars())), steps)?;
    let n = steps.len();
    let first = (pq.shift as usize).max(1);
    let mut out = QueryOutcome {
        holds: true,
        steps: n,
        checked: 0,
        failures: 0,
        skipped_initial: first.min(n),
        skipped_assumed: 0,
        skipped_undefined: 0,
        counterexample: None,
    };
    let shift = i64::from(pq.shift);
    for i in first..n {
        let at = i as i64;
        match assumed(&pq.assumptions, at - shift, at, steps) {
            None => {
                out.skipped_undefined += 1;
                continue;
            }
            Some(false) => {
                out.skipped_assumed += 1;
                continue;
            }
            Some(true) => {}
        }
        match truth(&pq.formula, at, steps) {
            None => out.skipped_undefined += 1,
            Some(true) => out.checked += 1,
            Some(false) => {
                out.checked += 1;
                out.failures += 1;
                out.holds = false;
                if out.counterexample.is_none() {
                    let valuation = pq
                        .formula
                        .vars()
                        .into_iter()
                        .filter_map(|v| Some((v.to_string(), steps.get(at + v.offset, &v.name)?)))
                        .collect();
                    out.counterexample = Some(Counterexample { step: i, time: steps.times[i], valuation });
                }
            }
        }
    }
    Ok(out)
}
