//! Reference semantics: interval operators evaluated recursively on the
//! step sequence, without unfolding or shifting.

use super::eval::{assumed, check_known, term_value, QueryOutcome, Steps};
use super::{Formula, Query, QueryError, Temporal};

/// Furthest forward step the formula actually samples, if it samples any.
fn reach(f: &Formula) -> Option<i64> {
    match f {
        Formula::Const(_) => None,
        Formula::Var(_) => Some(0),
        Formula::Cmp(_, a, b) => [a, b].iter().any(|t| matches!(t, super::Term::Var(_))).then_some(0),
        Formula::Not(x) => reach(x),
        Formula::And(xs) | Formula::Or(xs) => xs.iter().filter_map(reach).max(),
        Formula::Implies(a, b) => reach(a).max(reach(b)),
        Formula::Interval(_, w, body) => {
            let last = *w.offsets().last()?;
            reach(body).map(|r| r + i64::from(last))
        }
    }
}

fn holds_at(f: &Formula, j: i64, steps: &Steps) -> Option<bool> {
    Some(match f {
        Formula::Const(b) => *b,
        Formula::Var(v) => steps.get(j + v.offset, &v.name)?.as_bool(),
        Formula::Cmp(op, a, b) => op.holds(term_value(a, j, steps)?, term_value(b, j, steps)?),
        Formula::Not(x) => !holds_at(x, j, steps)?,
        Formula::And(xs) => {
            let vals: Option<Vec<bool>> = xs.iter().map(|x| holds_at(x, j, steps)).collect();
            vals?.into_iter().all(|b| b)
        }
        Formula::Or(xs) => {
            let vals: Option<Vec<bool>> = xs.iter().map(|x| holds_at(x, j, steps)).collect();
            vals?.into_iter().any(|b| b)
        }
        Formula::Implies(a, b) => {
            let (a, b) = (holds_at(a, j, steps)?, holds_at(b, j, steps)?);
            !a || b
        }
        Formula::Interval(op, w, body) => {
            let vals: Option<Vec<bool>> = w.offsets().into_iter().map(|o| holds_at(body, j + i64::from(o), steps)).collect();
            let vals = vals?;
            match op {
                Temporal::All => vals.into_iter().all(|b| b),
                Temporal::Some => vals.into_iter().any(|b| b),
            }
        }
    })
}

/// Judge the original formula at every anchor j whose window fits in the
/// trace, skipping anchor 0's counterpart the same way the unfolded form
/// does. Steps are reported at j + reach so they line up with `eval`.
pub fn eval_direct(q: &Query, steps: &Steps) -> Result<QueryOutcome, QueryError> {
    check_known(q.formula.vars().into_iter().chain(q.assumptions.iter().flat_map(|a| a.vars())), steps)?;
    let k = reach(&q.formula).unwrap_or(0);
    let n = steps.len() as i64;
    let first = (1 - k).max(0);
    let mut out = QueryOutcome {
        holds: true,
        steps: steps.len(),
        checked: 0,
        failures: 0,
        skipped_initial: (first + k).min(n) as usize,
        skipped_assumed: 0,
        skipped_undefined: 0,
        counterexample: None,
    };
    for j in first..(n - k).max(first) {
        match assumed(&q.assumptions, j, j + k, steps) {
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
        match holds_at(&q.formula, j, steps) {
            None => out.skipped_undefined += 1,
            Some(true) => out.checked += 1,
            Some(false) => {
                out.checked += 1;
                out.failures += 1;
                out.holds = false;
                if out.counterexample.is_none() {
                    let step = (j + k) as usize;
                    out.counterexample =
                        Some(super::Counterexample { step, time: steps.times[step], valuation: Default::default() });
                }
            }
        }
    }
    Ok(out)
}
